#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adco/contrast.hpp"
#include "adco/matrix.hpp"

namespace adco {

struct GradcheckConfig {
  std::uint64_t seed = 20250601;
  int adversary_instances = 100;  // N=8, K=16, d=8, tau cycling {0.02, 0.12, 1}
  int query_key_instances = 100;
  int encoder_instances = 20;     // dims [8, 16, 4]
  int alt_loss_instances = 100;
  double fd_step = 1e-5;
};

struct GradcheckFamily {
  std::string name;
  int instances = 0;
  double max_error = 0.0;  // worst relative error above the absolute floor
  double tolerance = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckFamily> families;

  bool all_pass() const;
  std::string to_csv() const;
  std::string to_text() const;
};

// Injection point so a test can corrupt one analytic route and confirm the
// suite notices; production callers use the defaults.
struct GradRoutines {
  std::function<Matrix(const ContrastResult&, const Matrix&)> adversary;
  std::function<QueryKeyGrads(const ContrastResult&, const Matrix&, const Matrix&,
                              const Matrix&)>
      query_key;
  std::function<Matrix(const Matrix&, const Matrix&)> alt_loss;

  static GradRoutines defaults();
};

// Runs every finite-difference comparison backing the analytic gradients:
// adversary (bank rows), query, key, full encoder chain, and the alternative
// loss. Pure given the config.
GradcheckReport gradcheck_suite(const GradcheckConfig& config = {});
GradcheckReport gradcheck_suite(const GradcheckConfig& config, const GradRoutines& routines);

}  // namespace adco
