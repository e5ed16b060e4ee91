#include "adco/gradcheck.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "adco/encoder.hpp"
#include "adco/errors.hpp"
#include "adco/numerics.hpp"
#include "adco/rng.hpp"
#include "adco/trainer.hpp"

namespace adco {
namespace {

constexpr double kTaus[] = {0.02, 0.12, 1.0};

Matrix random_unit_rows(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.next_gaussian();
  l2_normalize_rows(m);
  return m;
}

std::vector<double> flatten(const Matrix& m) {
  return {m.flat().begin(), m.flat().end()};
}

Matrix unflatten(std::span<const double> flat, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  std::copy(flat.begin(), flat.end(), m.flat().begin());
  return m;
}

// fd of info_nce with respect to the full bank; evaluated off the sphere, so
// norm checks are disabled.
double adversary_family(const GradcheckConfig& cfg, const GradRoutines& routines) {
  SeededRng rng(cfg.seed);
  double worst = 0.0;
  for (int t = 0; t < cfg.adversary_instances; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(8, 8, inst);
    const Matrix keys = random_unit_rows(8, 8, inst);
    const Matrix bank = random_unit_rows(16, 8, inst);
    const double tau = kTaus[t % 3];

    const ContrastResult res = info_nce(queries, keys, bank, tau);
    const Matrix analytic = routines.adversary(res, queries);

    const auto f = [&](std::span<const double> flat) {
      return info_nce(queries, keys, unflatten(flat, bank.rows(), bank.cols()), tau,
                      NormCheck::off)
          .loss;
    };
    const std::vector<double> numeric = finite_diff_grad(f, flatten(bank), cfg.fd_step);
    worst = std::max(worst, max_grad_error(flatten(analytic), numeric));
  }
  return worst;
}

std::pair<double, double> query_key_family(const GradcheckConfig& cfg,
                                           const GradRoutines& routines) {
  SeededRng rng(cfg.seed + 1);
  double worst_q = 0.0, worst_k = 0.0;
  for (int t = 0; t < cfg.query_key_instances; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(8, 8, inst);
    const Matrix keys = random_unit_rows(8, 8, inst);
    const Matrix bank = random_unit_rows(16, 8, inst);
    const double tau = kTaus[t % 3];

    const ContrastResult res = info_nce(queries, keys, bank, tau);
    const QueryKeyGrads analytic = routines.query_key(res, queries, keys, bank);

    const auto f_q = [&](std::span<const double> flat) {
      return info_nce(unflatten(flat, queries.rows(), queries.cols()), keys, bank, tau,
                      NormCheck::off)
          .loss;
    };
    const auto f_k = [&](std::span<const double> flat) {
      return info_nce(queries, unflatten(flat, keys.rows(), keys.cols()), bank, tau,
                      NormCheck::off)
          .loss;
    };
    worst_q = std::max(worst_q,
                       max_grad_error(flatten(analytic.d_queries),
                                      finite_diff_grad(f_q, flatten(queries), cfg.fd_step)));
    worst_k = std::max(worst_k,
                       max_grad_error(flatten(analytic.d_keys),
                                      finite_diff_grad(f_k, flatten(keys), cfg.fd_step)));
  }
  return {worst_q, worst_k};
}

double encoder_family(const GradcheckConfig& cfg) {
  SeededRng rng(cfg.seed + 2);
  const std::vector<std::size_t> dims = {8, 16, 4};
  double worst = 0.0;
  for (int t = 0; t < cfg.encoder_instances; ++t) {
    SeededRng inst = rng.child(t);
    MlpEncoder encoder = MlpEncoder::init(dims, inst.child(0));
    SeededRng data_rng = inst.child(1);
    Matrix view_a(8, dims.front());
    Matrix view_b(8, dims.front());
    for (double& v : view_a.flat()) v = data_rng.next_gaussian();
    for (double& v : view_b.flat()) v = data_rng.next_gaussian();
    SeededRng bank_rng = inst.child(2);
    const Matrix bank = random_unit_rows(16, dims.back(), bank_rng);
    const double tau = kTaus[t % 3];

    ForwardTape tape_a, tape_b;
    const Matrix emb_a = encoder.forward(view_a, &tape_a);
    const Matrix emb_b = encoder.forward(view_b, &tape_b);
    const ContrastResult res = info_nce(emb_a, emb_b, bank, tau);
    const QueryKeyGrads qk = query_grad(res, emb_a, emb_b, bank);
    const EncoderGrads analytic =
        encoder_grads_for_views(encoder, tape_a, tape_b, qk.d_queries, qk.d_keys, false);

    std::vector<double> analytic_flat;
    std::vector<double> params_flat;
    for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
      for (double v : analytic.weights[l].flat()) analytic_flat.push_back(v);
      for (double v : analytic.biases[l].flat()) analytic_flat.push_back(v);
      for (double v : encoder.weights()[l].flat()) params_flat.push_back(v);
      for (double v : encoder.biases()[l].flat()) params_flat.push_back(v);
    }

    const auto f = [&](std::span<const double> flat) {
      std::vector<Matrix> weights, biases;
      std::size_t offset = 0;
      for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix w(dims[l], dims[l + 1]);
        std::copy_n(flat.begin() + offset, w.size(), w.flat().begin());
        offset += w.size();
        Matrix b(1, dims[l + 1]);
        std::copy_n(flat.begin() + offset, b.size(), b.flat().begin());
        offset += b.size();
        weights.push_back(std::move(w));
        biases.push_back(std::move(b));
      }
      const MlpEncoder probe =
          MlpEncoder::from_parameters(dims, std::move(weights), std::move(biases));
      return info_nce(probe.forward(view_a), probe.forward(view_b), bank, tau).loss;
    };
    const std::vector<double> numeric = finite_diff_grad(f, params_flat, cfg.fd_step);
    worst = std::max(worst, max_grad_error(analytic_flat, numeric));
  }
  return worst;
}

double alt_loss_family(const GradcheckConfig& cfg, const GradRoutines& routines) {
  SeededRng rng(cfg.seed + 3);
  double worst = 0.0;
  for (int t = 0; t < cfg.alt_loss_instances; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(8, 8, inst);
    const Matrix bank = random_unit_rows(16, 8, inst);
    const double tau = kTaus[t % 3];

    const AltLossResult res = alt_loss_j(queries, bank, tau);
    const Matrix analytic = routines.alt_loss(res.probs, queries);

    const auto f = [&](std::span<const double> flat) {
      return alt_loss_j(queries, unflatten(flat, bank.rows(), bank.cols()), tau,
                        NormCheck::off)
          .value;
    };
    const std::vector<double> numeric = finite_diff_grad(f, flatten(bank), cfg.fd_step);
    worst = std::max(worst, max_grad_error(flatten(analytic), numeric));
  }
  return worst;
}

GradcheckFamily make_family(std::string name, int instances, double err, double tol) {
  GradcheckFamily f;
  f.name = std::move(name);
  f.instances = instances;
  f.max_error = err;
  f.tolerance = tol;
  f.pass = err <= tol;
  return f;
}

}  // namespace

GradRoutines GradRoutines::defaults() {
  GradRoutines r;
  r.adversary = [](const ContrastResult& res, const Matrix& q) {
    return adversary_grad(res, q);
  };
  r.query_key = [](const ContrastResult& res, const Matrix& q, const Matrix& k,
                   const Matrix& b) { return query_grad(res, q, k, b); };
  r.alt_loss = [](const Matrix& probs, const Matrix& q) { return alt_loss_grad(probs, q); };
  return r;
}

bool GradcheckReport::all_pass() const {
  for (const auto& f : families)
    if (!f.pass) return false;
  return true;
}

std::string GradcheckReport::to_csv() const {
  std::string out = "family,instances,max_rel_error,tolerance,pass\n";
  char buf[64];
  for (const auto& f : families) {
    std::snprintf(buf, sizeof(buf), "%.3e,%.0e,%d\n", f.max_error, f.tolerance,
                  f.pass ? 1 : 0);
    out += f.name + "," + std::to_string(f.instances) + "," + buf;
  }
  return out;
}

std::string GradcheckReport::to_text() const {
  std::ostringstream out;
  for (const auto& f : families) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-10s %4d instances  max_rel_err %.3e  tol %.0e  %s\n",
                  f.name.c_str(), f.instances, f.max_error, f.tolerance,
                  f.pass ? "PASS" : "FAIL");
    out << buf;
  }
  return out.str();
}

GradcheckReport gradcheck_suite(const GradcheckConfig& config) {
  return gradcheck_suite(config, GradRoutines::defaults());
}

GradcheckReport gradcheck_suite(const GradcheckConfig& config, const GradRoutines& routines) {
  GradcheckReport report;
  report.families.push_back(make_family(
      "adversary", config.adversary_instances, adversary_family(config, routines), 1e-5));
  const auto [worst_q, worst_k] = query_key_family(config, routines);
  report.families.push_back(
      make_family("query", config.query_key_instances, worst_q, 1e-5));
  report.families.push_back(make_family("key", config.query_key_instances, worst_k, 1e-5));
  report.families.push_back(
      make_family("encoder", config.encoder_instances, encoder_family(config), 1e-4));
  report.families.push_back(make_family(
      "alt_loss", config.alt_loss_instances, alt_loss_family(config, routines), 1e-5));
  return report;
}

}  // namespace adco
