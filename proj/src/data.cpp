#include "adco/data.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adco/errors.hpp"
#include "adco/numerics.hpp"

namespace adco {

void LabeledDataset::validate() const {
  if (samples.rows() != labels.size())
    throw ConfigError("dataset: sample/label count mismatch");
  if (num_classes <= 0) throw ConfigError("dataset: num_classes must be positive");
  for (int l : labels)
    if (l < 0 || l >= num_classes)
      throw ConfigError("dataset: label out of range [0, num_classes)");
}

void AugmentPolicy::validate() const {
  if (!(jitter_sigma >= 0.0)) throw ConfigError("augment.jitter_sigma must be >= 0");
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi))
    throw ConfigError("augment.scale range must satisfy 0 < lo <= hi");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0))
    throw ConfigError("augment.dropout_prob must be in [0, 1)");
}

void GaussianMixtureSpec::validate() const {
  if (num_classes <= 0 || per_class <= 0) throw ConfigError("mixture: counts must be positive");
  if (dim < 2) throw ConfigError("mixture: dim must be >= 2");
  if (!(cluster_sigma > 0.0)) throw ConfigError("mixture: cluster_sigma must be positive");
  if (!(separation > 0.0)) throw ConfigError("mixture: separation must be positive");
}

namespace {

Matrix draw_centers(const GaussianMixtureSpec& spec, SeededRng rng) {
  Matrix centers(spec.num_classes, spec.dim);
  for (int c = 0; c < spec.num_classes; ++c) {
    SeededRng class_rng = rng.child(static_cast<std::uint64_t>(c));
    std::vector<double> dir(spec.dim);
    for (double& v : dir) v = class_rng.next_gaussian();
    auto unit = l2_normalize(dir);
    for (int j = 0; j < spec.dim; ++j)
      centers.at(c, j) = spec.separation * unit[j];
  }
  return centers;
}

LabeledDataset sample_mixture(const GaussianMixtureSpec& spec, const Matrix& centers,
                              SeededRng sample_rng) {
  LabeledDataset ds;
  ds.num_classes = spec.num_classes;
  ds.samples = Matrix(static_cast<std::size_t>(spec.num_classes) * spec.per_class, spec.dim);
  ds.labels.resize(ds.samples.rows());
  std::size_t row = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    SeededRng class_rng = sample_rng.child(static_cast<std::uint64_t>(c));
    for (int s = 0; s < spec.per_class; ++s) {
      SeededRng item_rng = class_rng.child(static_cast<std::uint64_t>(s));
      for (int j = 0; j < spec.dim; ++j)
        ds.samples.at(row, j) = centers.at(c, j) + spec.cluster_sigma * item_rng.next_gaussian();
      ds.labels[row] = c;
      ++row;
    }
  }
  return ds;
}

}  // namespace

LabeledDataset gaussian_mixture(const GaussianMixtureSpec& spec, std::uint64_t seed) {
  spec.validate();
  SeededRng root(seed);
  const Matrix centers = draw_centers(spec, root.child(0));
  return sample_mixture(spec, centers, root.child(1));
}

std::pair<LabeledDataset, LabeledDataset> gaussian_mixture_split(
    const GaussianMixtureSpec& spec, int test_per_class, std::uint64_t seed) {
  spec.validate();
  if (test_per_class <= 0) throw ConfigError("mixture: test_per_class must be positive");
  SeededRng root(seed);
  const Matrix centers = draw_centers(spec, root.child(0));
  GaussianMixtureSpec test_spec = spec;
  test_spec.per_class = test_per_class;
  return {sample_mixture(spec, centers, root.child(1)),
          sample_mixture(test_spec, centers, root.child(2))};
}

namespace {

std::vector<double> one_view(std::span<const double> x, const AugmentPolicy& policy,
                             SeededRng rng) {
  std::vector<double> v(x.begin(), x.end());
  const double s = rng.next_uniform(policy.scale_lo, policy.scale_hi);
  for (double& value : v) value *= s;
  if (policy.jitter_sigma > 0.0)
    for (double& value : v) value += policy.jitter_sigma * rng.next_gaussian();
  if (policy.dropout_prob > 0.0)
    for (double& value : v)
      if (rng.next_double() < policy.dropout_prob) value = 0.0;
  return v;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> two_views(
    std::span<const double> x, const AugmentPolicy& policy, const SeededRng& item_rng) {
  policy.validate();
  for (double v : x)
    if (!std::isfinite(v)) throw NumericError("two_views: non-finite input");
  return {one_view(x, policy, item_rng.child(0)), one_view(x, policy, item_rng.child(1))};
}

namespace {

double parse_double_field(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("line " + std::to_string(line_no) + ": bad numeric field '" +
                     std::string(field) + "'");
  return value;
}

int parse_label_field(std::string_view field, std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError("line " + std::to_string(line_no) + ": bad label '" +
                     std::string(field) + "'");
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

LabeledDataset load_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  bool skipped = !skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!skipped) {
      skipped = true;
      continue;
    }
    const std::string_view stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split_fields(stripped);
    if (fields.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": need features and a label");
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " columns, got " +
                       std::to_string(fields.size()));
    }
    std::vector<double> features(width - 1);
    for (std::size_t j = 0; j + 1 < width; ++j)
      features[j] = parse_double_field(trim(fields[j]), line_no);
    labels.push_back(parse_label_field(trim(fields.back()), line_no));
    rows.push_back(std::move(features));
  }
  if (rows.empty()) throw ParseError("load_csv: no data rows in " + path);

  LabeledDataset ds;
  ds.samples = Matrix(rows.size(), width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) ds.samples.set_row(i, rows[i]);
  ds.labels = std::move(labels);
  int max_label = 0;
  for (int l : ds.labels) {
    // -1 is the unlabeled convention used by bank exports
    if (l < -1) throw ParseError("load_csv: label below -1 in " + path);
    max_label = std::max(max_label, l);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

void save_csv(const Matrix& features, const std::vector<int>& labels,
              const std::string& path) {
  if (features.rows() != labels.size())
    throw ShapeError("save_csv: row/label count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("save_csv: cannot open " + path + " for writing");
  char buf[32];
  for (std::size_t i = 0; i < features.rows(); ++i) {
    std::string line;
    for (std::size_t j = 0; j < features.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), features.at(i, j));
      assert(ec == std::errc{});
      line.append(buf, ptr);
      line.push_back(',');
    }
    line.append(std::to_string(labels[i]));
    line.push_back('\n');
    out << line;
  }
  if (!out) throw IoError("save_csv: write failed for " + path);
}

std::vector<std::size_t> epoch_order(std::size_t count, SeededRng rng) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  // Fisher-Yates with the counter-based stream
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = rng.next_u64() % i;
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace adco
