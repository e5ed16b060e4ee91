#include "adco/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adco/errors.hpp"

namespace adco {
namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
  throw ConfigError("config field '" + path + "': " + why);
}

// Typed extraction with field-path diagnostics.
template <typename T>
T get_as(const json& node, const std::string& path);

template <>
double get_as<double>(const json& node, const std::string& path) {
  if (!node.is_number()) bad_field(path, "expected a number");
  return node.get<double>();
}
template <>
int get_as<int>(const json& node, const std::string& path) {
  if (!node.is_number_integer()) bad_field(path, "expected an integer");
  return node.get<int>();
}
template <>
std::uint64_t get_as<std::uint64_t>(const json& node, const std::string& path) {
  if (!node.is_number_unsigned() && !node.is_number_integer())
    bad_field(path, "expected a nonnegative integer");
  if (node.is_number_integer() && node.get<std::int64_t>() < 0)
    bad_field(path, "expected a nonnegative integer");
  return node.get<std::uint64_t>();
}
template <>
bool get_as<bool>(const json& node, const std::string& path) {
  if (!node.is_boolean()) bad_field(path, "expected true/false");
  return node.get<bool>();
}
template <>
std::string get_as<std::string>(const json& node, const std::string& path) {
  if (!node.is_string()) bad_field(path, "expected a string");
  return node.get<std::string>();
}

class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) bad_field(path_, "expected an object");
    for (const auto& item : node_.items()) unseen_.insert(unseen_.end(), item.key());
  }

  ~Section() = default;

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  void fetch(const std::string& key, T& out) {
    if (!node_.contains(key)) return;
    mark(key);
    out = get_as<T>(node_.at(key), path_ + key);
  }

  void fetch_optional_string(const std::string& key, std::optional<std::string>& out) {
    if (!node_.contains(key)) return;
    mark(key);
    out = get_as<std::string>(node_.at(key), path_ + key);
  }

  const json* sub(const std::string& key) {
    if (!node_.contains(key)) return nullptr;
    mark(key);
    return &node_.at(key);
  }

  void finish() const {
    for (const auto& key : unseen_)
      bad_field(path_ + key, "unknown field");
  }

 private:
  void mark(const std::string& key) { std::erase(unseen_, key); }

  const json& node_;
  std::string path_;
  std::vector<std::string> unseen_;
};

void parse_mixture(const json& node, const std::string& path, GaussianMixtureSpec& spec) {
  Section s(node, path);
  s.fetch("num_classes", spec.num_classes);
  s.fetch("per_class", spec.per_class);
  s.fetch("dim", spec.dim);
  s.fetch("cluster_sigma", spec.cluster_sigma);
  s.fetch("separation", spec.separation);
  s.finish();
}

void parse_augment(const json& node, const std::string& path, AugmentPolicy& policy) {
  Section s(node, path);
  s.fetch("jitter_sigma", policy.jitter_sigma);
  s.fetch("scale_lo", policy.scale_lo);
  s.fetch("scale_hi", policy.scale_hi);
  s.fetch("dropout_prob", policy.dropout_prob);
  s.finish();
}

void parse_data(const json& node, DataConfig& data) {
  Section s(node, "data.");
  if (const json* m = s.sub("mixture")) parse_mixture(*m, "data.mixture.", data.mixture);
  if (const json* a = s.sub("augment")) parse_augment(*a, "data.augment.", data.augment);
  s.fetch("test_per_class", data.test_per_class);
  s.fetch_optional_string("train_csv", data.train_csv);
  s.fetch_optional_string("test_csv", data.test_csv);
  s.finish();
}

void parse_loss(const json& node, LossConfig& loss) {
  Section s(node, "loss.");
  s.fetch("tau_net", loss.tau_net);
  s.fetch("tau_adv", loss.tau_adv);
  s.fetch("symmetric", loss.symmetric);
  s.finish();
}

void parse_sgd(const json& node, const std::string& path, SgdConfig& cfg) {
  Section s(node, path);
  s.fetch("lr", cfg.lr_base);
  s.fetch("momentum", cfg.momentum);
  s.fetch("weight_decay", cfg.weight_decay);
  s.finish();
}

void parse_negatives(const json& node, NegativesConfig& cfg) {
  Section s(node, "negatives.");
  if (s.has("mode")) {
    std::string mode;
    s.fetch("mode", mode);
    cfg.mode = negatives_mode_from_string(mode);
  }
  if (s.has("bank_size")) {
    int k = 0;
    s.fetch("bank_size", k);
    if (k <= 0) bad_field("negatives.bank_size", "must be positive");
    cfg.bank_size = static_cast<std::size_t>(k);
  }
  s.fetch("lr", cfg.update.lr);
  s.fetch("momentum", cfg.update.momentum);
  s.fetch("weight_decay", cfg.update.weight_decay);
  if (s.has("update_mode")) {
    std::string mode;
    s.fetch("update_mode", mode);
    if (mode == "renormalize")
      cfg.update.mode = BankUpdateMode::renormalize;
    else if (mode == "tangent")
      cfg.update.mode = BankUpdateMode::tangent;
    else
      bad_field("negatives.update_mode", "expected 'renormalize' or 'tangent'");
  }
  s.finish();
}

void parse_train(const json& node, TrainConfig& cfg) {
  Section s(node, "train.");
  s.fetch("epochs", cfg.epochs);
  s.fetch("batch_size", cfg.batch_size);
  s.fetch("checkpoint_every_epochs", cfg.checkpoint_every_epochs);
  s.fetch("refresh_embeddings", cfg.refresh_embeddings);
  s.fetch("stop_gradient_key", cfg.stop_gradient_key);
  if (s.has("schedule_granularity")) {
    std::string g;
    s.fetch("schedule_granularity", g);
    if (g == "step")
      cfg.granularity = ScheduleGranularity::step;
    else if (g == "epoch")
      cfg.granularity = ScheduleGranularity::epoch;
    else
      bad_field("train.schedule_granularity", "expected 'step' or 'epoch'");
  }
  s.finish();
}

void parse_eval(const json& node, EvalConfig& cfg) {
  Section s(node, "eval.");
  s.fetch("probe_epochs", cfg.probe.epochs);
  s.fetch("probe_lr", cfg.probe.lr);
  s.fetch("knn_k", cfg.knn_k);
  s.finish();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (encoder_dims.size() < 2) throw ConfigError("encoder_dims needs at least two entries");
  for (std::size_t d : encoder_dims)
    if (d == 0) throw ConfigError("encoder_dims entries must be positive");
  if (!data.train_csv) {
    data.mixture.validate();
    if (data.test_per_class <= 0) throw ConfigError("data.test_per_class must be positive");
    if (static_cast<std::size_t>(data.mixture.dim) != encoder_dims.front())
      throw ConfigError("encoder_dims[0] must equal data.mixture.dim");
  }
  data.augment.validate();
  loss.validate();
  optimizer_net.validate();
  if (!(negatives.update.lr >= 0.0)) throw ConfigError("negatives.lr must be >= 0");
  if (!(negatives.update.momentum >= 0.0 && negatives.update.momentum < 1.0))
    throw ConfigError("negatives.momentum must be in [0,1)");
  if (!(negatives.update.weight_decay >= 0.0))
    throw ConfigError("negatives.weight_decay must be >= 0");
  if (negatives.bank_size == 0) throw ConfigError("negatives.bank_size must be positive");
  if (train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (negatives.mode == NegativesMode::in_batch && train.batch_size < 2)
    throw ConfigError("train.batch_size must be >= 2 for in_batch negatives");
  if (train.checkpoint_every_epochs < 0)
    throw ConfigError("train.checkpoint_every_epochs must be >= 0");
  if (eval.probe.epochs <= 0 || !(eval.probe.lr > 0.0))
    throw ConfigError("eval.probe settings must be positive");
  if (eval.knn_k < 1) throw ConfigError("eval.knn_k must be >= 1");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  Section s(root, "");
  s.fetch("seed", cfg.seed);
  if (const json* n = s.sub("data")) parse_data(*n, cfg.data);
  if (const json* n = s.sub("encoder_dims")) {
    if (!n->is_array() || n->size() < 2) bad_field("encoder_dims", "expected an array of widths");
    cfg.encoder_dims.clear();
    for (std::size_t i = 0; i < n->size(); ++i) {
      const int v = get_as<int>(n->at(i), "encoder_dims[" + std::to_string(i) + "]");
      if (v <= 0) bad_field("encoder_dims[" + std::to_string(i) + "]", "must be positive");
      cfg.encoder_dims.push_back(static_cast<std::size_t>(v));
    }
  }
  if (const json* n = s.sub("loss")) parse_loss(*n, cfg.loss);
  if (const json* n = s.sub("optimizer")) parse_sgd(*n, "optimizer.", cfg.optimizer_net);
  if (const json* n = s.sub("negatives")) parse_negatives(*n, cfg.negatives);
  if (const json* n = s.sub("train")) parse_train(*n, cfg.train);
  if (const json* n = s.sub("eval")) parse_eval(*n, cfg.eval);
  s.finish();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string apply_config_overrides(const std::string& json_text,
                                   const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  for (const std::string& entry : overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + entry + "' is not of the form key.path=value");
    const std::string path = entry.substr(0, eq);
    const std::string value = entry.substr(eq + 1);
    json* node = &root;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (key.empty()) throw ConfigError("override '" + entry + "' has an empty path segment");
      if (dot == std::string::npos) {
        json parsed = json::parse(value, nullptr, false);
        (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
  return root.dump();
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  json root;
  root["seed"] = cfg.seed;
  json mixture{{"num_classes", cfg.data.mixture.num_classes},
               {"per_class", cfg.data.mixture.per_class},
               {"dim", cfg.data.mixture.dim},
               {"cluster_sigma", cfg.data.mixture.cluster_sigma},
               {"separation", cfg.data.mixture.separation}};
  json augment{{"jitter_sigma", cfg.data.augment.jitter_sigma},
               {"scale_lo", cfg.data.augment.scale_lo},
               {"scale_hi", cfg.data.augment.scale_hi},
               {"dropout_prob", cfg.data.augment.dropout_prob}};
  root["data"] = {{"mixture", mixture},
                  {"augment", augment},
                  {"test_per_class", cfg.data.test_per_class}};
  if (cfg.data.train_csv) root["data"]["train_csv"] = *cfg.data.train_csv;
  if (cfg.data.test_csv) root["data"]["test_csv"] = *cfg.data.test_csv;
  root["encoder_dims"] = cfg.encoder_dims;
  root["loss"] = {{"tau_net", cfg.loss.tau_net},
                  {"tau_adv", cfg.loss.tau_adv},
                  {"symmetric", cfg.loss.symmetric}};
  root["optimizer"] = {{"lr", cfg.optimizer_net.lr_base},
                       {"momentum", cfg.optimizer_net.momentum},
                       {"weight_decay", cfg.optimizer_net.weight_decay}};
  root["negatives"] = {
      {"mode", to_string(cfg.negatives.mode)},
      {"bank_size", cfg.negatives.bank_size},
      {"lr", cfg.negatives.update.lr},
      {"momentum", cfg.negatives.update.momentum},
      {"weight_decay", cfg.negatives.update.weight_decay},
      {"update_mode",
       cfg.negatives.update.mode == BankUpdateMode::renormalize ? "renormalize" : "tangent"}};
  root["train"] = {{"epochs", cfg.train.epochs},
                   {"batch_size", cfg.train.batch_size},
                   {"schedule_granularity",
                    cfg.train.granularity == ScheduleGranularity::step ? "step" : "epoch"},
                   {"checkpoint_every_epochs", cfg.train.checkpoint_every_epochs},
                   {"refresh_embeddings", cfg.train.refresh_embeddings},
                   {"stop_gradient_key", cfg.train.stop_gradient_key}};
  root["eval"] = {{"probe_epochs", cfg.eval.probe.epochs},
                  {"probe_lr", cfg.eval.probe.lr},
                  {"knn_k", cfg.eval.knn_k}};
  return root.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config, bool mask_bank_size) {
  ExperimentConfig masked = config;
  if (mask_bank_size) masked.negatives.bank_size = 1;
  const std::string text = resolved_config_json(masked);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace adco
