/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "goldfish/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "goldfish/error.h"

namespace goldfish::exp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// Shortest decimal form that reads back to the same double.
std::string fmt_double(double d) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, d);
    if (std::stod(buf) == d) break;
  }
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define GF_SIZE(name)                                                                  \
  Field {                                                                              \
#name, [](ExperimentConfig& c, const std::string& v) { c.name = to_size(#name, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }               \
  }
#define GF_DOUBLE(name, member)                                                            \
  Field {                                                                                  \
    name, [](ExperimentConfig& c, const std::string& v) { c.member = to_double(name, v); }, \
        [](const ExperimentConfig& c) { return fmt_double(c.member); }                     \
  }
#define GF_BOOL(name, member)                                                            \
  Field {                                                                                \
    name, [](ExperimentConfig& c, const std::string& v) { c.member = to_bool(name, v); }, \
        [](const ExperimentConfig& c) { return fmt_bool(c.member); }                     \
  }
#define GF_STRING(name)                                                       \
  Field {                                                                     \
#name, [](ExperimentConfig& c, const std::string& v) { c.name = v; },        \
        [](const ExperimentConfig& c) { return c.name; }                      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"dataset",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "synthetic") {
           c.dataset = DatasetSource::kSynthetic;
         } else if (v == "idx") {
           c.dataset = DatasetSource::kIdx;
         } else {
           throw ConfigError("dataset: expected synthetic or idx, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.dataset == DatasetSource::kIdx ? "idx" : "synthetic");
       }},
      GF_STRING(train_images),
      GF_STRING(train_labels),
      GF_STRING(test_images),
      GF_STRING(test_labels),
      GF_SIZE(train_limit),
      GF_SIZE(test_limit),
      {"synthetic_kind",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "images") {
           c.synthetic_kind = SyntheticKind::kImages;
         } else if (v == "blobs") {
           c.synthetic_kind = SyntheticKind::kBlobs;
         } else {
           throw ConfigError("synthetic_kind: expected images or blobs, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.synthetic_kind == SyntheticKind::kBlobs ? "blobs" : "images");
       }},
      GF_SIZE(train_size),
      GF_SIZE(test_size),
      GF_SIZE(dims),
      GF_SIZE(classes),
      GF_DOUBLE("separation", separation),
      GF_SIZE(image_side),
      {"hidden",
       [](ExperimentConfig& c, const std::string& v) {
         c.hidden.clear();
         for (const auto& s : split_list(v)) c.hidden.push_back(to_size("hidden", s));
       },
       [](const ExperimentConfig& c) { return join(c.hidden); }},
      {"activation",
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.activation = nn::parse_activation(v);
         } catch (const Error& e) {
           throw ConfigError(std::string("activation: ") + e.what());
         }
       },
       [](const ExperimentConfig& c) { return nn::to_string(c.activation); }},
      GF_SIZE(clients),
      {"partition",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "iid") {
           c.partition = PartitionKind::kIid;
         } else if (v == "heterogeneous") {
           c.partition = PartitionKind::kHeterogeneous;
         } else {
           throw ConfigError("partition: expected iid or heterogeneous, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.partition == PartitionKind::kIid ? "iid" : "heterogeneous");
       }},
      {"dirichlet",
       [](ExperimentConfig& c, const std::string& v) {
         c.dirichlet = (v == "inf") ? INFINITY : to_double("dirichlet", v);
       },
       [](const ExperimentConfig& c) {
         return std::isinf(c.dirichlet) ? std::string("inf") : fmt_double(c.dirichlet);
       }},
      GF_DOUBLE("size_exponent", size_exponent),
      GF_SIZE(shards),
      GF_SIZE(rounds),
      GF_SIZE(deletion_round),
      GF_SIZE(local_epochs),
      GF_SIZE(batch_size),
      GF_DOUBLE("learning_rate", learning_rate),
      GF_DOUBLE("momentum", momentum),
      GF_DOUBLE("mu_c", weights.mu_c),
      GF_DOUBLE("mu_d", weights.mu_d),
      GF_DOUBLE("temperature", weights.T0),
      GF_DOUBLE("temp_adjust", weights.temp_adjust),
      GF_BOOL("adaptive_temperature", weights.adaptive_temp),
      GF_BOOL("forget_clamp", weights.forget_clamp),
      {"deletion",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "poisoned") {
           c.deletion = DeletionMode::kPoisoned;
         } else if (v == "random") {
           c.deletion = DeletionMode::kRandom;
         } else if (v == "ids") {
           c.deletion = DeletionMode::kIds;
         } else {
           throw ConfigError("deletion: expected poisoned, random or ids, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         switch (c.deletion) {
           case DeletionMode::kPoisoned: return std::string("poisoned");
           case DeletionMode::kRandom: return std::string("random");
           case DeletionMode::kIds: break;
         }
         return std::string("ids");
       }},
      GF_DOUBLE("deletion_rate", deletion_rate),
      {"deletion_ids",
       [](ExperimentConfig& c, const std::string& v) {
         c.deletion_ids.clear();
         for (const auto& s : split_list(v)) c.deletion_ids.push_back(to_u64("deletion_ids", s));
         std::sort(c.deletion_ids.begin(), c.deletion_ids.end());
         c.deletion_ids.erase(std::unique(c.deletion_ids.begin(), c.deletion_ids.end()),
                              c.deletion_ids.end());
       },
       [](const ExperimentConfig& c) { return join(c.deletion_ids); }},
      GF_SIZE(deletion_client),
      GF_DOUBLE("poison_rate", poison_rate),
      GF_BOOL("backdoor", backdoor),
      {"target_label",
       [](ExperimentConfig& c, const std::string& v) {
         c.target_label = static_cast<int>(to_size("target_label", v));
       },
       [](const ExperimentConfig& c) { return std::to_string(c.target_label); }},
      GF_SIZE(trigger_size),
      {"aggregation",
       [](ExperimentConfig& c, const std::string& v) {
         c.aggregation = fed::parse_aggregation(v);
       },
       [](const ExperimentConfig& c) { return fed::to_string(c.aggregation); }},
      {"baselines",
       [](ExperimentConfig& c, const std::string& v) {
         c.baselines = split_list(v);
         if (c.baselines.size() == 1 && c.baselines[0] == "none") c.baselines.clear();
       },
       [](const ExperimentConfig& c) {
         return c.baselines.empty() ? std::string("none") : join(c.baselines);
       }},
      {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      GF_STRING(output_dir),
      {"early_stop_delta",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "off" || v == "none") {
           c.early_stop_delta.reset();
         } else {
           c.early_stop_delta = to_double("early_stop_delta", v);
         }
       },
       [](const ExperimentConfig& c) {
         return c.early_stop_delta ? fmt_double(*c.early_stop_delta) : std::string("off");
       }},
      GF_BOOL("normalize_checkpoint", normalize_checkpoint),
      {"reinit_scope",
       [](ExperimentConfig& c, const std::string& v) {
         c.reinit_scope = fed::parse_reinit_scope(v);
       },
       [](const ExperimentConfig& c) { return fed::to_string(c.reinit_scope); }},
      GF_BOOL("timing", timing),
      {"checkpoints",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "all") {
           c.checkpoints = CheckpointPolicy::kAll;
         } else if (v == "final") {
           c.checkpoints = CheckpointPolicy::kFinal;
         } else if (v == "none") {
           c.checkpoints = CheckpointPolicy::kNone;
         } else {
           throw ConfigError("checkpoints: expected all, final or none, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) {
         switch (c.checkpoints) {
           case CheckpointPolicy::kAll: return std::string("all");
           case CheckpointPolicy::kFinal: return std::string("final");
           case CheckpointPolicy::kNone: break;
         }
         return std::string("none");
       }},
  };
  return table;
}

#undef GF_SIZE
#undef GF_DOUBLE
#undef GF_BOOL
#undef GF_STRING

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::size_t ExperimentConfig::input_dim() const {
  if (dataset == DatasetSource::kIdx) return 784;
  return synthetic_kind == SyntheticKind::kImages ? image_side * image_side : dims;
}

nn::NetworkSpec ExperimentConfig::network() const {
  nn::NetworkSpec spec;
  spec.layer_sizes.push_back(input_dim());
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(classes);
  spec.activation = activation;
  spec.seed = seed;
  return spec;
}

double ExperimentConfig::effective_poison_rate() const {
  return deletion == DeletionMode::kPoisoned ? deletion_rate : poison_rate;
}

bool ExperimentConfig::has_baseline(const std::string& name) const {
  return std::find(baselines.begin(), baselines.end(), name) != baselines.end();
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  if (dataset == DatasetSource::kIdx) {
    require(!train_images.empty() && !train_labels.empty() && !test_images.empty() &&
                !test_labels.empty(),
            "dataset = idx needs train_images, train_labels, test_images and test_labels");
  } else {
    require(train_size >= classes, "train_size must be at least classes");
    require(test_size >= 1, "test_size must be positive");
    require(separation > 0.0, "separation must be positive");
    if (synthetic_kind == SyntheticKind::kBlobs) {
      require(dims >= classes, "dims must be at least classes");
    } else {
      require(image_side >= 12, "image_side must be at least 12");
    }
  }
  require(classes >= 2, "classes must be at least 2");
  for (auto h : hidden) require(h > 0, "hidden layer widths must be positive");
  require(clients >= 1, "clients must be at least 1");
  require(shards >= 1, "shards must be at least 1");
  require(dirichlet > 0.0, "dirichlet must be positive");
  require(size_exponent > 0.0, "size_exponent must be positive");
  require(rounds >= 1, "rounds must be at least 1");
  require(deletion_round >= 1 && deletion_round < rounds,
          "deletion_round must lie in [1, rounds)");
  require(local_epochs >= 1, "local_epochs must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  weights.validate();
  require(deletion_client < clients, "deletion_client must name an existing client");
  if (deletion == DeletionMode::kIds) {
    require(!deletion_ids.empty(), "deletion = ids needs deletion_ids");
  } else {
    require(deletion_rate > 0.0 && deletion_rate < 1.0, "deletion_rate must lie in (0, 1)");
  }
  if (deletion == DeletionMode::kPoisoned) {
    require(backdoor, "deletion = poisoned needs backdoor = true");
  }
  if (backdoor) {
    const double rate = effective_poison_rate();
    require(rate > 0.0 && rate < 1.0, "poison_rate must lie in (0, 1)");
    require(target_label >= 0 && static_cast<std::size_t>(target_label) < classes,
            "target_label outside the class range");
    require(trigger_size >= 1, "trigger_size must be positive");
    const auto d = input_dim();
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    require(side * side == d, "backdoor needs square image inputs");
    require(trigger_size <= side, "trigger_size exceeds the image side");
  }
  for (const auto& b : baselines) {
    require(b == "retrain" || b == "fedavg", "unknown baseline '" + b + "'");
  }
  if (early_stop_delta) require(*early_stop_delta >= 0.0, "early_stop_delta must be >= 0");
  require(!output_dir.empty(), "output_dir must not be empty");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig config;
  bool has_dataset = false;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      find_field(key).set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    if (key == "dataset") has_dataset = true;
  }
  if (!has_dataset) throw ConfigError(origin + ": missing required key 'dataset'");
  config.validate();
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  find_field(trim(key)).set(config, trim(value));
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key=value");
  apply_override(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace goldfish::exp
