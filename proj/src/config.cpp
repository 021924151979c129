#include "afe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "afe/errors.hpp"
#include "afe/parallel.hpp"

namespace afe {

namespace {

std::string unquote(std::string v) {
  boost::algorithm::trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
  return v;
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  T out{};
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("invalid value for " + key + ": '" + raw + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + raw + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::string v = unquote(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("unterminated list for " + key);
    v = v.substr(1, v.size() - 2);
  }
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(parse_number<T>(key, item));
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(const std::string& v) { return "\"" + v + "\""; }
template <typename T>
std::string fmt(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field number_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_number<T>(k, v); },
          [access](const RunConfig& c) { return fmt(access(const_cast<RunConfig&>(c))); }};
}

template <typename Access>
Field bool_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_bool(k, v); },
          [access](const RunConfig& c) { return fmt(access(const_cast<RunConfig&>(c))); }};
}

template <typename T, typename Access>
Field list_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_list<T>(k, v); },
          [access](const RunConfig& c) { return fmt(access(const_cast<RunConfig&>(c))); }};
}

template <typename Access>
Field string_field(Access access) {
  return {[access](RunConfig& c, const std::string&, const std::string& v) { access(c) = unquote(v); },
          [access](const RunConfig& c) { return fmt(access(const_cast<RunConfig&>(c))); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["run.seed"] = number_field<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; });
    t["run.jobs"] = number_field<int>([](RunConfig& c) -> auto& { return c.jobs; });

    t["corpus.size"] = number_field<int>([](RunConfig& c) -> auto& { return c.corpus_size; });

    t["features.l_max"] = number_field<int>([](RunConfig& c) -> auto& { return c.max_level; });
    t["features.n_fft"] = number_field<int>([](RunConfig& c) -> auto& { return c.features.n_fft; });
    t["features.hop"] = number_field<int>([](RunConfig& c) -> auto& { return c.features.hop; });
    t["features.median_kernel"] = number_field<int>([](RunConfig& c) -> auto& { return c.features.median_kernel; });

    t["augment.p_full_mask"] = number_field<double>([](RunConfig& c) -> auto& { return c.augment.p_full_mask; });
    t["augment.level_distribution"] =
        list_field<double>([](RunConfig& c) -> auto& { return c.augment.level_distribution; });
    t["augment.temporal_mask_rate"] =
        number_field<double>([](RunConfig& c) -> auto& { return c.augment.temporal_mask_rate; });
    t["augment.span_min"] = number_field<int>([](RunConfig& c) -> auto& { return c.augment.span_min; });
    t["augment.span_max"] = number_field<int>([](RunConfig& c) -> auto& { return c.augment.span_max; });
    t["augment.p_drop_condition"] =
        number_field<double>([](RunConfig& c) -> auto& { return c.augment.p_drop_condition; });

    t["model.hidden"] = number_field<int>([](RunConfig& c) -> auto& { return c.model.hidden; });
    t["model.blocks"] = number_field<int>([](RunConfig& c) -> auto& { return c.model.blocks; });
    t["model.time_embed_dim"] = number_field<int>([](RunConfig& c) -> auto& { return c.model.time_embed_dim; });
    t["model.conv_kernel"] = number_field<int>([](RunConfig& c) -> auto& { return c.model.conv_kernel; });
    t["model.sync_hidden_mult"] = number_field<int>([](RunConfig& c) -> auto& { return c.model.sync_hidden_mult; });
    t["model.sync_modulation"] = bool_field([](RunConfig& c) -> auto& { return c.model.sync_modulation; });
    t["model.feature_scale"] = number_field<double>([](RunConfig& c) -> auto& { return c.model.feature_scale; });
    t["model.total_steps"] = number_field<int>([](RunConfig& c) -> auto& { return c.schedule.total_steps; });
    t["model.batch_size"] = number_field<int>([](RunConfig& c) -> auto& { return c.schedule.batch_size; });
    t["model.freeze_fraction"] = number_field<double>([](RunConfig& c) -> auto& { return c.schedule.freeze_fraction; });
    t["model.optimizer"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                              const std::string s = unquote(v);
                              if (s == "momentum") c.schedule.optimizer = OptimizerKind::Momentum;
                              else if (s == "adam") c.schedule.optimizer = OptimizerKind::Adam;
                              else throw ConfigError("invalid value for " + k + ": '" + v + "' (momentum or adam)");
                            },
                            [](const RunConfig& c) {
                              return fmt(std::string(c.schedule.optimizer == OptimizerKind::Adam ? "adam" : "momentum"));
                            }};
    t["model.learning_rate"] = number_field<double>([](RunConfig& c) -> auto& { return c.schedule.learning_rate; });
    t["model.final_lr_fraction"] =
        number_field<double>([](RunConfig& c) -> auto& { return c.schedule.final_lr_fraction; });
    t["model.momentum"] = number_field<double>([](RunConfig& c) -> auto& { return c.schedule.momentum; });
    t["model.beta2"] = number_field<double>([](RunConfig& c) -> auto& { return c.schedule.beta2; });
    t["model.grad_clip"] = number_field<double>([](RunConfig& c) -> auto& { return c.schedule.grad_clip; });
    t["model.checkpoint_every"] = number_field<int>([](RunConfig& c) -> auto& { return c.schedule.checkpoint_every; });

    t["sampler.n_steps"] = number_field<int>([](RunConfig& c) -> auto& { return c.sampler.n_steps; });
    t["sampler.scheme"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                             const std::string s = unquote(v);
                             if (s == "euler") c.sampler.scheme = OdeScheme::Euler;
                             else if (s == "midpoint") c.sampler.scheme = OdeScheme::Midpoint;
                             else throw ConfigError("invalid value for " + k + ": '" + v + "' (euler or midpoint)");
                           },
                           [](const RunConfig& c) {
                             return fmt(std::string(c.sampler.scheme == OdeScheme::Euler ? "euler" : "midpoint"));
                           }};
    t["sampler.w1"] = number_field<double>([](RunConfig& c) -> auto& { return c.guidance.w1; });
    t["sampler.w2"] = number_field<double>([](RunConfig& c) -> auto& { return c.guidance.w2; });

    t["adaptive.l_max"] = number_field<int>([](RunConfig& c) -> auto& { return c.adaptive_l_max; });
    t["adaptive.s_min"] = number_field<double>([](RunConfig& c) -> auto& { return c.s_min; });
    t["adaptive.s_max"] = number_field<double>([](RunConfig& c) -> auto& { return c.s_max; });
    t["adaptive.oracle"] = string_field([](RunConfig& c) -> auto& { return c.oracle; });
    t["adaptive.sidecar"] = string_field([](RunConfig& c) -> auto& { return c.oracle_sidecar; });

    t["eval.edits"] = number_field<int>([](RunConfig& c) -> auto& { return c.eval_edits; });
    t["eval.sweep"] = list_field<int>([](RunConfig& c) -> auto& { return c.eval_sweep; });
    t["eval.fixed_levels"] = list_field<int>([](RunConfig& c) -> auto& { return c.eval_fixed_levels; });
    t["eval.v2a"] = bool_field([](RunConfig& c) -> auto& { return c.eval_v2a; });
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(cfg);
}

void RunConfig::sync() {
  model.feature_max_level = max_level;
  if (augment.max_level() != max_level) {
    augment.level_distribution.assign(static_cast<std::size_t>(max_level + 1), 1.0 / (max_level + 1));
  }
  augment.seed = seed;
  schedule.seed = seed;
}

void RunConfig::validate() const {
  try {
    if (corpus_size < 1) throw ConfigError("corpus.size must be positive");
    if (max_level < 0 || max_level > 6) throw ConfigError("features.l_max must lie in [0, 6]");
    if (features.n_fft != 1024 || features.hop != 256) {
      throw ConfigError("features.n_fft and features.hop are fixed at 1024 and 256 by the model input size");
    }
    if (features.median_kernel < 1 || features.median_kernel % 2 == 0) {
      throw ConfigError("features.median_kernel must be odd and positive");
    }
    if (augment.max_level() != max_level) {
      throw ConfigError("augment.level_distribution needs l_max + 1 entries");
    }
    augment.validate();
    model.validate();
    schedule.validate();
    sampler.validate();
    guidance.validate();
    if (adaptive_l_max < 0 || adaptive_l_max > max_level) throw ConfigError("adaptive.l_max must lie in [0, l_max]");
    if (!(s_min < s_max)) throw ConfigError("adaptive.s_min must be below adaptive.s_max");
    if (oracle != "fingerprint" && oracle != "external") throw ConfigError("adaptive.oracle must be fingerprint or external");
    if (eval_edits < 2) throw ConfigError("eval.edits must be at least 2");
    for (int l : eval_sweep) {
      if (l < 0 || l > max_level) throw ConfigError("eval.sweep entries must lie in [0, l_max]");
    }
    for (int l : eval_fixed_levels) {
      if (l < 0 || l > max_level) throw ConfigError("eval.fixed_levels entries must lie in [0, l_max]");
    }
    if (jobs < 0) throw ConfigError("run.jobs must be non-negative");
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

int RunConfig::effective_jobs() const { return jobs > 0 ? jobs : default_jobs(); }

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, f] : fields()) {
    if (k == "run.jobs") continue;  // parallelism never changes results
    out += k + " = " + f.get(*this) + "\n";
  }
  return out;
}

std::string RunConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  // Drop trailing comments outside quotes; the INI reader only knows whole-line comments.
  std::stringstream cleaned;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quote) {
        if (ch == quote) quote = 0;
      } else if (ch == '"' || ch == '\'') {
        quote = ch;
      } else if (ch == '#') {
        line.resize(i);
        break;
      }
    }
    cleaned << line << "\n";
  }

  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(cleaned, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  bool level_set = false, dist_set = false, adaptive_set = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' must sit inside a [section]");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      set_config_value(base, full, node.data());
      level_set |= full == "features.l_max";
      dist_set |= full == "augment.level_distribution";
      adaptive_set |= full == "adaptive.l_max";
    }
  }
  if (level_set && !dist_set) base.augment.level_distribution.clear();
  if (level_set && !adaptive_set) base.adaptive_l_max = base.max_level;
  base.sync();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace afe
