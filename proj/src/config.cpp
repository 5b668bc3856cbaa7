#include "crowdtrack/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

namespace {

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(fmt::format("config key `{}`: expected a number, got `{}`", key, text));
}

long long parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(fmt::format("config key `{}`: expected an integer, got `{}`", key, text));
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "on") return true;
  if (text == "false" || text == "off") return false;
  throw Error(fmt::format("config key `{}`: expected true/false, got `{}`", key, text));
}

struct Field {
  std::function<void(TrackerConfig&, const std::string&)> set;
  std::function<std::string(const TrackerConfig&)> get;
};

template <class T>
Field make_field(const std::string& key, T TrackerConfig::*member) {
  return {[key, member](TrackerConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.*member = parse_bool(key, v);
            } else if constexpr (std::is_same_v<T, int>) {
              const long long x = parse_int(key, v);
              if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
                throw Error(fmt::format("config key `{}`: integer out of range", key));
              }
              c.*member = static_cast<int>(x);
            } else {
              c.*member = parse_double(key, v);
            }
          },
          [member](const TrackerConfig& c) { return fmt::format("{}", c.*member); }};
}

Field prop_field(const std::string& key, double PropagatorParams::*member) {
  return {[key, member](TrackerConfig& c, const std::string& v) { c.propagator.*member = parse_double(key, v); },
          [member](const TrackerConfig& c) { return fmt::format("{}", c.propagator.*member); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto add = [&t](const std::string& key, Field f) { t.emplace_back(key, std::move(f)); };
    add("theta_density", make_field("theta_density", &TrackerConfig::theta_density));
    add("delta", make_field("delta", &TrackerConfig::delta));
    add("w", make_field("w", &TrackerConfig::w));
    add("tau_r", make_field("tau_r", &TrackerConfig::tau_r));
    add("tau_p", make_field("tau_p", &TrackerConfig::tau_p));
    add("theta_miou", make_field("theta_miou", &TrackerConfig::theta_miou));
    add("history_N", make_field("history_N", &TrackerConfig::history_N));
    add("ttl_frames", make_field("ttl_frames", &TrackerConfig::ttl_frames));
    add("alpha_max", make_field("alpha_max", &TrackerConfig::alpha_max));
    add("c_max", make_field("c_max", &TrackerConfig::c_max));
    add("theta_s2", make_field("theta_s2", &TrackerConfig::theta_s2));
    add("theta_s3", make_field("theta_s3", &TrackerConfig::theta_s3));
    add("theta_new", make_field("theta_new", &TrackerConfig::theta_new));
    add("daqr", make_field("daqr", &TrackerConfig::daqr));
    add("hcoi", make_field("hcoi", &TrackerConfig::hcoi));
    add("stage2", make_field("stage2", &TrackerConfig::stage2));
    add("stage3", make_field("stage3", &TrackerConfig::stage3));
    add("frameout_masks", make_field("frameout_masks", &TrackerConfig::frameout_masks));
    add("kappa", prop_field("kappa", &PropagatorParams::kappa));
    add("lambda_occ", prop_field("lambda_occ", &PropagatorParams::lambda_occ));
    add("sigma_n", prop_field("sigma_n", &PropagatorParams::sigma_n));
    add("p_drift", prop_field("p_drift", &PropagatorParams::p_drift));
    add("rho", prop_field("rho", &PropagatorParams::rho));
    add("rho_penalty", prop_field("rho_penalty", &PropagatorParams::rho_penalty));
    add("seed", Field{[](TrackerConfig& c, const std::string& v) {
                        try {
                          std::size_t used = 0;
                          if (!v.empty() && v[0] != '-') {
                            c.seed = std::stoull(v, &used);
                            if (used == v.size()) return;
                          }
                        } catch (const std::exception&) {
                        }
                        throw Error(fmt::format("config key `seed`: expected a non-negative integer, got `{}`", v));
                      },
                      [](const TrackerConfig& c) { return fmt::format("{}", c.seed); }});
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw Error(fmt::format("unknown config key `{}`", key));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(TrackerConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, value);
}

std::string get_config_value(const TrackerConfig& config, const std::string& key) {
  return field(key).get(config);
}

void validate(const TrackerConfig& c) {
  auto in_range = [](const char* key, double v, double lo, double hi, const char* range) {
    if (!(v >= lo && v <= hi)) throw Error(fmt::format("config key `{}`: {} outside {}", key, v, range));
  };
  const double inf = std::numeric_limits<double>::infinity();
  in_range("theta_density", c.theta_density, 0.0, inf, "[0, inf)");
  in_range("delta", c.delta, 0.0, inf, "[0, inf)");
  in_range("w", c.w, 0.0, 1.0, "[0, 1]");
  in_range("tau_r", c.tau_r, 0.0, 1.0, "[0, 1]");
  in_range("tau_p", c.tau_p, 0.0, 1.0, "[0, 1]");
  if (!(c.tau_r < c.tau_p)) {
    throw Error(fmt::format("config keys `tau_r`/`tau_p`: need tau_r < tau_p, got {} >= {}", c.tau_r, c.tau_p));
  }
  in_range("theta_miou", c.theta_miou, 0.0, 1.0, "[0, 1]");
  in_range("history_N", c.history_N, 1, 1e6, "[1, 1000000]");
  in_range("ttl_frames", c.ttl_frames, 1, 1e9, "[1, 1e9]");
  in_range("alpha_max", c.alpha_max, 1, 1e9, "[1, 1e9]");
  in_range("c_max", c.c_max, 0.0, 1.0, "[0, 1]");
  in_range("theta_s2", c.theta_s2, 0.0, 1.0, "[0, 1]");
  in_range("theta_s3", c.theta_s3, 0.0, 1.0, "[0, 1]");
  in_range("theta_new", c.theta_new, 0.0, 1.0, "[0, 1]");
  try {
    validate(c.propagator);
  } catch (const Error& e) {
    throw Error(fmt::format("config: {}", e.what()));
  }
}

TrackerConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(fmt::format("config parse error: {}", e.what()));
  }
  TrackerConfig config;
  if (!root || root.IsNull()) return config;
  if (!root.IsMap()) throw Error("config: expected `key: value` lines");
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (!kv.second.IsScalar()) throw Error(fmt::format("config key `{}`: expected a scalar value", key));
    set_config_value(config, key, kv.second.Scalar());
  }
  validate(config);
  return config;
}

TrackerConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open config file `{}`", path));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path, e.what()));
  }
}

std::string serialize_config(const TrackerConfig& config) {
  std::string out;
  for (const auto& [key, f] : fields()) out += fmt::format("{}: {}\n", key, f.get(config));
  return out;
}

AssociationParams association_params(const TrackerConfig& c) {
  AssociationParams p;
  p.w = c.w;
  p.c_max = c.c_max;
  p.theta_s2 = c.theta_s2;
  p.theta_s3 = c.theta_s3;
  p.alpha_max = c.alpha_max;
  p.theta_new = c.theta_new;
  p.delta = c.delta;
  p.stage2 = c.stage2;
  p.stage3 = c.stage3;
  p.frameout_masks = c.frameout_masks;
  return p;
}

MaskControlParams mask_control_params(const TrackerConfig& c) {
  MaskControlParams p;
  p.band = {c.tau_r, c.tau_p};
  p.theta_density = c.theta_density;
  p.theta_miou = c.theta_miou;
  p.daqr = c.daqr;
  p.hcoi = c.hcoi;
  return p;
}

RetentionPolicy retention_policy(const TrackerConfig& c) {
  return {c.ttl_frames, c.stage3 ? c.alpha_max : c.ttl_frames};
}

}  // namespace crowdtrack
