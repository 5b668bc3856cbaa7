#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdtrack/association.hpp"
#include "crowdtrack/mask_control.hpp"
#include "crowdtrack/propagation.hpp"
#include "crowdtrack/track_state.hpp"

namespace crowdtrack {

struct TrackerConfig {
  double theta_density = 1.5;
  double delta = 0.6;
  double w = 0.5;
  double tau_r = 0.3;
  double tau_p = 0.7;
  double theta_miou = 0.3;
  int history_N = 10;
  int ttl_frames = 60;
  int alpha_max = 150;
  double c_max = 0.8;
  double theta_s2 = 0.3;
  double theta_s3 = 0.3;
  double theta_new = 0.6;
  bool daqr = true;
  bool hcoi = true;
  bool stage2 = true;
  bool stage3 = true;
  bool frameout_masks = false;
  PropagatorParams propagator;
  std::uint64_t seed = 2024;

  friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

/// Every key accepted in a config file, in serialization order.
const std::vector<std::string>& config_keys();

/// Parses `value` into `key`. Throws on unknown keys and unparsable values;
/// ranges are checked by validate().
void set_config_value(TrackerConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const TrackerConfig& config, const std::string& key);

/// Throws naming the key and its expected range.
void validate(const TrackerConfig& config);

/// Flat `key: value` text; `#` starts a comment. Missing keys keep defaults.
TrackerConfig parse_config(const std::string& text);
TrackerConfig load_config(const std::string& path);
std::string serialize_config(const TrackerConfig& config);

AssociationParams association_params(const TrackerConfig& config);
MaskControlParams mask_control_params(const TrackerConfig& config);
RetentionPolicy retention_policy(const TrackerConfig& config);

}  // namespace crowdtrack
