#pragma once

#include <charconv>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "platesim/runner.hpp"

namespace platesim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("not a number: '" + v + "'");
  return out;
}

template <class Int>
Int to_int(const std::string& v) {
  Int out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("not an integer: '" + v + "'");
  return out;
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  const auto num = [](double RunConfig::*f) {
    return Setter([f](RunConfig& c, const std::string& v) { c.*f = detail::to_double(v); });
  };
  static const std::map<std::string, Setter> setters = [&] {
    std::map<std::string, Setter> m;
    m["scenario"] = [](RunConfig& c, const std::string& v) { c.scenario = v; };
    m["out"] = [](RunConfig& c, const std::string& v) { c.output_dir = v; };
    m["speed"] = num(&RunConfig::speed);
    m["light"] = num(&RunConfig::light);
    m["battery_budget"] = num(&RunConfig::battery_budget);
    m["rounds"] = [](RunConfig& c, const std::string& v) { c.rounds = detail::to_int<int>(v); };
    m["seed"] = [](RunConfig& c, const std::string& v) {
      c.master_seed = detail::to_int<std::uint64_t>(v);
    };
    m["telemetry.listen"] = [](RunConfig& c, const std::string& v) { c.listen = v; };
    m["telemetry.drop"] = num(&RunConfig::drop_probability);

    const auto det = [](double DetectorModel::*f) {
      return Setter([f](RunConfig& c, const std::string& v) { c.detector.*f = detail::to_double(v); });
    };
    m["detector.p_base"] = det(&DetectorModel::p_base);
    m["detector.d_near"] = det(&DetectorModel::d_near);
    m["detector.d_sweet"] = det(&DetectorModel::d_sweet);
    m["detector.d_max"] = det(&DetectorModel::d_max);
    m["detector.incidence_max"] = det(&DetectorModel::incidence_max);
    m["detector.p_fp"] = det(&DetectorModel::p_fp);
    m["detector.fov"] = det(&DetectorModel::fov);

    const auto noise = [](double NoiseModel::*f) {
      return Setter([f](RunConfig& c, const std::string& v) { c.noise.*f = detail::to_double(v); });
    };
    m["noise.range_sigma"] = noise(&NoiseModel::range_sigma);
    m["noise.odom_drift_rate"] = noise(&NoiseModel::odom_drift_rate);
    m["noise.odom_yaw_sigma"] = noise(&NoiseModel::odom_yaw_sigma);
    m["noise.rng_seed"] = [](RunConfig& c, const std::string& v) {
      c.noise.rng_seed = detail::to_int<std::uint64_t>(v);
    };

    const auto ctl = [](double ControllerParams::*f) {
      return Setter([f](RunConfig& c, const std::string& v) { c.controller.*f = detail::to_double(v); });
    };
    m["controller.d_follow"] = ctl(&ControllerParams::d_follow);
    m["controller.d_detect_front"] = ctl(&ControllerParams::d_detect_front);
    m["controller.k_dist"] = ctl(&ControllerParams::k_dist);
    m["controller.k_align"] = ctl(&ControllerParams::k_align);
    m["controller.side_lost_threshold"] = ctl(&ControllerParams::side_lost_threshold);
    m["controller.inner_margin"] = ctl(&ControllerParams::inner_margin);
    m["controller.lost_confirm_distance"] = ctl(&ControllerParams::lost_confirm_distance);
    m["controller.reacquire_distance"] = ctl(&ControllerParams::reacquire_distance);
    m["controller.turn_radius"] = ctl(&ControllerParams::turn_radius);
    m["controller.follow_direction"] = [](RunConfig& c, const std::string& v) {
      if (v == "left") c.controller.follow_direction = FollowDirection::Left;
      else if (v == "right") c.controller.follow_direction = FollowDirection::Right;
      else throw ConfigError("expected left or right");
    };
    return m;
  }();

  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown setting '" + key + "'");
  try {
    it->second(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

/// Parses a `key = value` line ("detector.p_base = 0.6" or "speed=0.3").
inline void apply_assignment(RunConfig& cfg, std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key = value, got '" + std::string(line) + "'");
  const std::string key = detail::trim(line.substr(0, eq));
  const std::string value = detail::trim(line.substr(eq + 1));
  if (key.empty() || value.empty()) throw ConfigError("expected key = value, got '" + std::string(line) + "'");
  apply_setting(cfg, key, value);
}

/// Config files use one assignment per line; '#' starts a comment.
inline void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    try {
      apply_assignment(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace platesim
