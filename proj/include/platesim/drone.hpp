#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "platesim/geometry.hpp"
#include "platesim/rng.hpp"
#include "platesim/world.hpp"

namespace platesim {

inline constexpr double kRangerMaxRange = 4.0;
inline constexpr double kDefaultBatteryBudget = 420.0;

struct VelocityCommand {
  double v_forward{0.0};
  double v_side{0.0};  // body-left positive
  double yaw_rate{0.0};

  bool operator==(const VelocityCommand&) const = default;
};

struct MotionLimits {
  double v_max{0.5};
  double yaw_rate_max{1.0};

  bool admits(const VelocityCommand& c) const {
    constexpr double kTol = 1e-12;
    return std::abs(c.v_forward) <= v_max + kTol && std::abs(c.v_side) <= v_max + kTol &&
           std::abs(c.yaw_rate) <= yaw_rate_max + kTol;
  }
};

struct DroneState {
  Pose true_pose{};
  Pose estimated_pose{};
  double sim_time{0.0};
  double battery_elapsed{0.0};
  bool battery_exhausted{false};

  bool operator==(const DroneState&) const = default;
};

inline DroneState initial_state(const Pose& start) { return DroneState{start, start, 0.0, 0.0, false}; }

using Range = std::optional<double>;  // nullopt = out of range

struct RangeScan {
  Range front;
  Range back;
  Range left;
  Range right;

  bool operator==(const RangeScan&) const = default;
};

struct NoiseModel {
  double range_sigma{0.005};
  double odom_drift_rate{0.02};
  double odom_yaw_sigma{0.005};
  std::uint64_t rng_seed{0};  // selects the noise realisation; mixed into the round's stream seeds

  static NoiseModel none() { return NoiseModel{0.0, 0.0, 0.0, 0}; }

  void validate() const {
    if (!(range_sigma >= 0.0 && odom_drift_rate >= 0.0 && odom_yaw_sigma >= 0.0)) {
      throw std::invalid_argument("noise: sigmas and drift rate must be >= 0");
    }
  }
};

namespace detail {

// One Euler step of body-frame velocities; shared by truth and odometry so a
// noise-free estimate is bit-identical to the true pose.
inline Pose integrate_body(const Pose& p, const VelocityCommand& cmd, double dt, double scale, double yaw_noise) {
  const Vec2 disp = rotate(Vec2{cmd.v_forward * dt, cmd.v_side * dt}, p.yaw) * scale;
  return Pose{p.position + disp, wrap_angle(p.yaw + cmd.yaw_rate * dt + yaw_noise)};
}

}  // namespace detail

/// Advances the true pose by one first-order kinematic step. Collisions are
/// left to the caller. Once the battery budget would be exceeded the state is
/// flagged exhausted and motion stops.
inline DroneState step_kinematics(const DroneState& s, const VelocityCommand& cmd, double dt,
                                  double battery_budget = kDefaultBatteryBudget) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_kinematics: dt must be positive");
  DroneState next = s;
  if (s.battery_exhausted || s.battery_elapsed + dt > battery_budget + 1e-9) {
    next.battery_exhausted = true;
    return next;
  }
  next.true_pose = detail::integrate_body(s.true_pose, cmd, dt, 1.0, 0.0);
  next.sim_time = s.sim_time + dt;
  next.battery_elapsed = s.battery_elapsed + dt;
  return next;
}

/// Flow-deck style dead reckoning. Each tick draws one uniform (displacement
/// scale error within +/- drift rate) and one normal (yaw random walk).
inline DroneState odometry_update(const DroneState& s, const VelocityCommand& cmd, double dt,
                                  const NoiseModel& noise, RngStream& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("odometry_update: dt must be positive");
  const double u = rng.uniform();
  const double n = rng.normal();
  const double scale = 1.0 + noise.odom_drift_rate * (2.0 * u - 1.0);
  const double yaw_noise = noise.odom_yaw_sigma * std::sqrt(dt) * n;
  DroneState next = s;
  next.estimated_pose = detail::integrate_body(s.estimated_pose, cmd, dt, scale, yaw_noise);
  return next;
}

/// Body-frame ray directions in world coordinates, in draw order.
inline std::array<Vec2, 4> ranger_directions(const Pose& p) {
  return {unit_from_angle(p.yaw), unit_from_angle(p.yaw + kPi), unit_from_angle(p.yaw + kPi / 2.0),
          unit_from_angle(p.yaw - kPi / 2.0)};
}

/// MultiRanger model: four rays (front, back, left, right), 4 m ceiling,
/// additive Gaussian noise clamped into (0, 4]. Always consumes four draws.
inline RangeScan sense_ranges(const World& world, const DroneState& s, const NoiseModel& noise, RngStream& rng) {
  const auto dirs = ranger_directions(s.true_pose);
  std::array<Range, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const double n = rng.normal();
    const auto d = ray_cast(world, s.true_pose.position, dirs[i], kRangerMaxRange);
    if (!d) continue;
    out[i] = std::clamp(*d + noise.range_sigma * n, kRangeResolution, kRangerMaxRange);
  }
  return RangeScan{out[0], out[1], out[2], out[3]};
}

}  // namespace platesim
