#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <utility>

#include "platesim/drone.hpp"
#include "platesim/geometry.hpp"

namespace platesim {

enum class Mode { ForwardSeek, AlignToWall, FollowWall, OuterCorner, InnerCorner, Finished };
enum class FollowDirection { Left, Right };

inline constexpr std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::ForwardSeek: return "ForwardSeek";
    case Mode::AlignToWall: return "AlignToWall";
    case Mode::FollowWall: return "FollowWall";
    case Mode::OuterCorner: return "OuterCorner";
    case Mode::InnerCorner: return "InnerCorner";
    case Mode::Finished: return "Finished";
  }
  return "?";
}

/// True for the edges of the wall-following mode graph (plus self loops).
inline constexpr bool is_legal_transition(Mode from, Mode to) {
  if (from == to || to == Mode::Finished) return true;
  switch (from) {
    case Mode::ForwardSeek: return to == Mode::AlignToWall;
    case Mode::AlignToWall: return to == Mode::FollowWall;
    case Mode::FollowWall: return to == Mode::InnerCorner || to == Mode::OuterCorner;
    case Mode::InnerCorner: return to == Mode::AlignToWall;
    case Mode::OuterCorner: return to == Mode::AlignToWall;
    case Mode::Finished: return false;
  }
  return false;
}

struct ControllerParams {
  double d_follow{0.6};
  double d_detect_front{1.0};
  double v_travel{0.2};
  double k_dist{1.0};
  double k_align{0.5};
  double side_lost_threshold{1.2};
  FollowDirection follow_direction{FollowDirection::Right};

  double inner_margin{0.05};
  // Travel past a lost wall before it counts as an outer corner; must exceed
  // the widest gap between boxes (0.25 m).
  double lost_confirm_distance{0.30};
  // Travel with the front ray on the new face before leaving an outer corner.
  double reacquire_distance{0.10};
  // Corner turns run at v_travel / turn_radius, alignment sweeps at a fraction
  // of that, so every manoeuvre scales with the travel speed.
  double turn_radius{0.6};
  double align_rate_factor{0.5};
  double align_window{0.25};
  double align_sweep_limit{0.5};
  double follow_observer_window{0.5};
  MotionLimits limits{};

  double turn_rate() const { return v_travel / turn_radius; }
  double align_rate() const { return align_rate_factor * turn_rate(); }
  double side_sign() const { return follow_direction == FollowDirection::Left ? 1.0 : -1.0; }

  void validate() const {
    if (!(d_follow > 0.0 && d_follow < d_detect_front && d_detect_front <= kRangerMaxRange)) {
      throw std::invalid_argument("controller: require 0 < d_follow < d_detect_front <= 4.0");
    }
    if (!(v_travel > 0.0 && v_travel <= limits.v_max)) {
      throw std::invalid_argument("controller: v_travel must be in (0, v_max]");
    }
    if (!(lost_confirm_distance >= 0.0 && turn_radius > 0.0 && align_window > 0.0)) {
      throw std::invalid_argument("controller: invalid manoeuvre parameters");
    }
  }
};

class LostWallError : public std::runtime_error {
 public:
  LostWallError() : std::runtime_error("outer corner: no surface reacquired within pi of pivot progress") {}
};

struct ControllerState {
  Mode mode{Mode::ForwardSeek};
  double mode_entry_time{0.0};
  double corner_pivot_progress{0.0};  // radians in [0, pi]
  double clock{0.0};

  // Recent front readings (NaN for out of range) and the forward command
  // issued right after each reading.
  struct Sample {
    double front{0.0};
    double v_forward{0.0};
  };
  static constexpr std::size_t kHistory = 32;
  std::array<Sample, kHistory> history{};
  std::size_t history_size{0};
  std::size_t history_head{0};

  enum class AlignPhase { Probe, Descend, Settle };
  AlignPhase align_phase{AlignPhase::Probe};
  double align_dir{1.0};
  double align_rotated{0.0};
  double settle_remaining{0.0};
  int phase_samples{0};

  double lost_distance{0.0};
  bool turn_done{false};
  double slide_distance{0.0};
  double reacquire_run{0.0};

  void push(double front) {
    history_head = (history_head + 1) % kHistory;
    history[history_head] = Sample{front, 0.0};
    history_size = std::min(history_size + 1, kHistory);
  }
  // ago = 0 is the newest sample.
  const Sample& sample(std::size_t ago) const { return history[(history_head + kHistory - ago) % kHistory]; }
  Sample& newest() { return history[history_head]; }
  void clear_history() { history_size = 0; }
};

namespace detail {

inline ControllerState enter(ControllerState cs, Mode m) {
  cs.mode = m;
  cs.mode_entry_time = cs.clock;
  cs.corner_pivot_progress = 0.0;
  cs.align_phase = ControllerState::AlignPhase::Probe;
  cs.align_dir = 1.0;
  cs.align_rotated = 0.0;
  cs.settle_remaining = 0.0;
  cs.phase_samples = 0;
  cs.lost_distance = 0.0;
  cs.turn_done = false;
  cs.slide_distance = 0.0;
  cs.reacquire_run = 0.0;
  cs.clear_history();
  return cs;
}

inline VelocityCommand clamp_command(VelocityCommand c, const MotionLimits& lim) {
  c.v_forward = std::clamp(c.v_forward, -lim.v_max, lim.v_max);
  c.v_side = std::clamp(c.v_side, -lim.v_max, lim.v_max);
  c.yaw_rate = std::clamp(c.yaw_rate, -lim.yaw_rate_max, lim.yaw_rate_max);
  return c;
}

inline int window_ticks(double window, double dt) { return std::max(1, static_cast<int>(std::lround(window / dt))); }

// Rotates by at most `remaining` this tick; returns the yaw rate to command.
inline double bounded_rate(double rate, double remaining, double dt) {
  return std::min(rate, remaining / dt);
}

inline std::pair<ControllerState, VelocityCommand> align_step(ControllerState cs, const ControllerParams& p,
                                                             double front, double dt) {
  using Phase = ControllerState::AlignPhase;
  const double rate = p.align_rate();
  const int n = window_ticks(p.align_window, dt);

  if (cs.align_phase != Phase::Settle) {
    cs.push(front);
    ++cs.phase_samples;
  }

  if (cs.align_phase == Phase::Probe && cs.phase_samples > n) {
    const double delta = cs.sample(0).front - cs.sample(static_cast<std::size_t>(n)).front;
    if (!(delta < 0.0)) {
      cs.align_dir = -cs.align_dir;
      cs.clear_history();
      cs.push(front);
      cs.phase_samples = 1;
    }
    cs.align_phase = Phase::Descend;
  } else if (cs.align_phase == Phase::Descend && cs.phase_samples > n) {
    const double deriv = cs.sample(0).front - cs.sample(static_cast<std::size_t>(n)).front;
    if (!(deriv < 0.0)) {
      cs.align_phase = Phase::Settle;
      cs.settle_remaining = rate * dt * n / 2.0;
    }
  }
  if (cs.align_phase != Phase::Settle && std::abs(cs.align_rotated) >= p.align_sweep_limit) {
    cs.align_phase = Phase::Settle;
    cs.settle_remaining = 0.0;
  }

  if (cs.align_phase == Phase::Settle) {
    if (cs.settle_remaining <= 1e-12) {
      cs = enter(cs, Mode::FollowWall);
      return {cs, VelocityCommand{}};
    }
    const double r = bounded_rate(rate, cs.settle_remaining, dt);
    cs.settle_remaining -= r * dt;
    cs.align_rotated -= cs.align_dir * r * dt;
    return {cs, VelocityCommand{0.0, 0.0, -cs.align_dir * r}};
  }

  cs.align_rotated += cs.align_dir * rate * dt;
  return {cs, VelocityCommand{0.0, 0.0, cs.align_dir * rate}};
}

// Heading error relative to the wall normal, estimated from how the front
// reading evolves while translating sideways. NaN when the window is not
// usable (too short, out of range, or a step in the surface).
inline double estimate_wall_skew(const ControllerState& cs, const ControllerParams& p, double dt) {
  const int n = window_ticks(p.follow_observer_window, dt);
  if (cs.history_size <= static_cast<std::size_t>(n)) return std::numeric_limits<double>::quiet_NaN();
  constexpr double kStep = 0.03;
  double v_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = cs.sample(static_cast<std::size_t>(i)).front;
    const double b = cs.sample(static_cast<std::size_t>(i + 1)).front;
    if (std::isnan(a) || std::isnan(b) || std::abs(a - b) > kStep) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    v_sum += cs.sample(static_cast<std::size_t>(i + 1)).v_forward;
  }
  const double rate = (cs.sample(0).front - cs.sample(static_cast<std::size_t>(n)).front) / (n * dt);
  const double v_side = p.side_sign() * p.v_travel;
  return std::atan((rate + v_sum / n) / v_side);
}

}  // namespace detail

/// One tick of the sideways wall follower. The camera (front sensor) faces the
/// wall; the drone translates along it on the `follow_direction` side and the
/// lateral sensor on that side watches for walls ahead.
inline std::pair<ControllerState, VelocityCommand> controller_step(ControllerState cs, const ControllerParams& p,
                                                                   const RangeScan& scan, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("controller_step: dt must be positive");
  cs.clock += dt;
  const double side = p.side_sign();
  const double front = scan.front.value_or(std::numeric_limits<double>::quiet_NaN());
  const Range travel_side = p.follow_direction == FollowDirection::Left ? scan.left : scan.right;

  VelocityCommand cmd{};
  switch (cs.mode) {
    case Mode::ForwardSeek: {
      if (scan.front && *scan.front <= p.d_detect_front) {
        cs = detail::enter(cs, Mode::AlignToWall);
        std::tie(cs, cmd) = detail::align_step(cs, p, front, dt);
      } else {
        cmd.v_forward = p.v_travel;
      }
      break;
    }
    case Mode::AlignToWall: {
      std::tie(cs, cmd) = detail::align_step(cs, p, front, dt);
      break;
    }
    case Mode::FollowWall: {
      const bool inner = travel_side && *travel_side <= p.d_follow + p.inner_margin;
      const bool lost = !scan.front || *scan.front > p.side_lost_threshold;
      if (inner) {
        cs = detail::enter(cs, Mode::InnerCorner);
        cs.clock -= dt;
        return controller_step(cs, p, scan, dt);
      }
      if (lost) {
        cs.lost_distance += p.v_travel * dt;
        if (cs.lost_distance >= p.lost_confirm_distance) {
          cs = detail::enter(cs, Mode::OuterCorner);
          cs.clock -= dt;
          return controller_step(cs, p, scan, dt);
        }
        cs.push(front);
        cmd.v_side = side * p.v_travel;
        break;
      }
      cs.lost_distance = 0.0;
      cs.push(front);
      cmd.v_side = side * p.v_travel;
      cmd.v_forward = p.k_dist * (front - p.d_follow);
      const double skew = detail::estimate_wall_skew(cs, p, dt);
      if (!std::isnan(skew)) {
        cmd.yaw_rate = -p.k_align * skew;
      }
      cmd = detail::clamp_command(cmd, p.limits);
      cs.newest().v_forward = cmd.v_forward;
      break;
    }
    case Mode::InnerCorner: {
      // Turn toward the travel side by pi/2 to face the new wall.
      const double remaining = kPi / 2.0 - cs.corner_pivot_progress;
      if (remaining <= 1e-12) {
        cs = detail::enter(cs, Mode::AlignToWall);
        std::tie(cs, cmd) = detail::align_step(cs, p, front, dt);
        break;
      }
      const double r = detail::bounded_rate(p.turn_rate(), remaining, dt);
      cs.corner_pivot_progress += r * dt;
      cmd.yaw_rate = side * r;
      break;
    }
    case Mode::OuterCorner: {
      // Turn away from the travel side by pi/2, then slide along the old
      // wall's normal until the front ray lands on the next face.
      if (!cs.turn_done) {
        const double remaining = kPi / 2.0 - cs.corner_pivot_progress;
        if (remaining > 1e-12) {
          const double r = detail::bounded_rate(p.turn_rate(), remaining, dt);
          cs.corner_pivot_progress += r * dt;
          cmd.yaw_rate = -side * r;
          break;
        }
        cs.turn_done = true;
      }
      if (scan.front && *scan.front <= p.d_detect_front) {
        cs.reacquire_run += p.v_travel * dt;
        if (cs.reacquire_run >= p.reacquire_distance) {
          cs = detail::enter(cs, Mode::AlignToWall);
          std::tie(cs, cmd) = detail::align_step(cs, p, front, dt);
          break;
        }
      } else {
        cs.reacquire_run = 0.0;
      }
      cs.slide_distance += p.v_travel * dt;
      cs.corner_pivot_progress = std::min(kPi, kPi / 2.0 + cs.slide_distance / p.d_follow);
      if (kPi / 2.0 + cs.slide_distance / p.d_follow > kPi) {
        throw LostWallError();
      }
      cmd.v_side = side * p.v_travel;
      break;
    }
    case Mode::Finished:
      break;
  }
  return {cs, detail::clamp_command(cmd, p.limits)};
}

/// Lap completion signalled by the runner.
inline ControllerState finish(ControllerState cs) {
  cs.mode = Mode::Finished;
  cs.mode_entry_time = cs.clock;
  return cs;
}

}  // namespace platesim
