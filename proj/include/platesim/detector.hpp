#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "platesim/drone.hpp"
#include "platesim/rng.hpp"
#include "platesim/world.hpp"

namespace platesim {

enum class Label : std::uint8_t { Background = 0, Plate = 1 };
enum class FrameTruth { NegativeFrame, PositiveFrame };

/// Geometric-probabilistic stand-in for the onboard plate classifier.
struct DetectorModel {
  double p_base{0.6};
  double d_near{0.3};
  double d_sweet{1.0};
  double d_max{1.3};
  double incidence_max{0.3};
  double p_fp{0.05};
  double light_factor{1.0};
  double fov{1.466};

  void validate() const {
    const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(d_near > 0.0 && d_near < d_sweet && d_sweet < d_max)) {
      throw std::invalid_argument("detector: require 0 < d_near < d_sweet < d_max");
    }
    if (!prob(p_base) || !prob(p_fp)) throw std::invalid_argument("detector: probabilities must lie in [0, 1]");
    if (!(light_factor > 0.0 && light_factor <= 1.0)) {
      throw std::invalid_argument("detector: light_factor must lie in (0, 1]");
    }
    if (!(fov > 0.0 && fov < kPi)) throw std::invalid_argument("detector: fov must lie in (0, pi)");
  }

  // Trapezoid: 0.5 at contact rising to 1 at d_near, flat to d_sweet, then
  // linear down to 0 at d_max.
  double distance_factor(double d) const {
    if (d < 0.0 || d >= d_max) return 0.0;
    if (d < d_near) return 0.5 + 0.5 * d / d_near;
    if (d <= d_sweet) return 1.0;
    return (d_max - d) / (d_max - d_sweet);
  }

  double detection_probability(const PlateSighting& s) const {
    return std::clamp(p_base * distance_factor(s.distance) * std::cos(s.incidence) * light_factor, 0.0, 1.0);
  }
};

struct DetectionEvent {
  std::int64_t frame_index{0};
  double sim_time{0.0};
  Pose estimated_pose{};
  Label label{Label::Background};
  double confidence{0.5};
  FrameTruth truth{FrameTruth::NegativeFrame};
  std::vector<int> visible_plate_ids;  // ground truth; never transmitted
  double detection_probability{0.0};
};

/// Classifies one camera frame. The camera sits on the true pose looking
/// along the heading. Always consumes exactly two draws: the label draw, then
/// the confidence draw. Correct labels get confidence in [0.75, 1), wrong
/// ones in [0.5, 0.75).
inline DetectionEvent classify_frame(const World& world, const DroneState& state, const DetectorModel& model,
                                     RngStream& rng, std::int64_t frame_index = 0) {
  DetectionEvent ev;
  ev.frame_index = frame_index;
  ev.sim_time = state.sim_time;
  ev.estimated_pose = state.estimated_pose;

  const auto seen = plate_visibility(world, state.true_pose, model.fov, model.d_max, model.incidence_max);
  double p = model.p_fp;
  if (!seen.empty()) {
    ev.truth = FrameTruth::PositiveFrame;
    p = 0.0;
    for (const auto& s : seen) {
      ev.visible_plate_ids.push_back(s.plate_id);
      p = std::max(p, model.detection_probability(s));
    }
  }
  ev.detection_probability = p;

  const double u_label = rng.uniform();
  const double u_conf = rng.uniform();
  ev.label = u_label < p ? Label::Plate : Label::Background;
  const bool correct = (ev.label == Label::Plate) == (ev.truth == FrameTruth::PositiveFrame);
  ev.confidence = correct ? 0.75 + 0.25 * u_conf : 0.5 + 0.25 * u_conf;
  return ev;
}

struct TruthCounts {
  std::int64_t tp{0};
  std::int64_t fp{0};
  std::int64_t fn{0};
  std::int64_t tn{0};

  std::int64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const TruthCounts&) const = default;
};

inline TruthCounts truth_table_update(TruthCounts acc, Label label, FrameTruth truth) {
  const bool plate = label == Label::Plate;
  const bool positive = truth == FrameTruth::PositiveFrame;
  if (plate && positive) ++acc.tp;
  else if (plate) ++acc.fp;
  else if (positive) ++acc.fn;
  else ++acc.tn;
  return acc;
}

inline TruthCounts truth_table_update(TruthCounts acc, const DetectionEvent& ev) {
  return truth_table_update(acc, ev.label, ev.truth);
}

}  // namespace platesim
