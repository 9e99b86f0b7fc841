#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "platesim/detector.hpp"
#include "platesim/geometry.hpp"
#include "platesim/telemetry.hpp"
#include "platesim/world.hpp"

namespace platesim {

inline constexpr double kDefaultClusterRadius = 0.35;
inline constexpr double kDefaultMatchRadius = 0.5;
// Plate detections are placed this far ahead of the camera before clustering.
inline constexpr double kDefaultProjectionDistance = 0.6;

struct PathSample {
  std::uint16_t seq{0};
  double timestamp{0.0};
  Pose pose{};
  Label label{Label::Background};
  double confidence{0.0};
  std::optional<FrameTruth> truth{};  // filled from the oracle log when available
};

struct PathMap {
  std::vector<PathSample> samples;
  std::optional<Rect> bounds;
  std::size_t duplicates{0};
  std::size_t gaps{0};
  std::size_t out_of_order{0};
  std::set<std::uint16_t> seen;
  std::optional<std::uint16_t> last_seq;
};

inline PathSample sample_from_packet(const TelemetryPacket& pkt) {
  PathSample s;
  s.seq = pkt.seq;
  s.timestamp = pkt.timestamp_ms / 1000.0;
  s.pose = Pose{Vec2{from_mm(pkt.x_mm), from_mm(pkt.y_mm)}, from_cdeg(pkt.yaw_cdeg)};
  s.label = pkt.label == 1 ? Label::Plate : Label::Background;
  s.confidence = from_q8(pkt.confidence_q8);
  return s;
}

/// In-place ingestion. Duplicates are counted and ignored; a sequence number
/// behind the newest one is kept (sorted by timestamp) and counted.
inline void ingest(PathMap& map, const TelemetryPacket& pkt) {
  if (!map.seen.insert(pkt.seq).second) {
    ++map.duplicates;
    return;
  }
  const PathSample s = sample_from_packet(pkt);
  if (map.last_seq) {
    const auto ahead = static_cast<std::uint16_t>(pkt.seq - *map.last_seq);
    if (ahead >= 0x8000) {
      ++map.out_of_order;
    } else {
      if (ahead > 1) ++map.gaps;
      map.last_seq = pkt.seq;
    }
  } else {
    map.last_seq = pkt.seq;
  }
  const auto pos = std::upper_bound(map.samples.begin(), map.samples.end(), s,
                                    [](const PathSample& a, const PathSample& b) { return a.timestamp < b.timestamp; });
  map.samples.insert(pos, s);
  if (map.bounds) {
    map.bounds->expand(s.pose.position);
  } else {
    map.bounds = Rect{s.pose.position, s.pose.position};
  }
}

inline PathMap ingest_packet(PathMap map, const TelemetryPacket& pkt) {
  ingest(map, pkt);
  return map;
}

// ---- oracle log ----------------------------------------------------------

struct OracleEntry {
  std::int64_t frame_index{0};
  FrameTruth truth{FrameTruth::NegativeFrame};
  std::vector<int> visible_ids;
  bool operator==(const OracleEntry&) const = default;
};

inline std::string format_oracle_line(const OracleEntry& e) {
  std::string s = "frame " + std::to_string(e.frame_index) + " " +
                  (e.truth == FrameTruth::PositiveFrame ? "1" : "0") + " ";
  if (e.visible_ids.empty()) {
    s += "-";
  }
  for (std::size_t i = 0; i < e.visible_ids.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(e.visible_ids[i]);
  }
  return s;
}

class OracleParseError : public std::runtime_error {
 public:
  OracleParseError(std::size_t line, const std::string& what)
      : std::runtime_error("oracle line " + std::to_string(line) + ": " + what) {}
};

inline std::vector<OracleEntry> parse_oracle(const std::string& text) {
  std::vector<OracleEntry> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kw, ids;
    OracleEntry e;
    int truth = -1;
    if (!(ls >> kw >> e.frame_index >> truth) || kw != "frame" || (truth != 0 && truth != 1)) {
      throw OracleParseError(n, "expected 'frame <index> <0|1> <ids>'");
    }
    e.truth = truth == 1 ? FrameTruth::PositiveFrame : FrameTruth::NegativeFrame;
    if (ls >> ids && ids != "-") {
      std::istringstream is(ids);
      std::string tok;
      while (std::getline(is, tok, ',')) {
        try {
          e.visible_ids.push_back(std::stoi(tok));
        } catch (const std::exception&) {
          throw OracleParseError(n, "bad plate id '" + tok + "'");
        }
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Attaches ground truth to samples by frame index; seq carries the low 16
/// bits of the frame index.
inline void join_truth(PathMap& map, const std::vector<OracleEntry>& oracle) {
  std::map<std::uint16_t, FrameTruth> by_seq;
  for (const auto& e : oracle) by_seq[static_cast<std::uint16_t>(e.frame_index & 0xFFFF)] = e.truth;
  for (auto& s : map.samples) {
    const auto it = by_seq.find(s.seq);
    s.truth = it == by_seq.end() ? std::nullopt : std::optional<FrameTruth>(it->second);
  }
}

// ---- metrics -------------------------------------------------------------

struct LabeledEvent {
  Label label{Label::Background};
  FrameTruth truth{FrameTruth::NegativeFrame};
};

struct MetricsReport {
  TruthCounts counts{};
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double flight_time{0.0};
  std::int64_t frames{0};
};

inline MetricsReport metrics_from_counts(const TruthCounts& c, double flight_time = 0.0) {
  MetricsReport r;
  r.counts = c;
  r.frames = c.total();
  r.flight_time = flight_time;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (r.precision && r.recall) {
    const double s = *r.precision + *r.recall;
    r.f1 = s > 0.0 ? 2.0 * *r.precision * *r.recall / s : 0.0;
  }
  return r;
}

inline MetricsReport compute_metrics(const std::vector<LabeledEvent>& events, double flight_time = 0.0) {
  TruthCounts c;
  for (const auto& e : events) c = truth_table_update(c, e.label, e.truth);
  return metrics_from_counts(c, flight_time);
}

inline MetricsReport compute_metrics(const PathMap& map, double flight_time) {
  std::vector<LabeledEvent> events;
  for (const auto& s : map.samples) {
    if (s.truth) events.push_back({s.label, *s.truth});
  }
  return compute_metrics(events, flight_time);
}

inline std::string format_fraction(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

inline std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", s);
  return buf;
}

/// `metrics <round> TP FP FN TN P R F1 flight_s`
inline std::string format_metrics_line(int round, const MetricsReport& m) {
  return "metrics " + std::to_string(round) + " " + std::to_string(m.counts.tp) + " " + std::to_string(m.counts.fp) +
         " " + std::to_string(m.counts.fn) + " " + std::to_string(m.counts.tn) + " " + format_fraction(m.precision) +
         " " + format_fraction(m.recall) + " " + format_fraction(m.f1) + " " + format_seconds(m.flight_time);
}

inline std::string format_metrics_table(const std::vector<MetricsReport>& rounds) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %5s %5s %5s %5s %7s %7s %7s %9s\n", "round", "TP", "FP", "FN", "TN", "P", "R",
                "F1", "time_s");
  out += buf;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const auto& m = rounds[i];
    std::snprintf(buf, sizeof buf, "%-6zu %5lld %5lld %5lld %5lld %7s %7s %7s %9s\n", i + 1,
                  static_cast<long long>(m.counts.tp), static_cast<long long>(m.counts.fp),
                  static_cast<long long>(m.counts.fn), static_cast<long long>(m.counts.tn),
                  format_fraction(m.precision).c_str(), format_fraction(m.recall).c_str(),
                  format_fraction(m.f1).c_str(), format_seconds(m.flight_time).c_str());
    out += buf;
  }
  return out;
}

// ---- clustering ----------------------------------------------------------

struct ClusterInput {
  std::size_t event{0};  // caller's index, kept for traceability
  Vec2 position{};
};

struct DetectionCluster {
  int id{0};
  Vec2 centroid{};
  std::vector<std::size_t> member_events;
  std::vector<Vec2> member_positions;
  std::optional<int> matched_plate;
};

/// Greedy online clustering in input order. An event joins the nearest
/// cluster that stays within `cluster_radius` of every member after the
/// centroid update; otherwise it founds a new cluster.
inline std::vector<DetectionCluster> cluster_detections(const std::vector<ClusterInput>& events,
                                                        double cluster_radius) {
  if (!(cluster_radius > 0.0)) throw std::invalid_argument("cluster_radius must be positive");
  std::vector<DetectionCluster> clusters;
  for (const auto& ev : events) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const double d = distance(clusters[i].centroid, ev.position);
      if (d <= cluster_radius) cand.emplace_back(d, i);
    }
    std::sort(cand.begin(), cand.end());
    bool placed = false;
    for (const auto& [d, i] : cand) {
      auto& c = clusters[i];
      const double n = static_cast<double>(c.member_positions.size());
      const Vec2 next = (c.centroid * n + ev.position) * (1.0 / (n + 1.0));
      bool fits = distance(next, ev.position) <= cluster_radius;
      for (const auto& m : c.member_positions) fits = fits && distance(next, m) <= cluster_radius;
      if (!fits) continue;
      c.centroid = next;
      c.member_events.push_back(ev.event);
      c.member_positions.push_back(ev.position);
      placed = true;
      break;
    }
    if (!placed) {
      DetectionCluster c;
      c.id = static_cast<int>(clusters.size()) + 1;
      c.centroid = ev.position;
      c.member_events.push_back(ev.event);
      c.member_positions.push_back(ev.position);
      clusters.push_back(std::move(c));
    }
  }
  return clusters;
}

/// Greedy matching by ascending centroid-to-plate distance; each cluster and
/// each plate is used at most once.
inline void match_clusters(std::vector<DetectionCluster>& clusters, const std::vector<PlateTarget>& plates,
                           double match_radius) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    clusters[c].matched_plate.reset();
    for (std::size_t p = 0; p < plates.size(); ++p) {
      const double d = distance(clusters[c].centroid, plates[p].center);
      if (d <= match_radius) pairs.emplace_back(d, c, p);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> plate_used(plates.size(), false);
  for (const auto& [d, c, p] : pairs) {
    if (clusters[c].matched_plate || plate_used[p]) continue;
    clusters[c].matched_plate = plates[p].id;
    plate_used[p] = true;
  }
}

/// Plate-labeled samples projected ahead of the camera, in time order.
inline std::vector<ClusterInput> plate_detections(const PathMap& map,
                                                  double projection = kDefaultProjectionDistance) {
  std::vector<ClusterInput> out;
  for (std::size_t i = 0; i < map.samples.size(); ++i) {
    const auto& s = map.samples[i];
    if (s.label != Label::Plate) continue;
    out.push_back({i, s.pose.position + s.pose.heading() * projection});
  }
  return out;
}

// ---- coverage ------------------------------------------------------------

struct CoverageReport {
  std::map<int, std::optional<int>> first_round;  // plate id -> 1-based round
  bool all_covered{false};
  int rounds_used{0};
};

inline CoverageReport aggregate_rounds(const std::vector<std::vector<DetectionCluster>>& rounds,
                                       const std::vector<int>& plate_ids) {
  if (rounds.empty()) throw std::invalid_argument("aggregate_rounds needs at least one round");
  CoverageReport r;
  for (int id : plate_ids) r.first_round[id] = std::nullopt;
  r.rounds_used = static_cast<int>(rounds.size());
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    for (const auto& c : rounds[k]) {
      if (!c.matched_plate) continue;
      auto it = r.first_round.find(*c.matched_plate);
      if (it != r.first_round.end() && !it->second) it->second = static_cast<int>(k) + 1;
    }
    const bool all = std::all_of(r.first_round.begin(), r.first_round.end(),
                                 [](const auto& kv) { return kv.second.has_value(); });
    if (all) {
      r.all_covered = true;
      r.rounds_used = static_cast<int>(k) + 1;
      break;
    }
  }
  return r;
}

inline std::string format_coverage(const CoverageReport& c) {
  std::string out;
  for (const auto& [id, round] : c.first_round) {
    out += "plate " + std::to_string(id) + " " + (round ? std::to_string(*round) : std::string("never")) + "\n";
  }
  out += std::string("all_covered ") + (c.all_covered ? "true" : "false") + "\n";
  out += "rounds_used " + std::to_string(c.rounds_used) + "\n";
  return out;
}

}  // namespace platesim
