#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "platesim/controller.hpp"
#include "platesim/detector.hpp"
#include "platesim/drone.hpp"
#include "platesim/mapper.hpp"
#include "platesim/rng.hpp"
#include "platesim/svg.hpp"
#include "platesim/telemetry.hpp"
#include "platesim/transport.hpp"
#include "platesim/world.hpp"

namespace platesim {

inline constexpr double kControlDt = 0.05;
inline constexpr int kTicksPerFrame = 10;  // 2 Hz camera on a 20 Hz loop
inline constexpr double kLapRadius = 0.4;
inline constexpr double kLapMinTime = 10.0;
inline constexpr double kContactTolerance = 0.05;

struct RunConfig {
  std::string scenario{"case1"};
  double speed{0.2};
  int rounds{3};
  std::uint64_t master_seed{42};
  double light{1.0};
  NoiseModel noise{};
  DetectorModel detector{};
  ControllerParams controller{};
  double battery_budget{kDefaultBatteryBudget};
  std::string output_dir{"out"};
  std::optional<std::string> listen;
  double drop_probability{0.0};

  void validate() const {
    if (!(speed > 0.0 && speed <= 0.5)) throw std::invalid_argument("speed must lie in (0, 0.5]");
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (!(battery_budget > 0.0)) throw std::invalid_argument("battery_budget must be positive");
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
      throw std::invalid_argument("drop probability must lie in [0, 1]");
    }
    noise.validate();
    effective_controller().validate();
    effective_detector().validate();
  }

  ControllerParams effective_controller() const {
    ControllerParams p = controller;
    p.v_travel = speed;
    return p;
  }
  DetectorModel effective_detector() const {
    DetectorModel d = detector;
    d.light_factor = light;
    return d;
  }
};

enum class Termination { LapComplete, Battery, LostWall, Collision };

inline constexpr std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::LapComplete: return "LapComplete";
    case Termination::Battery: return "Battery";
    case Termination::LostWall: return "LostWall";
    case Termination::Collision: return "Collision";
  }
  return "?";
}

inline Termination parse_termination(std::string_view s) {
  for (auto t : {Termination::LapComplete, Termination::Battery, Termination::LostWall, Termination::Collision}) {
    if (termination_name(t) == s) return t;
  }
  throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
}

struct RoundResult {
  MetricsReport metrics{};
  std::vector<DetectionCluster> clusters;
  double flight_time{0.0};
  Termination termination{Termination::LapComplete};
  std::int64_t frames{0};
  std::size_t packets_sent{0};
  std::size_t packets_dropped{0};
};

/// Everything a round produces. `true_path` is sampled every control tick.
struct RoundOutput {
  RoundResult result;
  std::vector<DetectionEvent> events;
  std::vector<OracleEntry> oracle;
  std::vector<std::uint8_t> telemetry;  // frames that survived the drop filter
  PathMap map;
  std::vector<Pose> true_path;
  std::optional<Vec2> first_contact;
};

struct RoundStreams {
  RngStream sensing;
  RngStream odometry;
  RngStream detector;
  std::uint64_t drop_seed;

  RoundStreams(std::uint64_t round_seed, std::uint64_t noise_seed)
      : sensing(derive_seed(round_seed, "sensing", noise_seed)),
        odometry(derive_seed(round_seed, "odometry", noise_seed)),
        detector(derive_seed(round_seed, "detector")),
        drop_seed(derive_seed(round_seed, "drop")) {}
};

inline std::uint64_t round_seed(std::uint64_t master_seed, int round_index) {
  return derive_seed(master_seed, "round", static_cast<std::uint64_t>(round_index));
}

/// Runs the mapper pipeline over received packets.
inline void analyse_round(RoundResult& r, PathMap& map, const std::vector<OracleEntry>& oracle, const World& world) {
  join_truth(map, oracle);
  r.metrics = compute_metrics(map, r.flight_time);
  r.clusters = cluster_detections(plate_detections(map), kDefaultClusterRadius);
  match_clusters(r.clusters, world.plates, kDefaultMatchRadius);
}

using PacketTap = std::function<void(std::span<const std::uint8_t>)>;

struct TickInfo {
  const DroneState& state;  // after the step
  const ControllerState& controller;
  const RangeScan& scan;
  const VelocityCommand& command;
};

struct RoundHooks {
  PacketTap on_frame;  // every transmitted frame, as produced
  std::function<void(const TickInfo&)> on_tick;
};

/// Simulates one lap from the world's start pose.
inline RoundOutput run_round(const World& world, const RunConfig& cfg, std::uint64_t seed,
                             const RoundHooks& hooks = {}) {
  cfg.validate();
  const ControllerParams cp = cfg.effective_controller();
  const DetectorModel dm = cfg.effective_detector();
  RoundStreams rs(seed, cfg.noise.rng_seed);

  RoundOutput out;
  InProcessStream link;
  DropFilter drop(cfg.drop_probability, rs.drop_seed);

  DroneState state = initial_state(world.start_pose);
  ControllerState cs;
  const double cos_match = std::cos(kPi / 4.0);
  std::optional<Vec2> contact_pos;
  Vec2 contact_dir{};
  double contact_time = 0.0;
  Termination term = Termination::Battery;
  std::int64_t frame_index = 0;

  const auto travel_dir = [&](const Pose& p) { return rotate(Vec2{0.0, cp.side_sign()}, p.yaw); };

  for (std::int64_t tick = 0;; ++tick) {
    if (tick % kTicksPerFrame == 0) {
      const DetectionEvent ev = classify_frame(world, state, dm, rs.detector, frame_index);
      OracleEntry oe{ev.frame_index, ev.truth, ev.visible_plate_ids};
      out.oracle.push_back(oe);
      if (drop.keep()) {
        const Frame f = encode_packet(make_packet(ev));
        link.write(f);
        out.telemetry.insert(out.telemetry.end(), f.begin(), f.end());
        if (hooks.on_frame) hooks.on_frame(f);
        ++out.result.packets_sent;
      } else {
        ++out.result.packets_dropped;
      }
      out.events.push_back(ev);
      ++frame_index;
    }

    const RangeScan scan = sense_ranges(world, state, cfg.noise, rs.sensing);
    VelocityCommand cmd;
    try {
      std::tie(cs, cmd) = controller_step(cs, cp, scan, kControlDt);
    } catch (const LostWallError&) {
      term = Termination::LostWall;
      break;
    }
    DroneState next = step_kinematics(state, cmd, kControlDt, cfg.battery_budget);
    if (next.battery_exhausted) {
      state = next;
      term = Termination::Battery;
      break;
    }
    state = odometry_update(next, cmd, kControlDt, cfg.noise, rs.odometry);
    out.true_path.push_back(state.true_pose);
    if (hooks.on_tick) hooks.on_tick(TickInfo{state, cs, scan, cmd});

    if (in_collision(world, state.true_pose.position)) {
      term = Termination::Collision;
      break;
    }
    if (cs.mode == Mode::FollowWall) {
      if (!contact_pos) {
        const double d = ray_cast(world, state.true_pose.position, state.true_pose.heading(), kRangerMaxRange)
                             .value_or(kRangerMaxRange);
        if (std::abs(d - cp.d_follow) <= kContactTolerance) {
          contact_pos = state.true_pose.position;
          contact_dir = travel_dir(state.true_pose);
          contact_time = state.sim_time;
        }
      } else if (state.sim_time - contact_time >= kLapMinTime &&
                 distance(state.true_pose.position, *contact_pos) <= kLapRadius &&
                 dot(travel_dir(state.true_pose), contact_dir) >= cos_match) {
        cs = finish(cs);
        term = Termination::LapComplete;
        break;
      }
    }
  }
  link.close();

  out.result.termination = term;
  out.result.flight_time = state.sim_time;
  out.result.frames = frame_index;
  out.first_contact = contact_pos;

  FrameReceiver rx;
  for (const auto& pkt : receive_all(link, rx)) ingest(out.map, pkt);
  analyse_round(out.result, out.map, out.oracle, world);
  return out;
}

// ---- experiment ------------------------------------------------------------

inline World resolve_world(const RunConfig& cfg) {
  const std::string& s = cfg.scenario;
  if (s.size() == 5 && s.rfind("case", 0) == 0 && s[4] >= '1' && s[4] <= '4') {
    TestCaseOptions opt;
    opt.jitter_seed = cfg.master_seed;
    return build_test_case(s[4] - '0', opt);
  }
  std::ifstream in(s);
  if (!in) throw std::runtime_error("cannot open scenario file '" + s + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

struct ExperimentResult {
  World world;
  std::vector<RoundResult> rounds;
  CoverageReport coverage;
};

inline std::vector<int> plate_ids(const World& w) {
  std::vector<int> ids;
  for (const auto& p : w.plates) ids.push_back(p.id);
  return ids;
}

inline CoverageReport coverage_of(const World& world, const std::vector<RoundResult>& rounds) {
  std::vector<std::vector<DetectionCluster>> cl;
  for (const auto& r : rounds) cl.push_back(r.clusters);
  return aggregate_rounds(cl, plate_ids(world));
}

inline std::string format_round_result(const RoundResult& r) {
  std::string s;
  s += "termination " + std::string(termination_name(r.termination)) + "\n";
  s += "flight_time " + format_seconds(r.flight_time) + "\n";
  s += "frames " + std::to_string(r.frames) + "\n";
  s += "packets_sent " + std::to_string(r.packets_sent) + "\n";
  s += "packets_dropped " + std::to_string(r.packets_dropped) + "\n";
  return s;
}

inline RoundResult parse_round_result(const std::string& text) {
  RoundResult r;
  std::istringstream in(text);
  std::string key, value;
  while (in >> key >> value) {
    if (key == "termination") r.termination = parse_termination(value);
    else if (key == "flight_time") r.flight_time = std::stod(value);
    else if (key == "frames") r.frames = std::stoll(value);
    else if (key == "packets_sent") r.packets_sent = std::stoull(value);
    else if (key == "packets_dropped") r.packets_dropped = std::stoull(value);
  }
  return r;
}

namespace detail {

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string round_name(int r, std::string_view suffix) {
  return "round_" + std::to_string(r) + suffix.data();
}

}  // namespace detail

inline std::string format_oracle(const std::vector<OracleEntry>& oracle) {
  std::string s;
  for (const auto& e : oracle) s += format_oracle_line(e) + "\n";
  return s;
}

/// Writes metrics.txt, summary.txt, coverage.txt and one SVG per round.
inline void write_reports(const std::filesystem::path& dir, const World& world, const std::vector<RoundResult>& rounds,
                          const std::vector<PathMap>& maps, const CoverageReport& cov) {
  std::string metrics;
  std::vector<MetricsReport> reports;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    metrics += format_metrics_line(static_cast<int>(i) + 1, rounds[i].metrics) + "\n";
    reports.push_back(rounds[i].metrics);
  }
  detail::write_file(dir / "metrics.txt", metrics);
  std::string summary = format_metrics_table(reports);
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    summary += "round " + std::to_string(i + 1) + " " + std::string(termination_name(rounds[i].termination)) + "\n";
  }
  detail::write_file(dir / "summary.txt", summary);
  detail::write_file(dir / "coverage.txt", format_coverage(cov));
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    detail::write_file(dir / detail::round_name(static_cast<int>(i) + 1, ".svg"),
                       render_map(maps[i], &world, rounds[i].clusters));
  }
}

/// Runs every round and writes all artifacts to cfg.output_dir. With
/// `cfg.listen` set, the frames of all rounds are also streamed to the first
/// TCP client that connects.
inline ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  ExperimentResult ex{resolve_world(cfg), {}, {}};
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "world.txt", serialize_world(ex.world));

  std::optional<TcpListener> listener;
  std::optional<SocketStream> client;
  if (cfg.listen) {
    listener.emplace(parse_endpoint(*cfg.listen));
    client.emplace(listener->accept());
  }
  RoundHooks hooks;
  if (client) hooks.on_frame = [&](std::span<const std::uint8_t> b) { client->write(b); };

  std::vector<PathMap> maps;
  for (int r = 1; r <= cfg.rounds; ++r) {
    RoundOutput out = run_round(ex.world, cfg, round_seed(cfg.master_seed, r), hooks);
    detail::write_file(dir / detail::round_name(r, "_telemetry.bin"),
                       std::string_view(reinterpret_cast<const char*>(out.telemetry.data()), out.telemetry.size()));
    detail::write_file(dir / detail::round_name(r, "_oracle.txt"), format_oracle(out.oracle));
    detail::write_file(dir / detail::round_name(r, "_result.txt"), format_round_result(out.result));
    ex.rounds.push_back(out.result);
    maps.push_back(std::move(out.map));
  }
  if (client) client->close();
  ex.coverage = coverage_of(ex.world, ex.rounds);
  write_reports(dir, ex.world, ex.rounds, maps, ex.coverage);
  return ex;
}

/// Rebuilds metrics, coverage and maps from the logs in `dir`.
inline ExperimentResult report_from_logs(const std::filesystem::path& dir) {
  ExperimentResult ex{load_scenario(detail::read_file(dir / "world.txt")), {}, {}};
  std::vector<PathMap> maps;
  for (int r = 1; std::filesystem::exists(dir / detail::round_name(r, "_telemetry.bin")); ++r) {
    RoundResult rr = parse_round_result(detail::read_file(dir / detail::round_name(r, "_result.txt")));
    const auto oracle = parse_oracle(detail::read_file(dir / detail::round_name(r, "_oracle.txt")));
    const std::string bin = detail::read_file(dir / detail::round_name(r, "_telemetry.bin"));
    FrameReceiver rx;
    PathMap map;
    for (const auto& pkt : rx.feed(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bin.data()),
                                                                 bin.size()))) {
      ingest(map, pkt);
    }
    if (rx.pending() > 0) throw PartialFrameError(rx.pending());
    analyse_round(rr, map, oracle, ex.world);
    ex.rounds.push_back(rr);
    maps.push_back(std::move(map));
  }
  if (ex.rounds.empty()) throw std::runtime_error("no round logs found in " + dir.string());
  ex.coverage = coverage_of(ex.world, ex.rounds);
  write_reports(dir, ex.world, ex.rounds, maps, ex.coverage);
  return ex;
}

}  // namespace platesim
