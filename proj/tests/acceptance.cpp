// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "platesim/platesim.hpp"
#include "sim_support.hpp"

using namespace platesim;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct SeedRun {
  std::vector<RoundResult> rounds;
  CoverageReport coverage;
};

SeedRun run_seed(const RunConfig& cfg) {
  SeedRun s;
  const World w = resolve_world(cfg);
  for (int r = 1; r <= cfg.rounds; ++r) s.rounds.push_back(run_round(w, cfg, round_seed(cfg.master_seed, r)).result);
  s.coverage = coverage_of(w, s.rounds);
  return s;
}

constexpr int kPinnedSeeds = 20;
constexpr std::uint64_t kPinnedSeed = 42;

bool covered_within(const CoverageReport& c, int rounds) { return c.all_covered && c.rounds_used <= rounds; }

// Criteria 1 and 3 share the case sweep.
std::vector<std::vector<SeedRun>> g_cases;

void criterion_coverage() {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;
  for (int c = 1; c <= 4; ++c) {
    std::vector<SeedRun> runs;
    int hits = 0;
    for (int s = 1; s <= kPinnedSeeds; ++s) {
      RunConfig cfg;
      cfg.scenario = "case" + std::to_string(c);
      cfg.master_seed = static_cast<std::uint64_t>(s);
      cfg.rounds = 3;
      runs.push_back(run_seed(cfg));
      hits += covered_within(runs.back().coverage, 3);
    }
    ok = ok && hits >= 18;
    detail += fmt("case%d %d/%d, ", c, hits, kPinnedSeeds);
    g_cases.push_back(std::move(runs));
  }
  const double t = seconds_since(t0);
  ok = ok && t < 60.0;
  report(1, ok, "coverage by aggregation", detail + fmt("%.1f s", t));
}

void criterion_tp() {
  const auto t0 = Clock::now();
  int in_band = 0;
  long long tp_min = 1LL << 40, tp_max = 0;
  for (int s = 1; s <= 100; ++s) {
    RunConfig cfg;
    cfg.master_seed = static_cast<std::uint64_t>(s);
    const World w = resolve_world(cfg);
    const auto tp = run_round(w, cfg, round_seed(cfg.master_seed, 1)).result.metrics.counts.tp;
    in_band += tp >= 7 && tp <= 15;
    tp_min = std::min<long long>(tp_min, tp);
    tp_max = std::max<long long>(tp_max, tp);
  }
  const double t = seconds_since(t0);
  report(2, in_band >= 90 && t < 60.0, "TP calibration",
         fmt("case1 round-1 TP in [7,15] for %d/100 seeds (range %lld..%lld), %.1f s", in_band, tp_min, tp_max, t));
}

void criterion_flight_time() {
  const auto& c1 = g_cases[0];
  const auto& c3 = g_cases[2];
  int in_env = 0, doubled = 0;
  double lo = 1e9, hi = 0, worst_ratio = 1e9;
  for (int i = 0; i < kPinnedSeeds; ++i) {
    const double t1 = c1[static_cast<std::size_t>(i)].rounds[0].flight_time;
    const double t3 = c3[static_cast<std::size_t>(i)].rounds[0].flight_time;
    in_env += t1 >= 60.0 && t1 <= 180.0;
    doubled += t3 > 2.0 * t1;
    lo = std::min(lo, t1);
    hi = std::max(hi, t1);
    worst_ratio = std::min(worst_ratio, t3 / t1);
  }
  report(3, in_env == kPinnedSeeds && doubled == kPinnedSeeds, "flight-time envelope",
         fmt("case1 %.1f..%.1f s in [60,180] for %d/%d seeds; case3 > 2x case1 for %d/%d (min ratio %.2f)", lo, hi,
             in_env, kPinnedSeeds, doubled, kPinnedSeeds, worst_ratio));
}

void criterion_speed() {
  const double speeds[] = {0.1, 0.2, 0.3};
  bool ok = true;
  std::int64_t frames[3]{};
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    RunConfig cfg;
    cfg.speed = speeds[i];
    cfg.master_seed = kPinnedSeed;
    cfg.rounds = 2;
    const SeedRun s = run_seed(cfg);
    const bool cov = covered_within(s.coverage, 2);
    ok = ok && cov;
    frames[i] = s.rounds[0].frames;
    detail += fmt("%.1f m/s: %s, %lld frames; ", speeds[i], cov ? "covered" : "NOT covered",
                  static_cast<long long>(frames[i]));
  }
  // frames * speed should be constant.
  for (int i = 0; i < 3; ++i) {
    const double rel = (static_cast<double>(frames[i]) * speeds[i]) / (static_cast<double>(frames[1]) * speeds[1]);
    ok = ok && rel >= 0.9 && rel <= 1.1;
    detail += fmt("%s%.3f", i ? "/" : "frames*v ratio ", rel);
  }
  report(4, ok, "speed experiment shape", fmt("seed %llu, ", static_cast<unsigned long long>(kPinnedSeed)) + detail);
}

// A seed passes the FN half when every round's FN strictly exceeds the
// light 1.0 round; both halves use the 18/20 seed rule of criterion 1.
void criterion_light() {
  int covered = 0, fn_seeds = 0, rounds_more = 0, rounds_total = 0;
  long long fn_dim = 0, fn_bright = 0;
  std::string ties;
  for (int s = 1; s <= kPinnedSeeds; ++s) {
    RunConfig bright;
    bright.master_seed = static_cast<std::uint64_t>(s);
    bright.rounds = 2;
    RunConfig dim = bright;
    dim.light = 0.5;
    const SeedRun b = run_seed(bright);
    const SeedRun d = run_seed(dim);
    covered += covered_within(d.coverage, 2);
    bool all_more = true;
    for (std::size_t r = 0; r < 2; ++r) {
      const auto fd = d.rounds[r].metrics.counts.fn;
      const auto fb = b.rounds[r].metrics.counts.fn;
      ++rounds_total;
      rounds_more += fd > fb;
      if (fd <= fb) {
        all_more = false;
        ties += fmt(" seed %d round %zu FN %lld vs %lld;", s, r + 1, static_cast<long long>(fd), static_cast<long long>(fb));
      }
      fn_dim += fd;
      fn_bright += fb;
    }
    fn_seeds += all_more;
  }
  report(5, covered >= 18 && fn_seeds >= 18, "light experiment shape",
         fmt("light 0.5 covered within 2 rounds for %d/%d seeds; FN strictly higher in every round for %d/%d seeds, "
             "%d/%d rounds (total FN %lld vs %lld)",
             covered, kPinnedSeeds, fn_seeds, kPinnedSeeds, rounds_more, rounds_total, fn_dim, fn_bright) +
             (ties.empty() ? "" : ";" + ties.substr(0, ties.size() - 1)));
}

void criterion_metrics() {
  RngStream rng(6);
  int mismatches = 0, f1_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(rng.uniform() * 500);
    const double pl = rng.uniform(), pt = rng.uniform();
    std::vector<LabeledEvent> ev;
    for (int i = 0; i < n; ++i) {
      ev.push_back({rng.uniform() < pl ? Label::Plate : Label::Background,
                    rng.uniform() < pt ? FrameTruth::PositiveFrame : FrameTruth::NegativeFrame});
    }
    std::int64_t cell[2][2]{};
    for (const auto& e : ev) ++cell[e.label == Label::Plate][e.truth == FrameTruth::PositiveFrame];
    const TruthCounts oracle{cell[1][1], cell[1][0], cell[0][1], cell[0][0]};
    const auto m = compute_metrics(ev);
    bool same = m.counts == oracle;
    const auto ratio = [](std::int64_t a, std::int64_t b) -> std::optional<double> {
      if (b == 0) return std::nullopt;
      return static_cast<double>(a) / static_cast<double>(b);
    };
    same = same && m.precision == ratio(oracle.tp, oracle.tp + oracle.fp);
    same = same && m.recall == ratio(oracle.tp, oracle.tp + oracle.fn);
    mismatches += !same;
    if (m.f1 && (*m.f1 < std::min(*m.precision, *m.recall) - 1e-12 || *m.f1 > std::max(*m.precision, *m.recall) + 1e-12)) {
      ++f1_violations;
    }
  }
  report(6, mismatches == 0 && f1_violations == 0, "metric correctness",
         fmt("%d/1000 recount mismatches, %d F1 bound violations", mismatches, f1_violations));
}

void criterion_protocol() {
  RngStream rng(7);
  int bad_round_trips = 0;
  double err_mm = 0, err_deg = 0, err_conf = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(-100.0, 100.0), y = rng.uniform(-100.0, 100.0);
    const double yaw = rng.uniform(-kPi, kPi), conf = rng.uniform();
    DetectionEvent ev;
    ev.frame_index = i;
    ev.sim_time = rng.uniform() * 3600.0;
    ev.estimated_pose = Pose{{x, y}, yaw};
    ev.label = rng.uniform() < 0.5 ? Label::Plate : Label::Background;
    ev.confidence = conf;
    const TelemetryPacket p = make_packet(ev);
    const auto r = decode_packet(encode_packet(p));
    const auto* q = std::get_if<TelemetryPacket>(&r);
    bad_round_trips += !(q && *q == p);
    err_mm = std::max({err_mm, std::abs(from_mm(p.x_mm) - x) * 1e3, std::abs(from_mm(p.y_mm) - y) * 1e3});
    err_deg = std::max(err_deg, std::abs(rad_to_deg(wrap_angle(from_cdeg(p.yaw_cdeg) - yaw))));
    err_conf = std::max(err_conf, std::abs(from_q8(p.confidence_q8) - conf));
  }
  DetectionEvent ev;
  ev.frame_index = 1234;
  ev.sim_time = 61.5;
  ev.estimated_pose = Pose{{2.5, -0.75}, 1.0};
  ev.label = Label::Plate;
  ev.confidence = 0.8;
  const Frame f = encode_packet(make_packet(ev));
  int rejected = 0;
  for (std::size_t bit = 0; bit < kFrameSize * 8; ++bit) {
    Frame g = f;
    g[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    rejected += std::holds_alternative<DecodeError>(decode_packet(g));
  }
  const bool ok = bad_round_trips == 0 && rejected == 160 && err_mm <= 0.5 + 1e-9 && err_deg <= 0.005 + 1e-9 &&
                  err_conf <= 1.0 / 255.0 + 1e-12;
  report(7, ok, "protocol",
         fmt("%d/10000 round-trip failures, %d/160 bit flips rejected, max error %.4f mm, %.5f deg, %.5f", bad_round_trips,
             rejected, err_mm, err_deg, err_conf));
}

void criterion_controller() {
  const ControllerParams p;
  double dist_err = 0, yaw_err = 0;
  bool followed = true;
  for (double offset : {-0.4, -0.2, 0.0, 0.2, 0.4}) {
    const auto run = testing::straight_wall_run(offset, NoiseModel::none(), 60.0, p);
    const auto ss = testing::steady_state(run, p.d_follow);
    followed = followed && ss.reached_follow;
    dist_err = std::max(dist_err, ss.max_distance_error);
    yaw_err = std::max(yaw_err, ss.max_yaw_error);
  }
  long lost = 0;
  const long illegal = testing::fuzz_mode_graph(1000000, 8, &lost);
  report(8, followed && dist_err <= 0.05 && yaw_err <= 0.05 && illegal == 0, "controller contract",
         fmt("max |d - %.2f| = %.4f m, max yaw error %.4f rad, %ld illegal transitions in 1e6 fuzzed steps", p.d_follow,
             dist_err, yaw_err, illegal));
}

void criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "platesim_acceptance";
  fs::remove_all(base);
  RunConfig a;
  a.output_dir = (base / "a").string();
  RunConfig b = a;
  b.output_dir = (base / "b").string();
  run_experiment(a);
  run_experiment(b);
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(a.output_dir)) {
    ++files;
    const fs::path other = fs::path(b.output_dir) / e.path().filename();
    differ += !fs::exists(other) || detail::read_file(e.path()) != detail::read_file(other);
  }
  for (const auto& e : fs::directory_iterator(b.output_dir)) differ += !fs::exists(fs::path(a.output_dir) / e.path().filename());
  fs::remove_all(base);
  report(9, files > 0 && differ == 0, "determinism", fmt("%d files compared, %d differ", files, differ));
}

}  // namespace

int main() {
  criterion_coverage();
  criterion_tp();
  criterion_flight_time();
  criterion_speed();
  criterion_light();
  criterion_metrics();
  criterion_protocol();
  criterion_controller();
  criterion_determinism();
  std::printf("%d/9 criteria passed\n", 9 - g_failures);
  return g_failures;
}
