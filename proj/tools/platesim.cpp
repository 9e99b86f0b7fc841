#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "platesim/platesim.hpp"

namespace {

using namespace platesim;

int cmd_run(RunConfig cfg) {
  const ExperimentResult ex = run_experiment(cfg);
  std::vector<MetricsReport> reports;
  for (const auto& r : ex.rounds) reports.push_back(r.metrics);
  std::cout << format_metrics_table(reports);
  for (std::size_t i = 0; i < ex.rounds.size(); ++i) {
    std::cout << "round " << i + 1 << " " << termination_name(ex.rounds[i].termination) << "\n";
  }
  std::cout << format_coverage(ex.coverage);
  return 0;
}

int cmd_report(const std::string& dir) {
  const ExperimentResult ex = report_from_logs(dir);
  std::vector<MetricsReport> reports;
  for (const auto& r : ex.rounds) reports.push_back(r.metrics);
  std::cout << format_metrics_table(reports) << format_coverage(ex.coverage);
  return 0;
}

int cmd_protocol_check(std::uint64_t seed, int count) {
  RngStream rng(seed);
  int failures = 0;
  const auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "PASS " : "FAIL ") << what << "\n";
    if (!ok) ++failures;
  };

  bool round_trip = true;
  double err_mm = 0.0, err_deg = 0.0, err_conf = 0.0;
  for (int i = 0; i < count; ++i) {
    const double x = rng.uniform(-50.0, 50.0);
    const double y = rng.uniform(-50.0, 50.0);
    const double yaw = rng.uniform(-kPi, kPi);
    const double conf = rng.uniform();
    TelemetryPacket p;
    p.seq = static_cast<std::uint16_t>(i);
    p.timestamp_ms = static_cast<std::uint32_t>(rng.uniform() * 4.0e9);
    p.x_mm = to_mm(x);
    p.y_mm = to_mm(y);
    p.yaw_cdeg = to_cdeg(yaw);
    p.label = rng.uniform() < 0.5 ? 0 : 1;
    p.confidence_q8 = to_q8(conf);
    const auto r = decode_packet(encode_packet(p));
    const auto* q = std::get_if<TelemetryPacket>(&r);
    round_trip = round_trip && q && *q == p;
    err_mm = std::max({err_mm, std::abs(from_mm(p.x_mm) - x) * 1000.0, std::abs(from_mm(p.y_mm) - y) * 1000.0});
    err_deg = std::max(err_deg, std::abs(rad_to_deg(wrap_angle(from_cdeg(p.yaw_cdeg) - yaw))));
    err_conf = std::max(err_conf, std::abs(from_q8(p.confidence_q8) - conf));
  }
  check(round_trip, "round-trip of " + std::to_string(count) + " random packets");

  TelemetryPacket base;
  base.seq = 7;
  base.timestamp_ms = 123456;
  base.x_mm = 1500;
  base.y_mm = -250;
  base.yaw_cdeg = 9000;
  base.label = 1;
  base.confidence_q8 = 200;
  const Frame f = encode_packet(base);
  int rejected = 0;
  for (std::size_t bit = 0; bit < kFrameSize * 8; ++bit) {
    Frame g = f;
    g[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    if (std::holds_alternative<DecodeError>(decode_packet(g))) ++rejected;
  }
  check(rejected == static_cast<int>(kFrameSize * 8),
        "single-bit flips rejected: " + std::to_string(rejected) + "/" + std::to_string(kFrameSize * 8));

  char buf[128];
  std::snprintf(buf, sizeof buf, "position error %.4f mm <= 0.5", err_mm);
  check(err_mm <= 0.5 + 1e-9, buf);
  std::snprintf(buf, sizeof buf, "yaw error %.5f deg <= 0.005", err_deg);
  check(err_deg <= 0.005 + 1e-9, buf);
  std::snprintf(buf, sizeof buf, "confidence error %.5f <= 1/255", err_conf);
  check(err_conf <= 1.0 / 255.0 + 1e-12, buf);
  return failures == 0 ? 0 : 1;
}

int cmd_receive(const std::string& endpoint, const std::string& out_path) {
  SocketStream s = tcp_connect(parse_endpoint(endpoint));
  FrameReceiver rx;
  std::ofstream out;
  if (!out_path.empty()) out.open(out_path);
  std::array<std::uint8_t, 512> chunk{};
  PathMap map;
  for (;;) {
    const std::size_t n = s.read(chunk);
    if (n == 0) break;
    for (const auto& p : rx.feed(std::span<const std::uint8_t>(chunk.data(), n))) {
      ingest(map, p);
      if (out) {
        out << "packet " << p.seq << " " << p.timestamp_ms << " " << p.x_mm << " " << p.y_mm << " " << p.yaw_cdeg
            << " " << int(p.label) << " " << int(p.confidence_q8) << "\n";
      }
    }
  }
  std::cout << "frames " << rx.stats().frames << "\nbad_frames " << rx.stats().bad_frames << "\nskipped_bytes "
            << rx.stats().skipped_bytes << "\nduplicates " << map.duplicates << "\ngaps " << map.gaps
            << "\nout_of_order " << map.out_of_order << "\n";
  if (rx.pending() > 0) throw PartialFrameError(rx.pending());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"platesim: wall-following plate-scanning drone simulator"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;
  std::vector<std::string> sets;
  std::string scenario, out_dir, listen;
  double speed = 0.0, light = 0.0, drop = 0.0;
  int rounds = 0;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "simulate rounds and write logs, metrics and maps");
  run->add_option("--config", config_file, "key = value settings file");
  run->add_option("--set", sets, "extra key=value setting (repeatable)");
  auto* o_scenario = run->add_option("--scenario", scenario, "scenario file or case1..case4");
  auto* o_speed = run->add_option("--speed", speed, "travel speed, m/s");
  auto* o_rounds = run->add_option("--rounds", rounds, "number of rounds");
  auto* o_seed = run->add_option("--seed", seed, "master seed");
  auto* o_light = run->add_option("--light", light, "light factor in (0, 1]");
  auto* o_out = run->add_option("--out", out_dir, "output directory");
  auto* o_listen = run->add_option("--listen", listen, "stream telemetry to a TCP client, host:port");
  auto* o_drop = run->add_option("--drop", drop, "packet drop probability");

  std::string in_dir;
  auto* report = app.add_subcommand("report", "regenerate metrics and maps from logs");
  report->add_option("--in", in_dir, "run output directory")->required();

  std::uint64_t check_seed = 1;
  int check_count = 10000;
  auto* pcheck = app.add_subcommand("protocol-check", "codec self-tests");
  pcheck->add_option("--seed", check_seed);
  pcheck->add_option("--count", check_count);

  std::string connect, recv_out;
  auto* receive = app.add_subcommand("receive", "connect to a running simulator and decode its telemetry");
  receive->add_option("--connect", connect, "host:port")->required();
  receive->add_option("--out", recv_out, "write decoded packets here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw std::runtime_error("cannot open config file '" + config_file + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        apply_config_text(cfg, buf.str());
      }
      for (const auto& s : sets) apply_assignment(cfg, s);
      if (*o_scenario) cfg.scenario = scenario;
      if (*o_speed) cfg.speed = speed;
      if (*o_rounds) cfg.rounds = rounds;
      if (*o_seed) cfg.master_seed = seed;
      if (*o_light) cfg.light = light;
      if (*o_out) cfg.output_dir = out_dir;
      if (*o_listen) cfg.listen = listen;
      if (*o_drop) cfg.drop_probability = drop;
      return cmd_run(cfg);
    }
    if (report->parsed()) return cmd_report(in_dir);
    if (pcheck->parsed()) return cmd_protocol_check(check_seed, check_count);
    if (receive->parsed()) return cmd_receive(connect, recv_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
