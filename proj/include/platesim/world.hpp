#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "platesim/geometry.hpp"
#include "platesim/rng.hpp"

namespace platesim {

enum class Face { North, South, East, West };

struct BoxObstacle {
  Vec2 center{};
  double width{0.45};  // along the box's local x axis
  double depth{0.35};  // along the box's local y axis
  double yaw{0.0};
  std::optional<Face> plate_face{};

  std::array<Vec2, 4> corners() const {
    const double hw = width / 2.0;
    const double hd = depth / 2.0;
    return {to_world({-hw, -hd}), to_world({hw, -hd}), to_world({hw, hd}), to_world({-hw, hd})};
  }

  Segment face_segment(Face f) const {
    const double hw = width / 2.0;
    const double hd = depth / 2.0;
    switch (f) {
      case Face::South: return {to_world({-hw, -hd}), to_world({hw, -hd})};
      case Face::East: return {to_world({hw, -hd}), to_world({hw, hd})};
      case Face::North: return {to_world({hw, hd}), to_world({-hw, hd})};
      case Face::West: return {to_world({-hw, hd}), to_world({-hw, -hd})};
    }
    return {};
  }

  Vec2 face_normal(Face f) const {
    switch (f) {
      case Face::South: return rotate({0.0, -1.0}, yaw);
      case Face::East: return rotate({1.0, 0.0}, yaw);
      case Face::North: return rotate({0.0, 1.0}, yaw);
      case Face::West: return rotate({-1.0, 0.0}, yaw);
    }
    return {};
  }

  bool contains(Vec2 p) const {
    const Vec2 local = rotate(p - center, -yaw);
    return std::abs(local.x) < width / 2.0 && std::abs(local.y) < depth / 2.0;
  }

 private:
  Vec2 to_world(Vec2 local) const { return center + rotate(local, yaw); }
};

struct PlateTarget {
  int id{0};
  Vec2 center{};
  Vec2 outward_normal{};
  double width{0.52};
  double height{0.11};
};

/// Immutable environment: garage boundary, boxes, plates and the fixed start
/// pose. `surfaces` lists every reflecting segment in tie-break order: the four
/// garage walls first, then each box's S, E, N, W faces in declaration order.
struct World {
  Rect garage{};
  std::vector<Segment> boundary_segments;
  std::vector<BoxObstacle> boxes;
  std::vector<PlateTarget> plates;
  Pose start_pose{};
  std::vector<Segment> surfaces;

  const PlateTarget* find_plate(int id) const {
    for (const auto& p : plates) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class WorldInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view face_code(std::optional<Face> f) {
  if (!f) return "-";
  switch (*f) {
    case Face::North: return "N";
    case Face::South: return "S";
    case Face::East: return "E";
    case Face::West: return "W";
  }
  return "-";
}

/// Builds a World from its parts, deriving segments and plates, and enforces
/// the world invariants.
inline World make_world(double garage_width, double garage_height, Pose start,
                        std::vector<BoxObstacle> boxes) {
  if (!(garage_width > 0.0) || !(garage_height > 0.0)) {
    throw WorldInvariantError("garage dimensions must be positive");
  }
  World w;
  w.garage = Rect{{0.0, 0.0}, {garage_width, garage_height}};
  const Vec2 c0{0.0, 0.0}, c1{garage_width, 0.0}, c2{garage_width, garage_height},
      c3{0.0, garage_height};
  w.boundary_segments = {{c0, c1}, {c1, c2}, {c2, c3}, {c3, c0}};
  w.surfaces = w.boundary_segments;

  constexpr double kTol = 1e-9;
  int next_plate = 1;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (!(b.width > 0.0) || !(b.depth > 0.0)) {
      throw WorldInvariantError("box " + std::to_string(i + 1) + ": width and depth must be positive");
    }
    for (Vec2 c : b.corners()) {
      if (!w.garage.contains(c, kTol)) {
        std::ostringstream os;
        os << "box " << i + 1 << " at (" << b.center.x << ", " << b.center.y
           << ") extends outside the garage";
        throw WorldInvariantError(os.str());
      }
    }
    for (Face f : {Face::South, Face::East, Face::North, Face::West}) {
      w.surfaces.push_back(b.face_segment(f));
    }
    if (b.plate_face) {
      const Segment s = b.face_segment(*b.plate_face);
      w.plates.push_back(PlateTarget{next_plate++, (s.a + s.b) * 0.5, b.face_normal(*b.plate_face)});
    }
  }
  if (!w.garage.strictly_contains(start.position)) {
    throw WorldInvariantError("start pose lies outside the garage");
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].contains(start.position)) {
      throw WorldInvariantError("start pose lies inside box " + std::to_string(i + 1));
    }
  }
  start.yaw = wrap_angle(start.yaw);
  w.start_pose = start;
  w.boxes = std::move(boxes);
  return w;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_number(std::string_view tok, int line) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ScenarioError(line, "expected a decimal number, got '" + std::string(tok) + "'");
  }
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses the line-oriented scenario format:
///   garage <width_m> <height_m>
///   start <x> <y> <yaw_deg>
///   box <cx> <cy> <w> <d> <yaw_deg> <N|S|E|W|->
inline World load_scenario(std::string_view text) {
  std::optional<std::pair<double, double>> garage;
  std::optional<Pose> start;
  std::vector<BoxObstacle> boxes;
  std::vector<int> box_lines;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;

    const auto expect = [&](std::size_t n) {
      if (tok.size() != n) {
        throw ScenarioError(line_no, "'" + std::string(tok[0]) + "' expects " + std::to_string(n - 1) +
                                         " fields, got " + std::to_string(tok.size() - 1));
      }
    };
    if (tok[0] == "garage") {
      expect(3);
      if (garage) throw ScenarioError(line_no, "duplicate 'garage' line");
      garage = {detail::parse_number(tok[1], line_no), detail::parse_number(tok[2], line_no)};
    } else if (tok[0] == "start") {
      expect(4);
      if (start) throw ScenarioError(line_no, "duplicate 'start' line");
      start = Pose{{detail::parse_number(tok[1], line_no), detail::parse_number(tok[2], line_no)},
                   deg_to_rad(detail::parse_number(tok[3], line_no))};
    } else if (tok[0] == "box") {
      expect(7);
      BoxObstacle b;
      b.center = {detail::parse_number(tok[1], line_no), detail::parse_number(tok[2], line_no)};
      b.width = detail::parse_number(tok[3], line_no);
      b.depth = detail::parse_number(tok[4], line_no);
      b.yaw = deg_to_rad(detail::parse_number(tok[5], line_no));
      const std::string_view f = tok[6];
      if (f == "N") b.plate_face = Face::North;
      else if (f == "S") b.plate_face = Face::South;
      else if (f == "E") b.plate_face = Face::East;
      else if (f == "W") b.plate_face = Face::West;
      else if (f != "-") throw ScenarioError(line_no, "plate face must be N, S, E, W or -, got '" + std::string(f) + "'");
      boxes.push_back(b);
      box_lines.push_back(line_no);
    } else {
      throw ScenarioError(line_no, "unknown directive '" + std::string(tok[0]) + "'");
    }
  }
  if (!garage) throw ScenarioError(0, "missing 'garage' line");
  if (!start) throw ScenarioError(0, "missing 'start' line");

  try {
    return make_world(garage->first, garage->second, *start, std::move(boxes));
  } catch (const WorldInvariantError& e) {
    // Re-anchor box errors at their source line.
    const std::string msg = e.what();
    if (msg.rfind("box ", 0) == 0) {
      const int idx = std::stoi(msg.substr(4));
      if (idx >= 1 && static_cast<std::size_t>(idx) <= box_lines.size()) {
        throw ScenarioError(box_lines[static_cast<std::size_t>(idx) - 1], msg);
      }
    }
    throw ScenarioError(0, msg);
  }
}

/// Emits the scenario text for a world. Numbers use the shortest round-trip
/// representation, so load_scenario(serialize_world(w)) reproduces w.
inline std::string serialize_world(const World& w) {
  using detail::format_number;
  std::string out;
  out += "garage " + format_number(w.garage.width()) + " " + format_number(w.garage.height()) + "\n";
  out += "start " + format_number(w.start_pose.position.x) + " " + format_number(w.start_pose.position.y) +
         " " + format_number(rad_to_deg(w.start_pose.yaw)) + "\n";
  for (const auto& b : w.boxes) {
    out += "box " + format_number(b.center.x) + " " + format_number(b.center.y) + " " +
           format_number(b.width) + " " + format_number(b.depth) + " " + format_number(rad_to_deg(b.yaw)) +
           " " + std::string(face_code(b.plate_face)) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in test layouts

inline constexpr double kGarageWidth = 6.0;
inline constexpr double kGarageDepth = 3.6;
inline constexpr double kBoxGap = 0.25;
inline constexpr double kRowStandoff = 2.0;
inline constexpr double kRowSpacing = 1.37;
inline constexpr double kDefaultJitter = 0.10;
inline constexpr double kDefaultBoxWidth = 0.45;
inline constexpr double kDefaultBoxDepth = 0.35;

struct TestCaseOptions {
  double box_width{kDefaultBoxWidth};
  double box_depth{kDefaultBoxDepth};
  std::uint64_t jitter_seed{0};
  double jitter_amplitude{kDefaultJitter};  // used by cases 2 and 4 only
};

/// Four reference layouts in a 6 x 3.6 m garage.
///
/// Cases 1/2: a free-standing row of four boxes running along x, plates on
/// the south faces, the drone starting 2 m south of the row and facing it.
/// Cases 3/4: two rows of three boxes running along y, one gap away from the
/// north wall,
/// with 1.37 m clear between the back of the first row and the front of the
/// second, plates on the west faces, the drone starting 2 m west of the first
/// row. Cases 2 and 4 add a seeded per-box
/// offset perpendicular to the row.
inline World build_test_case(int case_id, const TestCaseOptions& opt) {
  if (case_id < 1 || case_id > 4) {
    throw std::invalid_argument("test case id must be in 1..4, got " + std::to_string(case_id));
  }
  const bool jitter = case_id == 2 || case_id == 4;
  RngStream rng(derive_seed(opt.jitter_seed, "jitter"));
  const auto offset = [&]() { return jitter ? rng.uniform(-opt.jitter_amplitude, opt.jitter_amplitude) : 0.0; };

  const double w = opt.box_width;
  const double d = opt.box_depth;
  std::vector<BoxObstacle> boxes;

  if (case_id <= 2) {
    constexpr int kBoxes = 4;
    constexpr double kStartY = 0.15;
    const double row_len = kBoxes * w + (kBoxes - 1) * kBoxGap;
    const double x0 = kGarageWidth / 2.0 - row_len / 2.0;
    const double front_y = kStartY + kRowStandoff;
    for (int i = 0; i < kBoxes; ++i) {
      const double cx = x0 + w / 2.0 + i * (w + kBoxGap);
      boxes.push_back({{cx, front_y + d / 2.0 + offset()}, w, d, 0.0, Face::South});
    }
    const Pose start{{x0 + 1.5 * w + kBoxGap, kStartY}, kPi / 2.0};
    return make_world(kGarageWidth, kGarageDepth, start, std::move(boxes));
  }

  constexpr int kBoxes = 3;
  constexpr double kStartX = 0.6;
  const double first_front_x = kStartX + kRowStandoff;
  for (int row = 0; row < 2; ++row) {
    const double front_x = first_front_x + row * (d + kRowSpacing);
    for (int i = 0; i < kBoxes; ++i) {
      const double cy = kGarageDepth - kBoxGap - w / 2.0 - i * (w + kBoxGap);
      // yaw 90 deg: width runs along y and the local north face looks west.
      boxes.push_back({{front_x + d / 2.0 + offset(), cy}, w, d, kPi / 2.0, Face::North});
    }
  }
  const Pose start{{kStartX, kGarageDepth - 2.0 * kBoxGap - 1.5 * w}, 0.0};
  return make_world(kGarageWidth, kGarageDepth, start, std::move(boxes));
}

inline World build_test_case(int case_id, double box_width, double box_depth, std::uint64_t jitter_seed) {
  return build_test_case(case_id, TestCaseOptions{box_width, box_depth, jitter_seed, kDefaultJitter});
}

// ---------------------------------------------------------------------------
// Geometric queries

inline constexpr double kRangeResolution = 0.001;

struct RayHit {
  double distance{0.0};
  std::size_t segment{0};
};

/// Nearest surface hit along the ray, unquantized. Ties go to the lowest
/// segment index.
inline std::optional<RayHit> cast_ray(const World& world, Vec2 origin, Vec2 direction, double max_range) {
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < world.surfaces.size(); ++i) {
    const auto t = intersect_ray_segment(origin, direction, world.surfaces[i]);
    if (t && *t <= max_range && (!best || *t < best->distance)) {
      best = RayHit{*t, i};
    }
  }
  return best;
}

inline double quantize_range(double d) { return std::round(d / kRangeResolution) * kRangeResolution; }

/// Distance to the first surface at millimetre resolution, or nullopt when
/// nothing lies within max_range.
inline std::optional<double> ray_cast(const World& world, Vec2 origin, Vec2 direction, double max_range) {
  const auto hit = cast_ray(world, origin, direction, max_range);
  if (!hit) return std::nullopt;
  return quantize_range(hit->distance);
}

struct PlateSighting {
  int plate_id{0};
  double distance{0.0};
  double incidence{0.0};
};

inline std::vector<PlateSighting> plate_visibility(const World& world, const Pose& camera, double fov,
                                                   double max_dist, double max_incidence) {
  constexpr double kOcclusionTol = 1e-6;
  std::vector<PlateSighting> out;
  const Vec2 axis = camera.heading();
  for (const auto& plate : world.plates) {
    const Vec2 to_plate = plate.center - camera.position;
    const double dist = norm(to_plate);
    if (dist <= 0.0 || dist > max_dist) continue;
    const Vec2 ray = to_plate * (1.0 / dist);
    const double off_axis = std::acos(std::clamp(dot(ray, axis), -1.0, 1.0));
    if (off_axis > fov / 2.0) continue;
    const double incidence = std::acos(std::clamp(-dot(ray, plate.outward_normal), -1.0, 1.0));
    if (incidence > max_incidence) continue;
    const auto hit = cast_ray(world, camera.position, ray, dist + kOcclusionTol);
    if (hit && hit->distance < dist - kOcclusionTol) continue;
    out.push_back({plate.id, dist, incidence});
  }
  return out;
}

/// True when p lies strictly inside a box or outside the garage.
inline bool in_collision(const World& world, Vec2 p) {
  if (!world.garage.strictly_contains(p)) return true;
  for (const auto& b : world.boxes) {
    if (b.contains(p)) return true;
  }
  return false;
}

}  // namespace platesim
