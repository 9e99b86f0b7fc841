#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "platesim/mapper.hpp"
#include "platesim/world.hpp"

namespace platesim {

struct SvgStyle {
  double px_per_m{100.0};
  double margin_m{0.3};
  double legend_px{70.0};
};

namespace detail {

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

class SvgFrame {
 public:
  SvgFrame(Rect view, const SvgStyle& st) : view_(view), st_(st) {}
  double x(double wx) const { return (wx - view_.min.x) * st_.px_per_m; }
  // World y grows upward, SVG y grows downward.
  double y(double wy) const { return (view_.max.y - wy) * st_.px_per_m; }
  std::string pt(Vec2 p) const { return fmt3(x(p.x)) + "," + fmt3(y(p.y)); }
  double width_px() const { return view_.width() * st_.px_per_m; }
  double height_px() const { return view_.height() * st_.px_per_m; }

 private:
  Rect view_;
  SvgStyle st_;
};

}  // namespace detail

/// Renders the reconstructed path, classified frames and clusters. Output is
/// a pure function of the inputs.
inline std::string render_map(const PathMap& map, const World* world, const std::vector<DetectionCluster>& clusters,
                              const SvgStyle& style = {}) {
  using detail::fmt3;
  Rect view{{0.0, 0.0}, {1.0, 1.0}};
  bool have = false;
  auto include = [&](Vec2 p) {
    if (!have) {
      view = Rect{p, p};
      have = true;
    } else {
      view.expand(p);
    }
  };
  if (world) {
    include(world->garage.min);
    include(world->garage.max);
  }
  if (map.bounds) {
    include(map.bounds->min);
    include(map.bounds->max);
  }
  for (const auto& c : clusters) include(c.centroid);
  view.min = view.min - Vec2{style.margin_m, style.margin_m};
  view.max = view.max + Vec2{style.margin_m, style.margin_m};

  const detail::SvgFrame f(view, style);
  const double w = f.width_px();
  const double h = f.height_px() + style.legend_px;
  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt3(w) + "\" height=\"" + fmt3(h) +
       "\" viewBox=\"0 0 " + fmt3(w) + " " + fmt3(h) + "\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"" + fmt3(w) + "\" height=\"" + fmt3(h) + "\" fill=\"white\"/>\n";

  if (world) {
    const Rect& g = world->garage;
    o += "<rect x=\"" + fmt3(f.x(g.min.x)) + "\" y=\"" + fmt3(f.y(g.max.y)) + "\" width=\"" +
         fmt3(g.width() * style.px_per_m) + "\" height=\"" + fmt3(g.height() * style.px_per_m) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (const auto& b : world->boxes) {
      const auto c = b.corners();
      o += "<polygon points=\"" + f.pt(c[0]) + " " + f.pt(c[1]) + " " + f.pt(c[2]) + " " + f.pt(c[3]) +
           "\" fill=\"#d2b48c\" stroke=\"#8b5a2b\" stroke-width=\"1\"/>\n";
      if (b.plate_face) {
        const Segment s = b.face_segment(*b.plate_face);
        o += "<line x1=\"" + fmt3(f.x(s.a.x)) + "\" y1=\"" + fmt3(f.y(s.a.y)) + "\" x2=\"" + fmt3(f.x(s.b.x)) +
             "\" y2=\"" + fmt3(f.y(s.b.y)) + "\" stroke=\"#1f4fbf\" stroke-width=\"4\"/>\n";
      }
    }
    for (const auto& p : world->plates) {
      const Vec2 lp = p.center + p.outward_normal * 0.12;
      o += "<text x=\"" + fmt3(f.x(lp.x)) + "\" y=\"" + fmt3(f.y(lp.y)) +
           "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#1f4fbf\">P" + std::to_string(p.id) + "</text>\n";
    }
  }

  if (!map.samples.empty()) {
    o += "<polyline fill=\"none\" stroke=\"#4060a0\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < map.samples.size(); ++i) {
      if (i) o += " ";
      o += f.pt(map.samples[i].pose.position);
    }
    o += "\"/>\n";
  }
  for (const auto& s : map.samples) {
    std::string color = "#999999";
    if (s.label == Label::Plate) {
      if (!s.truth) color = "orange";
      else color = *s.truth == FrameTruth::PositiveFrame ? "green" : "red";
    }
    o += "<circle cx=\"" + fmt3(f.x(s.pose.position.x)) + "\" cy=\"" + fmt3(f.y(s.pose.position.y)) +
         "\" r=\"" + (s.label == Label::Plate ? "3" : "2") + "\" fill=\"" + color + "\"/>\n";
  }
  for (const auto& c : clusters) {
    o += "<circle cx=\"" + fmt3(f.x(c.centroid.x)) + "\" cy=\"" + fmt3(f.y(c.centroid.y)) + "\" r=\"" +
         fmt3(kDefaultClusterRadius * style.px_per_m) + "\" fill=\"none\" stroke=\"" +
         (c.matched_plate ? "green" : "red") + "\" stroke-dasharray=\"4,3\"/>\n";
  }

  // Legend and a 1 m scale bar below the map.
  const double ly = f.height_px() + 18.0;
  struct Item {
    const char* color;
    const char* text;
  };
  const Item items[] = {{"#999999", "background"}, {"green", "plate, true"}, {"red", "plate, false"},
                        {"orange", "plate, no truth"}};
  double lx = 10.0;
  for (const auto& it : items) {
    o += "<circle cx=\"" + fmt3(lx) + "\" cy=\"" + fmt3(ly) + "\" r=\"4\" fill=\"" + it.color + "\"/>\n";
    o += "<text x=\"" + fmt3(lx + 8.0) + "\" y=\"" + fmt3(ly + 4.0) + "\" font-size=\"11\">" + it.text + "</text>\n";
    lx += 110.0;
  }
  const double sy = ly + 28.0;
  o += "<line x1=\"10.000\" y1=\"" + fmt3(sy) + "\" x2=\"" + fmt3(10.0 + style.px_per_m) + "\" y2=\"" + fmt3(sy) +
       "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  o += "<text x=\"" + fmt3(14.0 + style.px_per_m) + "\" y=\"" + fmt3(sy + 4.0) + "\" font-size=\"11\">1 m</text>\n";
  o += "</svg>\n";
  return o;
}

}  // namespace platesim
