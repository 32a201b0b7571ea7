#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rhgn/env/spec.hpp"
#include "rhgn/io.hpp"
#include "rhgn/sim/simulation.hpp"

namespace rhgn::harness {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kWhite{255, 255, 255};

// Red, blue, green for MB-1, MB-2, MB-3.
inline Rgb behaviour_colour(BehaviourId b) noexcept {
  switch (b) {
    case BehaviourId::MB1: return {220, 40, 40};
    case BehaviourId::MB2: return {40, 80, 230};
    case BehaviourId::MB3: return {40, 200, 60};
  }
  return kWhite;
}

class Raster {
 public:
  Raster(std::size_t width, std::size_t height) : w_(width), h_(height), px_(width * height, Rgb{0, 0, 0}) {}

  std::size_t width() const noexcept { return w_; }
  std::size_t height() const noexcept { return h_; }
  const Rgb& at(std::size_t x, std::size_t y) const { return px_.at(y * w_ + x); }

  void set(long x, long y, Rgb c) {
    if (x >= 0 && y >= 0 && static_cast<std::size_t>(x) < w_ && static_cast<std::size_t>(y) < h_) px_[y * w_ + x] = c;
  }

  void disc(double cx, double cy, double r, Rgb c) {
    for (long y = std::lround(cy - r); y <= std::lround(cy + r); ++y)
      for (long x = std::lround(cx - r); x <= std::lround(cx + r); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) set(x, y, c);
  }

  void line(double x0, double y0, double x1, double y1, Rgb c) {
    const auto n = static_cast<long>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (long i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      set(std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), c);
    }
  }

  std::vector<std::uint8_t> to_ppm() const {
    const std::string header = "P6\n" + std::to_string(w_) + " " + std::to_string(h_) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (const auto& p : px_) out.insert(out.end(), p.begin(), p.end());
    return out;
  }

 private:
  std::size_t w_, h_;
  std::vector<Rgb> px_;
};

struct MapStyle {
  double pixels_per_metre = 4.0;
  double margin_px = 4.0;
};

// Arena outline, walls, node and jammer dots, then one dot per selection event;
// y grows upward in the arena and downward in the image.
inline Raster render_map(const env::EnvironmentSpec& spec, std::span<const sim::SelectionEvent> events, MapStyle style = {}) {
  const double s = style.pixels_per_metre, m = style.margin_px;
  const auto w = static_cast<std::size_t>(std::ceil(spec.width * s + 2 * m)) + 1;
  const auto h = static_cast<std::size_t>(std::ceil(spec.height * s + 2 * m)) + 1;
  Raster img(w, h);
  auto px = [&](sim::Vec2 p) { return std::pair{m + p.x * s, m + (spec.height - p.y) * s}; };
  auto seg = [&](sim::Vec2 a, sim::Vec2 b, Rgb c) {
    const auto [x0, y0] = px(a);
    const auto [x1, y1] = px(b);
    img.line(x0, y0, x1, y1, c);
  };
  constexpr Rgb outline{110, 110, 110};
  seg({0, 0}, {spec.width, 0}, outline);
  seg({spec.width, 0}, {spec.width, spec.height}, outline);
  seg({spec.width, spec.height}, {0, spec.height}, outline);
  seg({0, spec.height}, {0, 0}, outline);
  for (const auto& e : events) {
    const auto [x, y] = px(e.position);
    img.set(std::lround(x), std::lround(y), behaviour_colour(e.behaviour));
  }
  for (const auto& wall : spec.walls) seg(wall.segment.a, wall.segment.b, kWhite);
  for (const auto& n : spec.nodes) {
    const auto [x, y] = px(n.start);
    img.disc(x, y, 2.5, kWhite);
  }
  for (const auto& j : spec.jammers) {
    const auto [x, y] = px(j.position);
    img.disc(x, y, 2.5, kWhite);
  }
  return img;
}

inline std::string svg_colour(Rgb c) {
  std::ostringstream os;
  os << "rgb(" << int(c[0]) << ',' << int(c[1]) << ',' << int(c[2]) << ')';
  return os.str();
}

inline std::string render_svg(const env::EnvironmentSpec& spec, std::span<const sim::SelectionEvent> events) {
  std::ostringstream os;
  auto y = [&](double v) { return spec.height - v; };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-2 -2 " << spec.width + 4 << ' ' << spec.height + 4 << "\">\n";
  os << "<rect x=\"-2\" y=\"-2\" width=\"" << spec.width + 4 << "\" height=\"" << spec.height + 4 << "\" fill=\"black\"/>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height
     << "\" fill=\"none\" stroke=\"grey\" stroke-width=\"0.3\"/>\n";
  for (const auto& e : events)
    os << "<circle cx=\"" << e.position.x << "\" cy=\"" << y(e.position.y) << "\" r=\"0.3\" fill=\""
       << svg_colour(behaviour_colour(e.behaviour)) << "\"/>\n";
  for (const auto& w : spec.walls)
    os << "<line x1=\"" << w.segment.a.x << "\" y1=\"" << y(w.segment.a.y) << "\" x2=\"" << w.segment.b.x << "\" y2=\""
       << y(w.segment.b.y) << "\" stroke=\"white\" stroke-width=\"0.6\"/>\n";
  auto dot = [&](sim::Vec2 p, const std::string& label) {
    os << "<circle cx=\"" << p.x << "\" cy=\"" << y(p.y) << "\" r=\"1\" fill=\"white\"/>\n";
    os << "<text x=\"" << p.x + 1.5 << "\" y=\"" << y(p.y) - 1.5 << "\" font-size=\"4\" fill=\"white\">" << label << "</text>\n";
  };
  for (const auto& n : spec.nodes) dot(n.start, n.name);
  for (std::size_t j = 0; j < spec.jammers.size(); ++j) dot(spec.jammers[j].position, "J" + std::to_string(j));
  os << "</svg>\n";
  return os.str();
}

// Writes PPM, or SVG when the path ends in ".svg".
inline void emit_behaviour_map(const env::EnvironmentSpec& spec, std::span<const sim::SelectionEvent> events,
                               const std::string& path, MapStyle style = {}) {
  if (path.ends_with(".svg")) {
    const auto text = render_svg(spec, events);
    io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  } else {
    io::write_file(path, render_map(spec, events, style).to_ppm());
  }
}

// Selection counts per square grid cell, keyed by (column, row).
inline std::map<std::pair<long, long>, std::size_t> grid_counts(std::span<const sim::SelectionEvent> events, BehaviourId b,
                                                                double cell = 10.0) {
  std::map<std::pair<long, long>, std::size_t> out;
  for (const auto& e : events)
    if (e.behaviour == b) ++out[{static_cast<long>(std::floor(e.position.x / cell)), static_cast<long>(std::floor(e.position.y / cell))}];
  return out;
}

}  // namespace rhgn::harness
