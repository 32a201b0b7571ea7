#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace rhgn::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) noexcept { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) noexcept { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) noexcept { x *= s; y *= s; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) noexcept { return {-a.x, -a.y}; }
  friend Vec2 operator*(Vec2 a, double s) noexcept { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) noexcept { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) noexcept { return norm(a - b); }
inline Vec2 perp(Vec2 a) noexcept { return {-a.y, a.x}; }  // counter-clockwise

inline Vec2 unit(Vec2 a) noexcept {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : Vec2{};
}

inline Vec2 clamp_length(Vec2 a, double max_len) noexcept {
  const double n = norm(a);
  return n > max_len && n > 0.0 ? a * (max_len / n) : a;
}

struct Segment {
  Vec2 a;
  Vec2 b;
};

inline Vec2 closest_point(const Segment& s, Vec2 p) noexcept {
  const Vec2 d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return s.a;
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return s.a + d * t;
}

inline double distance(const Segment& s, Vec2 p) noexcept { return distance(closest_point(s, p), p); }

// True when the closed segments share at least one point.
inline bool intersects(const Segment& s, const Segment& t) noexcept {
  auto orient = [](Vec2 a, Vec2 b, Vec2 c) {
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
  };
  auto on_segment = [](Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(s.a, s.b, t.a), o2 = orient(s.a, s.b, t.b);
  const int o3 = orient(t.a, t.b, s.a), o4 = orient(t.a, t.b, s.b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(s.a, s.b, t.a)) return true;
  if (o2 == 0 && on_segment(s.a, s.b, t.b)) return true;
  if (o3 == 0 && on_segment(t.a, t.b, s.a)) return true;
  if (o4 == 0 && on_segment(t.a, t.b, s.b)) return true;
  return false;
}

// Distance along a ray (unit direction) to the segment, if hit.
inline std::optional<double> ray_hit(Vec2 origin, Vec2 dir, const Segment& s) noexcept {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Vec2 w = s.a - origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

inline double segment_distance(const Segment& s, const Segment& t) noexcept {
  if (intersects(s, t)) return 0.0;
  return std::min({distance(s, t.a), distance(s, t.b), distance(t, s.a), distance(t, s.b)});
}

}  // namespace rhgn::sim
