#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rhgn/error.hpp"
#include "rhgn/hgn/pyramid.hpp"
#include "rhgn/io.hpp"

namespace rhgn::classifier {

enum class Quantiser : std::uint8_t {
  Identity = 0,  // counts, ids, flags
  Decimal = 1,   // metres / dB at 0.1 resolution, stored as value * 10
  NoiseBin = 2,  // 7-way noise state
};

struct Component {
  std::string name;
  Quantiser quantiser = Quantiser::Identity;
};

struct Segment {
  std::string name;
  std::vector<Component> components;

  // Length of the pattern handed to the pyramid (odd).
  std::size_t pattern_length() const noexcept { return components.size() | 1u; }
};

inline constexpr std::array<double, 6> kNoiseBinEdges{-95.0, -85.5, -71.25, -47.5, -23.75, 0.0};

// Bins are [lo, hi): -95 falls in bin 1, 0 in bin 6.
inline hgn::ComponentValue noise_bin(double dbm) noexcept {
  hgn::ComponentValue bin = 0;
  for (double e : kNoiseBinEdges)
    if (dbm >= e) ++bin;
  return bin;
}

inline hgn::ComponentValue quantise_value(Quantiser q, double v) {
  if (!std::isfinite(v)) throw Error(Errc::NonFinite, "observation contains a non-finite reading");
  switch (q) {
    case Quantiser::Identity: return static_cast<hgn::ComponentValue>(std::llround(v));
    case Quantiser::Decimal: return static_cast<hgn::ComponentValue>(std::llround(v * 10.0));
    case Quantiser::NoiseBin: return noise_bin(v);
  }
  throw Error(Errc::InvalidArgument, "unknown quantiser");
}

class PatternSchema {
 public:
  PatternSchema() = default;
  explicit PatternSchema(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw Error(Errc::InvalidArgument, "schema needs at least one segment");
    for (const auto& s : segments_) {
      if (s.components.empty()) throw Error(Errc::InvalidArgument, "segment " + s.name + " is empty");
      width_ += s.components.size();
    }
  }

  // Networking 21, Packets 13, Distance 15.
  static PatternSchema standard();

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::size_t width() const noexcept { return width_; }

  // One padded pattern per segment; padding components are 0.
  std::vector<std::vector<hgn::ComponentValue>> quantise(std::span<const double> raw) const {
    if (raw.size() != width_)
      throw Error(Errc::LengthMismatch,
                  "observation has " + std::to_string(raw.size()) + " values, schema expects " + std::to_string(width_));
    std::vector<std::vector<hgn::ComponentValue>> out;
    out.reserve(segments_.size());
    std::size_t at = 0;
    for (const auto& s : segments_) {
      std::vector<hgn::ComponentValue> p(s.pattern_length(), 0);
      for (std::size_t i = 0; i < s.components.size(); ++i) p[i] = quantise_value(s.components[i].quantiser, raw[at++]);
      out.push_back(std::move(p));
    }
    return out;
  }

  std::uint64_t digest() const {
    io::Writer w;
    serialize(w);
    io::Fnv1a h;
    h.update(w.bytes());
    return h.digest();
  }

  void serialize(io::Writer& out) const {
    out.put<std::uint32_t>(static_cast<std::uint32_t>(segments_.size()));
    for (const auto& s : segments_) {
      out.put_string(s.name);
      out.put<std::uint32_t>(static_cast<std::uint32_t>(s.components.size()));
      for (const auto& c : s.components) {
        out.put_string(c.name);
        out.put<std::uint8_t>(static_cast<std::uint8_t>(c.quantiser));
      }
    }
  }

  static PatternSchema deserialize(io::Reader& in) {
    std::vector<Segment> segs(in.get<std::uint32_t>());
    if (segs.size() > 64) throw Error(Errc::CorruptBundle, "implausible segment count");
    for (auto& s : segs) {
      s.name = in.get_string();
      const auto count = in.get<std::uint32_t>();
      if (count > in.remaining()) throw Error(Errc::CorruptBundle, "implausible component count");
      s.components.resize(count);
      for (auto& c : s.components) {
        c.name = in.get_string();
        const auto q = in.get<std::uint8_t>();
        if (q > 2) throw Error(Errc::CorruptBundle, "unknown quantiser");
        c.quantiser = static_cast<Quantiser>(q);
      }
    }
    return PatternSchema(std::move(segs));
  }

 private:
  std::vector<Segment> segments_;
  std::size_t width_ = 0;
};

namespace detail {

inline Segment networking_segment() {
  Segment s{"networking", {}};
  auto add = [&](std::string name, Quantiser q = Quantiser::Identity) { s.components.push_back({std::move(name), q}); };
  add("neighbourhood_size");
  add("sink_id");
  add("source_id");
  for (int window : {10, 100, 500, 1000}) {
    const auto w = std::to_string(window);
    add("unique_sinks_" + w);
    add("sink_changes_" + w);
    add("unique_sources_" + w);
    add("source_changes_" + w);
  }
  add("jamming_strength", Quantiser::Decimal);
  add("noise_state", Quantiser::NoiseBin);
  return s;
}

inline Segment packets_segment() {
  Segment s{"packets", {{"packets_held", Quantiser::Identity}}};
  for (const char* kind : {"swarm", "nonswarm"})
    for (const char* which : {"closest", "sinkward", "sourceward"}) {
      const std::string base = std::string(which) + "_" + kind;
      s.components.push_back({base + "_has_packets", Quantiser::Identity});
      s.components.push_back({base + "_is_full", Quantiser::Identity});
    }
  return s;
}

inline Segment distance_segment() {
  Segment s{"distance", {}};
  auto add = [&](std::string name) { s.components.push_back({std::move(name), Quantiser::Decimal}); };
  add("source_sink_distance");
  add("closest_swarm_distance");
  add("closest_swarm_signal");
  add("sinkward_swarm_distance");
  add("sinkward_swarm_signal");
  add("sourceward_swarm_distance");
  add("sourceward_swarm_signal");
  add("rough_sinkward_swarm_distance");
  add("closest_nonswarm_distance");
  add("closest_nonswarm_signal");
  add("sinkward_nonswarm_distance");
  add("sinkward_nonswarm_signal");
  add("sourceward_nonswarm_distance");
  add("sourceward_nonswarm_signal");
  add("closest_wall_distance");
  return s;
}

}  // namespace detail

inline PatternSchema PatternSchema::standard() {
  return PatternSchema({detail::networking_segment(), detail::packets_segment(), detail::distance_segment()});
}

// Offsets into a standard-schema observation.
namespace field {
inline constexpr std::size_t kNeighbourhoodSize = 0;
inline constexpr std::size_t kSinkId = 1;
inline constexpr std::size_t kSourceId = 2;
inline constexpr std::size_t kWindowCounters = 3;  // 4 windows x (unique sinks, sink changes, unique sources, source changes)
inline constexpr std::size_t kJammingStrength = 19;
inline constexpr std::size_t kNoiseState = 20;
inline constexpr std::size_t kPacketsHeld = 21;
inline constexpr std::size_t kPacketFlags = 22;  // 12 flags, swarm block then non-swarm block
inline constexpr std::size_t kSourceSinkDistance = 34;
inline constexpr std::size_t kClosestSwarmDistance = 35;
inline constexpr std::size_t kClosestSwarmSignal = 36;
inline constexpr std::size_t kSinkwardSwarmDistance = 37;
inline constexpr std::size_t kSinkwardSwarmSignal = 38;
inline constexpr std::size_t kSourcewardSwarmDistance = 39;
inline constexpr std::size_t kSourcewardSwarmSignal = 40;
inline constexpr std::size_t kRoughSinkwardSwarmDistance = 41;
inline constexpr std::size_t kClosestNonSwarmDistance = 42;
inline constexpr std::size_t kClosestNonSwarmSignal = 43;
inline constexpr std::size_t kSinkwardNonSwarmDistance = 44;
inline constexpr std::size_t kSinkwardNonSwarmSignal = 45;
inline constexpr std::size_t kSourcewardNonSwarmDistance = 46;
inline constexpr std::size_t kSourcewardNonSwarmSignal = 47;
inline constexpr std::size_t kClosestWallDistance = 48;
inline constexpr std::size_t kWidth = 49;
}  // namespace field

}  // namespace rhgn::classifier
