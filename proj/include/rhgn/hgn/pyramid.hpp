#pragma once

// Dynamically grown, gated hierarchical graph neuron pyramid.
//
// Layer 0 holds one row per pattern component; each higher layer drops the two
// outermost rows, so layer l has n - 2l rows and the top layer a single row.
// Neurons are created on demand as values are observed (no pre-allocated value
// range). A row's gate carries the active neuron's value to the neighbouring
// rows and hands the two inbound values only to that active neuron, which
// resolves the (left, right) pair to a sub-pattern index. That index becomes
// the row's input value one layer up. The top row's index is the pattern id.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include <absl/container/btree_set.h>
#include <absl/container/flat_hash_map.h>

#include "rhgn/error.hpp"
#include "rhgn/io.hpp"

namespace rhgn::hgn {

using ComponentValue = std::int64_t;
using PatternId = std::uint32_t;

// Message sentinel for the missing neighbour of an edge row.
inline constexpr ComponentValue kNone = std::numeric_limits<ComponentValue>::min();

struct BiasEntry {
  ComponentValue left = kNone;
  ComponentValue right = kNone;
  std::uint32_t index = 0;

  friend bool operator==(const BiasEntry&, const BiasEntry&) = default;
};

struct Neuron {
  ComponentValue value = 0;
  std::vector<BiasEntry> bias_list;
};

// Per-row message buffer used during one propagation pass. Gates are transient
// so a trained pyramid stays immutable under recall.
struct Gate {
  ComponentValue outbound = kNone;
  ComponentValue inbound_left = kNone;
  ComponentValue inbound_right = kNone;
};

class NeuronRow {
 public:
  explicit NeuronRow(bool ordered = false) : ordered_(ordered) {}

  std::size_t size() const noexcept { return neurons_.size(); }
  bool empty() const noexcept { return neurons_.empty(); }
  const std::vector<Neuron>& neurons() const noexcept { return neurons_; }
  std::uint32_t sub_pattern_count() const noexcept { return next_index_; }

  std::optional<std::uint32_t> slot_of(ComponentValue v) const {
    auto it = slots_.find(v);
    if (it == slots_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t activate(ComponentValue v) {
    auto [it, inserted] = slots_.try_emplace(v, static_cast<std::uint32_t>(neurons_.size()));
    if (inserted) {
      neurons_.push_back(Neuron{v, {}});
      if (ordered_) values_.insert(v);
    }
    return it->second;
  }

  // Nearest stored value, ties toward the lower value. Only rows built with
  // ordered = true (the base layer) support this.
  std::optional<ComponentValue> nearest(ComponentValue v) const {
    if (values_.empty()) return std::nullopt;
    auto hi = values_.lower_bound(v);
    if (hi == values_.end()) return *std::prev(hi);
    if (*hi == v || hi == values_.begin()) return *hi;
    auto lo = std::prev(hi);
    // compare v - lo <= hi - v without overflow on extreme values
    const auto below = static_cast<unsigned __int128>(static_cast<__int128>(v) - *lo);
    const auto above = static_cast<unsigned __int128>(static_cast<__int128>(*hi) - v);
    return below <= above ? *lo : *hi;
  }

  std::optional<std::uint32_t> lookup(std::uint32_t slot, ComponentValue left, ComponentValue right) const {
    auto it = bias_.find(Key{slot, left, right});
    if (it == bias_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t resolve(std::uint32_t slot, ComponentValue left, ComponentValue right) {
    auto [it, inserted] = bias_.try_emplace(Key{slot, left, right}, next_index_);
    if (inserted) {
      neurons_[slot].bias_list.push_back(BiasEntry{left, right, next_index_});
      ++next_index_;
    }
    return it->second;
  }

  void serialize(io::Writer& out) const {
    out.put<std::uint32_t>(next_index_);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(neurons_.size()));
    for (const auto& n : neurons_) {
      out.put<std::int64_t>(n.value);
      out.put<std::uint32_t>(static_cast<std::uint32_t>(n.bias_list.size()));
      for (const auto& b : n.bias_list) {
        out.put<std::int64_t>(b.left);
        out.put<std::int64_t>(b.right);
        out.put<std::uint32_t>(b.index);
      }
    }
  }

  static NeuronRow deserialize(io::Reader& in, bool ordered) {
    NeuronRow row(ordered);
    const auto next_index = in.get<std::uint32_t>();
    const auto count = in.get<std::uint32_t>();
    std::vector<bool> seen(next_index, false);
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto value = in.get<std::int64_t>();
      if (row.slot_of(value)) throw Error(Errc::CorruptBundle, "duplicate neuron value");
      const auto slot = row.activate(value);
      const auto entries = in.get<std::uint32_t>();
      for (std::uint32_t e = 0; e < entries; ++e) {
        BiasEntry b;
        b.left = in.get<std::int64_t>();
        b.right = in.get<std::int64_t>();
        b.index = in.get<std::uint32_t>();
        if (b.index >= next_index || seen[b.index]) throw Error(Errc::CorruptBundle, "bad sub-pattern index");
        seen[b.index] = true;
        if (!row.bias_.try_emplace(Key{slot, b.left, b.right}, b.index).second)
          throw Error(Errc::CorruptBundle, "duplicate bias pair");
        row.neurons_[slot].bias_list.push_back(b);
      }
    }
    row.next_index_ = next_index;
    for (bool s : seen)
      if (!s) throw Error(Errc::CorruptBundle, "sparse sub-pattern indices");
    return row;
  }

 private:
  struct Key {
    std::uint32_t slot;
    ComponentValue left;
    ComponentValue right;

    friend bool operator==(const Key&, const Key&) = default;
    template <typename H>
    friend H AbslHashValue(H h, const Key& k) {
      return H::combine(std::move(h), k.slot, k.left, k.right);
    }
  };

  bool ordered_;
  std::vector<Neuron> neurons_;
  absl::flat_hash_map<ComponentValue, std::uint32_t> slots_;
  absl::flat_hash_map<Key, std::uint32_t> bias_;
  absl::btree_set<ComponentValue> values_;
  std::uint32_t next_index_ = 0;
};

class NeuronPyramid {
 public:
  explicit NeuronPyramid(std::size_t n) : n_(n) {
    if (n == 0) throw Error(Errc::InvalidArgument, "pattern length must be positive");
    if (n % 2 == 0) throw Error(Errc::EvenLength, "pattern length " + std::to_string(n) + " is even");
    for (std::size_t rows = n; ; rows -= 2) {
      const bool base = layers_.empty();
      layers_.emplace_back(rows, NeuronRow(base));
      if (rows == 1) break;
    }
  }

  std::size_t pattern_length() const noexcept { return n_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  const NeuronRow& row(std::size_t layer, std::size_t r) const { return layers_.at(layer).at(r); }

  // Number of distinct patterns memorised so far (ids are 0..count-1).
  std::size_t pattern_count() const noexcept { return layers_.back().front().sub_pattern_count(); }

  std::size_t neuron_count() const noexcept {
    std::size_t total = 0;
    for (const auto& layer : layers_)
      for (const auto& r : layer) total += r.size();
    return total;
  }

  PatternId memorise(std::span<const ComponentValue> pattern) {
    check_length(pattern.size());
    return *propagate<true>(pattern);
  }

  // Recall with nearest-value substitution at the base layer; any miss above
  // that is a NO_MATCH (nullopt).
  std::optional<PatternId> recall(std::span<const ComponentValue> pattern) const {
    check_length(pattern.size());
    return const_cast<NeuronPyramid*>(this)->propagate<false>(pattern);
  }

  void serialize(io::Writer& out) const {
    out.put<std::uint32_t>(static_cast<std::uint32_t>(n_));
    for (const auto& layer : layers_)
      for (const auto& r : layer) r.serialize(out);
  }

  static NeuronPyramid deserialize(io::Reader& in) {
    const auto n = in.get<std::uint32_t>();
    if (n == 0 || n % 2 == 0 || n > (1u << 20)) throw Error(Errc::CorruptBundle, "bad pyramid length");
    NeuronPyramid p(n);
    for (std::size_t l = 0; l < p.layers_.size(); ++l)
      for (auto& r : p.layers_[l]) r = NeuronRow::deserialize(in, l == 0);
    return p;
  }

 private:
  void check_length(std::size_t got) const {
    if (got != n_)
      throw Error(Errc::LengthMismatch,
                  "pattern has " + std::to_string(got) + " components, pyramid expects " + std::to_string(n_));
  }

  // Grow == false never mutates; recall() relies on that.
  template <bool Grow>
  std::optional<PatternId> propagate(std::span<const ComponentValue> pattern) {
    std::vector<ComponentValue> input(pattern.begin(), pattern.end());
    std::vector<Gate> gates;
    std::vector<std::uint32_t> slots;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& layer = layers_[l];
      const std::size_t rows = layer.size();
      slots.assign(rows, 0);
      gates.assign(rows, Gate{});

      // activate one neuron per row and collect its value at the gate
      for (std::size_t r = 0; r < rows; ++r) {
        ComponentValue v = input[r];
        if constexpr (Grow) {
          slots[r] = layer[r].activate(v);
        } else {
          auto slot = layer[r].slot_of(v);
          if (!slot && l == 0) {
            auto snapped = layer[r].nearest(v);
            if (!snapped) return std::nullopt;
            v = *snapped;
            slot = layer[r].slot_of(v);
          }
          if (!slot) return std::nullopt;
          slots[r] = *slot;
        }
        gates[r].outbound = v;
      }
      // deliver neighbour values; outermost rows see kNone on the open side
      for (std::size_t r = 0; r < rows; ++r) {
        gates[r].inbound_left = r > 0 ? gates[r - 1].outbound : kNone;
        gates[r].inbound_right = r + 1 < rows ? gates[r + 1].outbound : kNone;
      }
      std::vector<ComponentValue> next;
      next.reserve(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        std::uint32_t index;
        if constexpr (Grow) {
          index = layer[r].resolve(slots[r], gates[r].inbound_left, gates[r].inbound_right);
        } else {
          auto found = layer[r].lookup(slots[r], gates[r].inbound_left, gates[r].inbound_right);
          if (!found) return std::nullopt;
          index = *found;
        }
        next.push_back(index);
      }
      if (rows == 1) return static_cast<PatternId>(next.front());
      // row i one layer up takes its input from row i + 1 here
      input.assign(next.begin() + 1, next.end() - 1);
    }
    return std::nullopt;  // unreachable: the top layer always has one row
  }

  std::size_t n_;
  std::vector<std::vector<NeuronRow>> layers_;
};

// Neuron count of a classic statically allocated HGN with r values per row.
inline std::uint64_t static_hgn_count(std::uint64_t n, std::uint64_t r) {
  if (n % 2 == 0) throw Error(Errc::EvenLength, "static HGN length must be odd");
  if (r == 0) throw Error(Errc::InvalidArgument, "value range must be at least 1");
  const unsigned __int128 total = static_cast<unsigned __int128>(r) * (n + 1) * (n + 1) / 4;
  if (total > std::numeric_limits<std::uint64_t>::max()) throw Error(Errc::DomainError, "static HGN count overflows");
  return static_cast<std::uint64_t>(total);
}

}  // namespace rhgn::hgn
