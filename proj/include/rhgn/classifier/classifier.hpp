#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhgn/classifier/probability.hpp"
#include "rhgn/classifier/schema.hpp"
#include "rhgn/error.hpp"
#include "rhgn/hgn/pyramid.hpp"
#include "rhgn/io.hpp"
#include "rhgn/types.hpp"

namespace rhgn::classifier {

inline const std::vector<std::string>& default_labels() {
  static const std::vector<std::string> labels{"1.1", "1.2", "1.3", "2.1", "2.2", "2.3"};
  return labels;
}

inline std::vector<BehaviourId> default_behaviour_map() {
  using enum BehaviourId;
  return {MB1, MB2, MB1, MB1, MB1, MB3};
}

// Occurrence counts per (pattern id, label) and their normalised tuples.
class CountTable {
 public:
  explicit CountTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : counts_.size() / dim_; }
  bool empty() const noexcept { return counts_.empty(); }

  void increment(std::uint32_t id, std::size_t label) {
    if (label >= dim_) throw Error(Errc::LabelMismatch, "label index out of range");
    if (id >= rows()) counts_.resize((static_cast<std::size_t>(id) + 1) * dim_, 0);
    ++counts_[static_cast<std::size_t>(id) * dim_ + label];
  }

  std::span<const std::uint64_t> counts(std::uint32_t id) const {
    return {counts_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }

  void normalise() {
    tuples_.resize(counts_.size());
    for (std::size_t r = 0; r < rows(); ++r) {
      const auto t = classifier::normalise(counts(static_cast<std::uint32_t>(r)));
      std::copy(t.begin(), t.end(), tuples_.begin() + static_cast<std::ptrdiff_t>(r * dim_));
    }
  }

  std::span<const double> tuple(std::uint32_t id) const {
    if (id >= rows()) throw Error(Errc::CorruptBundle, "pattern id without a table row");
    return {tuples_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }

  void serialize(io::Writer& out) const {
    out.put<std::uint32_t>(static_cast<std::uint32_t>(rows()));
    for (auto c : counts_) out.put<std::uint64_t>(c);
  }

  static CountTable deserialize(io::Reader& in, std::size_t dim) {
    CountTable t(dim);
    const auto rows = in.get<std::uint32_t>();
    if (static_cast<std::size_t>(rows) * dim * 8 > in.remaining()) throw Error(Errc::CorruptBundle, "table overruns bundle");
    t.counts_.resize(static_cast<std::size_t>(rows) * dim);
    for (auto& c : t.counts_) c = in.get<std::uint64_t>();
    t.normalise();
    return t;
  }

 private:
  std::size_t dim_;
  std::vector<std::uint64_t> counts_;
  std::vector<double> tuples_;
};

// Intermediate results of one classification, for inspection and tests.
struct ClassificationTrace {
  std::vector<std::optional<hgn::PatternId>> lower_ids;
  std::vector<ProbabilityTuple> lower_tuples;
  std::vector<hgn::ComponentValue> upper_pattern;
  std::optional<hgn::PatternId> upper_id;
  ProbabilityTuple result;
};

class Classifier {
 public:
  static constexpr std::array<char, 8> kMagic{'R', 'H', 'G', 'N', 'B', 'N', 'D', 'L'};
  static constexpr std::uint32_t kVersion = 1;

  Classifier(PatternSchema schema, std::vector<std::string> labels, std::vector<BehaviourId> behaviour_map)
      : schema_(std::move(schema)), labels_(std::move(labels)), behaviour_map_(std::move(behaviour_map)), upper_(3) {
    if (labels_.empty()) throw Error(Errc::InvalidArgument, "classifier needs at least one label");
    if (behaviour_map_.size() != labels_.size())
      throw Error(Errc::LabelMismatch, "behaviour map must cover every label");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      for (std::size_t j = i + 1; j < labels_.size(); ++j)
        if (labels_[i] == labels_[j]) throw Error(Errc::LabelMismatch, "duplicate label " + labels_[i]);
    for (const auto& s : schema_.segments()) {
      lower_.emplace_back(s.pattern_length());
      lower_tables_.emplace_back(labels_.size());
    }
    upper_ = hgn::NeuronPyramid(lower_.size() | 1u);
    upper_table_ = CountTable(labels_.size());
  }

  const PatternSchema& schema() const noexcept { return schema_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<BehaviourId>& behaviour_map() const noexcept { return behaviour_map_; }
  std::size_t dim() const noexcept { return labels_.size(); }
  bool trained() const noexcept { return !upper_table_.empty(); }
  const std::vector<hgn::NeuronPyramid>& lower() const noexcept { return lower_; }
  const hgn::NeuronPyramid& upper() const noexcept { return upper_; }
  const std::vector<CountTable>& lower_tables() const noexcept { return lower_tables_; }
  const CountTable& upper_table() const noexcept { return upper_table_; }

  std::optional<std::size_t> label_index(std::string_view label) const noexcept {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == label) return i;
    return std::nullopt;
  }

  BehaviourId behaviour_for(std::size_t label) const { return behaviour_map_.at(label); }

  ProbabilityTuple classify(std::span<const double> raw) const { return classify_traced(raw).result; }

  ClassificationTrace classify_traced(std::span<const double> raw) const {
    if (!trained()) throw Error(Errc::Untrained, "classifier has no tables");
    const auto patterns = schema_.quantise(raw);
    ClassificationTrace tr;
    tr.upper_pattern.assign(upper_.pattern_length(), 0);
    for (std::size_t s = 0; s < lower_.size(); ++s) {
      auto id = lower_[s].recall(patterns[s]);
      if (id && *id >= lower_tables_[s].rows()) id.reset();
      tr.lower_ids.push_back(id);
      if (id) {
        const auto t = lower_tables_[s].tuple(*id);
        tr.lower_tuples.emplace_back(t.begin(), t.end());
      } else {
        tr.lower_tuples.push_back(uniform_tuple(dim()));
      }
      tr.upper_pattern[s] = static_cast<hgn::ComponentValue>(argmax(tr.lower_tuples.back()));
    }
    // With every lower pyramid unmatched the argmax triple carries no
    // information, so the upper pyramid is not consulted.
    const bool any_lower = std::any_of(tr.lower_ids.begin(), tr.lower_ids.end(), [](const auto& id) { return id.has_value(); });
    if (any_lower) tr.upper_id = upper_.recall(tr.upper_pattern);
    if (tr.upper_id && *tr.upper_id < upper_table_.rows()) {
      const auto t = upper_table_.tuple(*tr.upper_id);
      tr.result.assign(t.begin(), t.end());
    } else {
      tr.upper_id.reset();
      tr.result = mean_of(tr.lower_tuples);
    }
    return tr;
  }

  std::vector<std::uint8_t> to_bytes() const {
    io::Writer w;
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic.data()), kMagic.size()});
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint64_t>(schema_.digest());
    schema_.serialize(w);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(labels_.size()));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      w.put_string(labels_[i]);
      w.put<std::uint8_t>(static_cast<std::uint8_t>(behaviour_map_[i]));
    }
    for (const auto& p : lower_) p.serialize(w);
    upper_.serialize(w);
    for (const auto& t : lower_tables_) t.serialize(w);
    upper_table_.serialize(w);
    const auto crc = io::crc32(w.bytes());
    w.put<std::uint32_t>(crc);
    return std::move(w.bytes());
  }

  static Classifier from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() + 4 + 4) throw Error(Errc::CorruptBundle, "bundle too short");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
      throw Error(Errc::CorruptBundle, "bad magic");
    const auto body = bytes.first(bytes.size() - 4);
    io::Reader trailer(bytes.last(4));
    if (io::crc32(body) != trailer.get<std::uint32_t>()) throw Error(Errc::CorruptBundle, "checksum mismatch");
    io::Reader in(body);
    in.get_bytes(kMagic.size());
    const auto version = in.get<std::uint32_t>();
    if (version != kVersion)
      throw Error(Errc::VersionMismatch, "bundle version " + std::to_string(version) + ", expected " +
                                             std::to_string(kVersion));
    const auto digest = in.get<std::uint64_t>();
    auto schema = PatternSchema::deserialize(in);
    if (schema.digest() != digest) throw Error(Errc::CorruptBundle, "schema digest mismatch");
    const auto nlabels = in.get<std::uint32_t>();
    if (nlabels == 0 || nlabels > 4096) throw Error(Errc::CorruptBundle, "implausible label count");
    std::vector<std::string> labels;
    std::vector<BehaviourId> map;
    for (std::uint32_t i = 0; i < nlabels; ++i) {
      labels.push_back(in.get_string());
      const auto b = behaviour_from_int(in.get<std::uint8_t>());
      if (!b) throw Error(Errc::CorruptBundle, "unknown behaviour id");
      map.push_back(*b);
    }
    Classifier c(std::move(schema), std::move(labels), std::move(map));
    for (auto& p : c.lower_) p = hgn::NeuronPyramid::deserialize(in);
    c.upper_ = hgn::NeuronPyramid::deserialize(in);
    for (std::size_t s = 0; s < c.lower_.size(); ++s) {
      if (c.lower_[s].pattern_length() != c.schema_.segments()[s].pattern_length())
        throw Error(Errc::CorruptBundle, "pyramid length disagrees with schema");
      c.lower_tables_[s] = CountTable::deserialize(in, c.dim());
    }
    c.upper_table_ = CountTable::deserialize(in, c.dim());
    if (in.remaining() != 0) throw Error(Errc::CorruptBundle, "trailing bytes");
    return c;
  }

  void save(const std::string& path) const {
    if (!trained()) throw Error(Errc::Untrained, "refusing to save an untrained classifier");
    io::write_file(path, to_bytes());
  }
  static Classifier load(const std::string& path) { return from_bytes(io::read_file(path)); }

 private:
  friend class Trainer;

  PatternSchema schema_;
  std::vector<std::string> labels_;
  std::vector<BehaviourId> behaviour_map_;
  std::vector<hgn::NeuronPyramid> lower_;
  hgn::NeuronPyramid upper_;
  std::vector<CountTable> lower_tables_;
  CountTable upper_table_;
};

// Streaming two-pass trainer. Pass 1 runs as observations arrive; only the
// lower pattern ids and label are kept for the pass 2 replay.
class Trainer {
 public:
  explicit Trainer(PatternSchema schema = PatternSchema::standard(),
                   std::vector<std::string> labels = default_labels(),
                   std::vector<BehaviourId> behaviour_map = default_behaviour_map())
      : c_(std::move(schema), std::move(labels), std::move(behaviour_map)) {}

  std::size_t size() const noexcept { return labels_.size(); }

  void add(std::span<const double> raw, std::string_view label) {
    const auto idx = c_.label_index(label);
    if (!idx) throw Error(Errc::LabelMismatch, "unknown label " + std::string(label));
    add(raw, *idx);
  }

  void add(std::span<const double> raw, std::size_t label) {
    if (label >= c_.dim()) throw Error(Errc::LabelMismatch, "label index out of range");
    const auto patterns = c_.schema_.quantise(raw);
    for (std::size_t s = 0; s < c_.lower_.size(); ++s) {
      const auto id = c_.lower_[s].memorise(patterns[s]);
      c_.lower_tables_[s].increment(id, label);
      ids_.push_back(id);
    }
    labels_.push_back(static_cast<std::uint32_t>(label));
  }

  Classifier finish() && {
    if (labels_.empty()) throw Error(Errc::EmptyCorpus, "no training observations");
    for (auto& t : c_.lower_tables_) t.normalise();
    const std::size_t segs = c_.lower_.size();
    std::vector<hgn::ComponentValue> upper(c_.upper_.pattern_length(), 0);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      for (std::size_t s = 0; s < segs; ++s)
        upper[s] = static_cast<hgn::ComponentValue>(argmax(c_.lower_tables_[s].tuple(ids_[i * segs + s])));
      c_.upper_table_.increment(c_.upper_.memorise(upper), labels_[i]);
    }
    c_.upper_table_.normalise();
    ids_.clear();
    labels_.clear();
    return std::move(c_);
  }

 private:
  Classifier c_;
  std::vector<hgn::PatternId> ids_;  // segment-major per observation
  std::vector<std::uint32_t> labels_;
};

}  // namespace rhgn::classifier
