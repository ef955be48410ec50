#ifndef ENTYPER_CONTEXT_ENCODER_HPP_
#define ENTYPER_CONTEXT_ENCODER_HPP_

// Mention-aware sentence vectors, per-concept centroids, and the cosine
// consistency used to re-rank retrieved concepts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entyper/binary_io.hpp"
#include "entyper/corpus.hpp"
#include "entyper/error.hpp"
#include "entyper/esa_index.hpp"
#include "entyper/text.hpp"

namespace entyper {

inline constexpr std::size_t kDefaultEllElmo = 20;

class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t dim) : values_(dim, 0.0f) {}
  explicit DenseVector(std::vector<float> values) : values_(std::move(values)) {
    for (float v : values_) {
      if (!std::isfinite(v)) throw ValidationError("vector component is not finite");
    }
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const { return values_[i]; }

  bool is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](float v) { return v == 0.0f; });
  }

  bool operator==(const DenseVector&) const = default;

 private:
  std::vector<float> values_;
};

/// Cosine similarity in [-1, 1]; 0 when either side is the zero vector.
inline double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double cosine(const DenseVector& a, const DenseVector& b) {
  return cosine(a.values(), b.values());
}

// ---------------------------------------------------------------------------
// Backends

/// What a backend sees: the token sequence with the mention already joined
/// into a single token at `mention_index`. `key`/`ordinal` identify the
/// sentence for backends that serve precomputed vectors.
struct EncodeInput {
  std::string_view key;
  std::optional<std::size_t> ordinal;
  std::span<const std::string> tokens;
  std::size_t mention_index = 0;
};

class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;
  virtual std::size_t dim() const = 0;
  /// Must be deterministic.
  virtual DenseVector encode(const EncodeInput& input) const = 0;
  /// Whether concurrent encode() calls are allowed.
  virtual bool thread_safe() const { return true; }
  virtual std::string name() const = 0;
};

struct JoinedSentence {
  std::vector<std::string> tokens;
  std::size_t mention_index = 0;
};

/// Replaces the mention tokens with one "_"-joined token.
inline JoinedSentence join_mention(std::span<const std::string> tokens, Span mention) {
  if (!span_valid(mention, tokens.size())) {
    throw ValidationError("mention span (" + std::to_string(mention.start) + "," +
                          std::to_string(mention.end) + ") out of range for " +
                          std::to_string(tokens.size()) + " tokens");
  }
  JoinedSentence out;
  out.tokens.reserve(tokens.size() - mention.size() + 1);
  out.tokens.insert(out.tokens.end(), tokens.begin(), tokens.begin() + mention.start);
  std::string joined;
  for (std::size_t i = mention.start; i < mention.end; ++i) {
    if (i > mention.start) joined += '_';
    joined += tokens[i];
  }
  out.mention_index = out.tokens.size();
  out.tokens.push_back(std::move(joined));
  out.tokens.insert(out.tokens.end(), tokens.begin() + mention.end, tokens.end());
  return out;
}

/// SentRep(s|m).
inline DenseVector sent_rep(const EncoderBackend& backend, std::span<const std::string> tokens,
                            Span mention, std::string_view key = {},
                            std::optional<std::size_t> ordinal = std::nullopt) {
  auto joined = join_mention(tokens, mention);
  auto v = backend.encode({key, ordinal, joined.tokens, joined.mention_index});
  if (v.dim() != backend.dim()) throw std::runtime_error("backend returned wrong dimension");
  return v;
}

inline DenseVector sent_rep(const EncoderBackend& backend, const MentionSentence& s,
                            std::optional<std::size_t> ordinal = std::nullopt) {
  return sent_rep(backend, s.tokens, s.mention, s.sentence_id, ordinal);
}

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Deterministic hashing encoder for tests and demos. Each casefolded token
/// lands in bucket (h mod d) with sign from bit 63 of its FNV-1a hash,
/// weighted 1/(1+distance to the mention); the mention token weighs 2. The
/// sum is L2-normalized.
class FallbackEncoder final : public EncoderBackend {
 public:
  static constexpr std::size_t kDefaultDim = 256;

  explicit FallbackEncoder(std::size_t dim = kDefaultDim) : dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("encoder dimension must be positive");
  }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "fallback"; }

  DenseVector encode(const EncodeInput& input) const override {
    std::vector<double> acc(dim_, 0.0);
    for (std::size_t i = 0; i < input.tokens.size(); ++i) {
      const std::uint64_t h = fnv1a64(casefold(input.tokens[i]));
      const double sign = (h >> 63) ? -1.0 : 1.0;
      const std::size_t dist =
          i > input.mention_index ? i - input.mention_index : input.mention_index - i;
      const double weight = i == input.mention_index ? 2.0 : 1.0 / (1.0 + static_cast<double>(dist));
      acc[h % dim_] += sign * weight;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(dim_, 0.0f);
    if (norm > 0.0) {
      for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] / norm);
    }
    return DenseVector(std::move(out));
  }

 private:
  std::size_t dim_;
};

/// Keyed vectors, as stored in a vector file.
class VectorTable {
 public:
  explicit VectorTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }

  void insert(std::string key, DenseVector v) {
    if (dim_ == 0) dim_ = v.dim();
    if (v.dim() != dim_) {
      throw ValidationError("vector '" + key + "' has dimension " + std::to_string(v.dim()) +
                            ", expected " + std::to_string(dim_));
    }
    if (!vectors_.emplace(std::move(key), std::move(v)).second) {
      throw ValidationError("duplicate vector key");
    }
  }

  const DenseVector* find(const std::string& key) const {
    auto it = vectors_.find(key);
    return it == vectors_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, DenseVector>& entries() const noexcept { return vectors_; }
  bool operator==(const VectorTable&) const = default;

 private:
  std::size_t dim_;
  std::map<std::string, DenseVector> vectors_;
};

/// Serves externally computed vectors (e.g. from a pretrained contextual
/// model). Looks up the sentence key first, then the decimal query ordinal.
class PrecomputedEncoder final : public EncoderBackend {
 public:
  explicit PrecomputedEncoder(VectorTable table) : table_(std::move(table)) {}

  std::size_t dim() const override { return table_.dim(); }
  std::string name() const override { return "vectors"; }

  DenseVector encode(const EncodeInput& input) const override {
    if (const auto* v = table_.find(std::string(input.key))) return *v;
    if (input.ordinal) {
      if (const auto* v = table_.find(std::to_string(*input.ordinal))) return *v;
    }
    throw InputError("no precomputed vector for '" + std::string(input.key) + "'");
  }

 private:
  VectorTable table_;
};

// ---------------------------------------------------------------------------
// Vector files

inline constexpr std::string_view kVectorMagic{"ENTYVEC\0", 8};
inline constexpr std::uint32_t kVectorFormatVersion = 1;

inline void write_vectors(const VectorTable& table, std::ostream& out) {
  binio::write_magic(out, kVectorMagic);
  binio::write_int(out, kVectorFormatVersion);
  binio::write_int(out, static_cast<std::uint32_t>(table.dim()));
  binio::write_int(out, static_cast<std::uint64_t>(table.size()));
  for (const auto& [key, v] : table.entries()) {
    binio::write_str(out, key);
    for (float x : v.values()) binio::write_f32(out, x);
  }
}

inline VectorTable read_vectors_binary(std::istream& in) {
  binio::expect_magic(in, kVectorMagic, "vector");
  auto version = binio::read_int<std::uint32_t>(in);
  if (version != kVectorFormatVersion) {
    throw InputError("unsupported vector file version " + std::to_string(version));
  }
  auto dim = binio::read_int<std::uint32_t>(in);
  auto count = binio::read_int<std::uint64_t>(in);
  VectorTable table(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto key = binio::read_str(in);
    std::vector<float> values(dim);
    for (auto& x : values) x = binio::read_f32(in);
    table.insert(std::move(key), DenseVector(std::move(values)));
  }
  return table;
}

/// key<TAB>space-separated floats.
inline VectorTable read_vectors_tsv(std::istream& in) {
  VectorTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim_view(line);
    if (view.empty() || view.front() == '#') continue;
    auto tab = view.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected key<TAB>values", line_no);
    std::vector<float> values;
    std::istringstream nums{std::string(view.substr(tab + 1))};
    std::string tok;
    while (nums >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stof(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + tok + "'", line_no);
      }
    }
    if (values.empty()) throw ParseError("vector has no components", line_no);
    try {
      table.insert(std::string(view.substr(0, tab)), DenseVector(std::move(values)));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

/// Reads either format, detected by the binary magic.
inline VectorTable load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::string head(kVectorMagic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  const bool binary = in.gcount() == static_cast<std::streamsize>(head.size()) && head == kVectorMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_vectors_binary(in) : read_vectors_tsv(in);
}

inline void save_vectors(const VectorTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_vectors(table, out);
}

// ---------------------------------------------------------------------------
// Concept centroids

/// ConceptRep(c): mean SentRep over the corpus sentences of c.
class ConceptRepStore {
 public:
  struct Entry {
    DenseVector rep;
    std::uint64_t support = 0;
    bool operator==(const Entry&) const = default;
  };

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& c) const { return entries_.count(c) > 0; }

  const DenseVector* find(const std::string& c) const {
    auto it = entries_.find(c);
    return it == entries_.end() ? nullptr : &it->second.rep;
  }

  const DenseVector& rep(const std::string& c) const {
    if (const auto* v = find(c)) return *v;
    throw UnknownConceptError(c);
  }

  std::uint64_t support(const std::string& c) const {
    auto it = entries_.find(c);
    return it == entries_.end() ? 0 : it->second.support;
  }

  void insert(std::string c, DenseVector rep, std::uint64_t support) {
    if (support == 0) throw ValidationError("concept '" + c + "' has zero support");
    if (dim_ == 0) dim_ = rep.dim();
    if (rep.dim() != dim_) throw ValidationError("concept '" + c + "' has wrong dimension");
    entries_[std::move(c)] = {std::move(rep), support};
  }

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  bool operator==(const ConceptRepStore&) const = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Entry> entries_;
};

/// Component-wise arithmetic mean, accumulated in double.
inline DenseVector mean_vector(std::span<const DenseVector> vectors, std::size_t dim) {
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
  }
  std::vector<float> out(dim);
  const double n = static_cast<double>(vectors.size());
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / n);
  return DenseVector(std::move(out));
}

inline ConceptRepStore build_concept_reps(const EncoderBackend& backend, const Corpus& corpus) {
  ConceptRepStore store;
  for (const auto& [c, record_ids] : corpus.by_concept()) {
    std::vector<DenseVector> reps;
    reps.reserve(record_ids.size());
    for (auto rid : record_ids) reps.push_back(sent_rep(backend, corpus.records()[rid]));
    store.insert(c, mean_vector(reps, backend.dim()), record_ids.size());
  }
  return store;
}

inline constexpr std::string_view kRepsMagic{"ENTYREP\0", 8};

inline void write_concept_reps(const ConceptRepStore& store, std::ostream& out) {
  binio::write_magic(out, kRepsMagic);
  binio::write_int(out, kVectorFormatVersion);
  binio::write_int(out, static_cast<std::uint32_t>(store.dim()));
  binio::write_int(out, static_cast<std::uint64_t>(store.size()));
  for (const auto& [c, e] : store.entries()) {
    binio::write_str(out, c);
    binio::write_int(out, e.support);
    for (float x : e.rep.values()) binio::write_f32(out, x);
  }
}

inline ConceptRepStore read_concept_reps(std::istream& in) {
  binio::expect_magic(in, kRepsMagic, "concept representation");
  auto version = binio::read_int<std::uint32_t>(in);
  if (version != kVectorFormatVersion) {
    throw InputError("unsupported representation file version " + std::to_string(version));
  }
  auto dim = binio::read_int<std::uint32_t>(in);
  auto count = binio::read_int<std::uint64_t>(in);
  ConceptRepStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto c = binio::read_str(in);
    auto support = binio::read_int<std::uint64_t>(in);
    std::vector<float> values(dim);
    for (auto& x : values) x = binio::read_f32(in);
    store.insert(std::move(c), DenseVector(std::move(values)), support);
  }
  return store;
}

inline void save_concept_reps(const ConceptRepStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_concept_reps(store, out);
}

inline ConceptRepStore load_concept_reps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_concept_reps(in);
}

// ---------------------------------------------------------------------------
// Consistency and re-ranking

/// cosine(SentRep(s|m), ConceptRep(c)). Throws UnknownConceptError when c has
/// no representation.
inline double consistency(const std::string& c, const DenseVector& sentence_rep,
                          const ConceptRepStore& store) {
  return cosine(sentence_rep, store.rep(c));
}

inline double consistency(const std::string& c, std::span<const std::string> tokens, Span mention,
                          const EncoderBackend& backend, const ConceptRepStore& store) {
  return consistency(c, sent_rep(backend, tokens, mention), store);
}

struct ConceptConsistency {
  std::string concept_id;
  double consistency = 0.0;
  bool operator==(const ConceptConsistency&) const = default;
};

struct RerankResult {
  std::vector<ConceptConsistency> concepts;
  std::vector<std::string> notes;
};

/// C_ELMo: the `ell_elmo` candidates most consistent with the sentence,
/// ties kept in retrieval order. Candidates without a representation are
/// skipped and noted.
inline RerankResult rerank(std::span<const ScoredConcept> c_esa, const DenseVector& sentence_rep,
                           const ConceptRepStore& store, std::size_t ell_elmo = kDefaultEllElmo) {
  if (ell_elmo == 0) throw std::invalid_argument("ell_elmo must be >= 1");
  RerankResult result;
  std::vector<ConceptConsistency> scored;
  scored.reserve(c_esa.size());
  for (const auto& cand : c_esa) {
    const auto* rep = store.find(cand.concept_id);
    if (rep == nullptr) {
      result.notes.push_back("skipped " + cand.concept_id + ": no representation");
      continue;
    }
    scored.push_back({cand.concept_id, cosine(sentence_rep, *rep)});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.consistency > b.consistency;
  });
  if (scored.size() > ell_elmo) scored.resize(ell_elmo);
  result.concepts = std::move(scored);
  return result;
}

}  // namespace entyper

#endif  // ENTYPER_CONTEXT_ENCODER_HPP_
