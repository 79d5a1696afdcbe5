#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semroute {

using Vector = std::vector<double>;

// theta(.): text -> fixed-dimension vector. Implementations must be pure,
// the same text always yields a bit-identical vector.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  // Throws InvalidInput on empty text.
  virtual Vector embed(std::string_view text) const = 0;
};

// Lowercases, splits on non-alphanumerics.
std::vector<std::string> tokenize(std::string_view text);

// Feature-hashed term frequencies, L2-normalised. Text with no tokens maps
// to the zero vector.
class HashedTfEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDimension = 384;
  static constexpr std::uint64_t kSeed = 0x5eed'0f'7f'e3b1ULL;

  explicit HashedTfEmbedder(std::size_t dimension = kDefaultDimension);

  std::string name() const override { return "hashed_tf"; }
  std::size_t dimension() const override { return dimension_; }
  Vector embed(std::string_view text) const override;

  std::size_t bucket(std::string_view token) const;

 private:
  std::size_t dimension_;
};

// Lookup table of externally computed vectors keyed by exact text.
class PrecomputedEmbeddings final : public EmbeddingProvider {
 public:
  // JSONL, one {"text": ..., "vector": [...]} per line. Throws ParseError
  // naming the offending line.
  static PrecomputedEmbeddings load(const std::filesystem::path& path);
  static PrecomputedEmbeddings parse(std::string_view jsonl);

  std::string name() const override { return "precomputed"; }
  std::size_t dimension() const override { return dimension_; }
  // Throws MissingEmbedding for unknown text.
  Vector embed(std::string_view text) const override;
  bool contains(std::string_view text) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, Vector> table_;
};

double norm(std::span<const double> v);
void normalize_in_place(Vector& v);

// Cosine similarity. Zero vectors give 0. Throws InvalidInput on a
// dimension mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace semroute
