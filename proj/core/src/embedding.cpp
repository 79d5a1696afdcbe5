#include "semroute/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semroute/errors.hpp"
#include "semroute/rng.hpp"

namespace semroute {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

HashedTfEmbedder::HashedTfEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InvalidInput("embedding dimension must be positive");
}

std::size_t HashedTfEmbedder::bucket(std::string_view token) const {
  return static_cast<std::size_t>(splitmix64(fnv1a64(token) ^ kSeed) % dimension_);
}

Vector HashedTfEmbedder::embed(std::string_view text) const {
  if (text.empty()) throw InvalidInput("cannot embed empty text");
  Vector v(dimension_, 0.0);
  for (const auto& tok : tokenize(text)) v[bucket(tok)] += 1.0;
  normalize_in_place(v);
  return v;
}

PrecomputedEmbeddings PrecomputedEmbeddings::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embeddings file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

PrecomputedEmbeddings PrecomputedEmbeddings::parse(std::string_view jsonl) {
  PrecomputedEmbeddings out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!row.is_object() || !row.contains("text") || !row["text"].is_string() ||
        !row.contains("vector") || !row["vector"].is_array()) {
      throw ParseError("expected {\"text\": string, \"vector\": [numbers]}", lineno);
    }
    Vector v;
    for (const auto& x : row["vector"]) {
      if (!x.is_number()) throw ParseError("vector contains a non-number", lineno);
      v.push_back(x.get<double>());
    }
    if (v.empty()) throw ParseError("empty vector", lineno);
    if (out.dimension_ == 0) {
      out.dimension_ = v.size();
    } else if (v.size() != out.dimension_) {
      throw ParseError("vector has dimension " + std::to_string(v.size()) + ", expected " +
                           std::to_string(out.dimension_),
                       lineno);
    }
    normalize_in_place(v);
    out.table_[row["text"].get<std::string>()] = std::move(v);
  }
  if (out.table_.empty()) throw ParseError("embeddings file has no rows");
  return out;
}

Vector PrecomputedEmbeddings::embed(std::string_view text) const {
  if (text.empty()) throw InvalidInput("cannot embed empty text");
  auto it = table_.find(std::string(text));
  if (it == table_.end()) throw MissingEmbedding("no precomputed embedding for '" + std::string(text) + "'");
  return it->second;
}

bool PrecomputedEmbeddings::contains(std::string_view text) const {
  return table_.count(std::string(text)) != 0;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void normalize_in_place(Vector& v) {
  const double n = norm(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidInput("cosine of vectors with dimensions " + std::to_string(a.size()) + " and " +
                       std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace semroute
