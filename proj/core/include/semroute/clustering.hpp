#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semroute/embedding.hpp"

namespace semroute {

struct KMeansConfig {
  std::size_t k = 19;
  std::uint64_t seed = 42;
  std::size_t max_iterations = 100;
  // Stop once no centroid moves further than this (Euclidean).
  double tolerance = 1e-4;
};

struct Clustering {
  std::vector<std::size_t> assignments;  // point -> cluster in [0, k)
  std::vector<Vector> centroids;         // raw member means, not renormalised
  std::vector<bool> empty;               // clusters left without members
  std::size_t iterations = 0;
  // Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss_history;

  std::size_t k() const { return centroids.size(); }
  std::vector<std::vector<std::size_t>> members() const;
};

// Seeded Lloyd's algorithm with k-means++ initialisation. Distance ties go
// to the lower cluster index. A cluster emptied during iteration is
// re-seeded with the point farthest from its current centroid.
// Throws InvalidInput when points is empty, k == 0 or k > |points|.
Clustering kmeans(std::span<const Vector> points, const KMeansConfig& cfg);

// Component-wise mean. Throws InvalidInput on an empty list.
Vector centroid(std::span<const Vector> members);

double within_cluster_ss(std::span<const Vector> points, const Clustering& c);

}  // namespace semroute
