#include "semroute/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semroute/errors.hpp"
#include "semroute/rng.hpp"

namespace semroute {

namespace {

std::vector<Vector> kmeanspp_init(std::span<const Vector> points, std::size_t k, Rng& rng) {
  std::vector<Vector> centers;
  centers.reserve(k);
  centers.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
      total += d2[i];
    }
    if (total <= 0.0) {
      centers.push_back(points[rng.below(points.size())]);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(points[pick]);
  }
  return centers;
}

std::size_t nearest(const Vector& p, const std::vector<Vector>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double d = squared_distance(p, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

}  // namespace

std::vector<std::vector<std::size_t>> Clustering::members() const {
  std::vector<std::vector<std::size_t>> out(centroids.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
  return out;
}

Vector centroid(std::span<const Vector> members) {
  if (members.empty()) throw InvalidInput("centroid of an empty member list");
  Vector c(members.front().size(), 0.0);
  for (const auto& m : members) {
    if (m.size() != c.size()) throw InvalidInput("centroid members differ in dimension");
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += m[i];
  }
  for (double& x : c) x /= static_cast<double>(members.size());
  return c;
}

double within_cluster_ss(std::span<const Vector> points, const Clustering& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    s += squared_distance(points[i], c.centroids[c.assignments[i]]);
  }
  return s;
}

Clustering kmeans(std::span<const Vector> points, const KMeansConfig& cfg) {
  if (points.empty()) throw InvalidInput("kmeans needs at least one point");
  if (cfg.k == 0) throw InvalidInput("kmeans needs k >= 1");
  if (cfg.k > points.size()) {
    throw InvalidInput("kmeans k=" + std::to_string(cfg.k) + " exceeds " +
                       std::to_string(points.size()) + " points");
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidInput("kmeans points differ in dimension");
  }

  Rng rng(cfg.seed);
  Clustering out;
  out.centroids = kmeanspp_init(points, cfg.k, rng);
  out.assignments.assign(points.size(), 0);

  std::vector<std::size_t> counts(cfg.k);
  const std::size_t max_iter = std::max<std::size_t>(cfg.max_iterations, 1);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      out.assignments[i] = nearest(points[i], out.centroids);
      ++counts[out.assignments[i]];
    }
    out.wcss_history.push_back(within_cluster_ss(points, out));

    for (std::size_t j = 0; j < cfg.k; ++j) {
      if (counts[j] != 0) continue;
      std::size_t far = points.size();
      double far_d = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[out.assignments[i]] < 2) continue;
        const double d = squared_distance(points[i], out.centroids[out.assignments[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == points.size()) continue;  // nothing left to split off
      --counts[out.assignments[far]];
      out.assignments[far] = j;
      counts[j] = 1;
    }

    std::vector<Vector> next(cfg.k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& c = next[out.assignments[i]];
      for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < cfg.k; ++j) {
      if (counts[j] == 0) {
        next[j] = out.centroids[j];
        continue;
      }
      for (double& x : next[j]) x /= static_cast<double>(counts[j]);
      shift = std::max(shift, std::sqrt(squared_distance(next[j], out.centroids[j])));
    }
    out.centroids = std::move(next);
    out.iterations = it + 1;
    if (shift < cfg.tolerance) break;
  }

  out.empty.assign(cfg.k, false);
  for (std::size_t j = 0; j < cfg.k; ++j) out.empty[j] = counts[j] == 0;
  return out;
}

}  // namespace semroute
