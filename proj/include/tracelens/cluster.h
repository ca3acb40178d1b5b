// K-means++ clustering of jobs.
//
// Seeding picks the first center uniformly among the data points and every
// further center with probability proportional to the squared distance to
// the nearest center chosen so far. Lloyd iterations then refine the
// centers. Silhouette scores validate the result and drive the choice of k.
//
// Everything here is a pure function of (data, seed): the same inputs give
// bitwise-identical models.

#ifndef TRACELENS_CLUSTER_H_
#define TRACELENS_CLUSTER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tracelens/random.h"
#include "tracelens/trace_model.h"

namespace tracelens::cluster {

struct Point {
  std::vector<double> coords;
  std::optional<JobId> source_id;

  std::size_t dim() const { return coords.size(); }

  friend bool operator==(const Point&, const Point&) = default;
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<Point> centers;
  std::vector<std::uint32_t> assignment;
  double wcss = 0.0;
  std::size_t iterations = 0;
  // Absent when fewer than two clusters are populated.
  std::optional<double> silhouette_mean;
  // True when the silhouette was computed on a subsample.
  bool silhouette_sampled = false;
  // Within-cluster sum of squares after each assignment step, then the final
  // value. Non-increasing.
  std::vector<double> wcss_history;

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  // Silhouette is exact up to this many points, sampled above it.
  std::size_t silhouette_cap = 50000;
};

double SquaredDistance(std::span<const double> a, std::span<const double> b);

std::size_t CountDistinct(std::span<const Point> points);

// K-means++ seeding. Returns k distinct data points. Throws ArgumentError for
// k == 0, k larger than the number of distinct points, or ragged input.
std::vector<Point> KMeansPlusPlusSeed(std::span<const Point> points, std::size_t k,
                                      Rng& rng);

// Lloyd refinement from the given centers. Stops when no center moves more
// than `tol` (Euclidean) or after `max_iter` iterations. A cluster that
// empties is re-seeded at the point farthest from its assigned center.
ClusterModel Lloyd(std::span<const Point> points, std::span<const Point> initial_centers,
                   std::size_t max_iter, double tol);

struct SilhouetteResult {
  std::vector<double> scores;
  double mean = 0.0;
};

// s(i) = (b - a) / max(a, b) with Euclidean distance; a is the mean distance
// to the rest of i's cluster, b the smallest mean distance to another
// cluster. Points in singleton clusters score 0. Needs >= 2 clusters.
SilhouetteResult Silhouette(std::span<const Point> points,
                            std::span<const std::uint32_t> assignment);

// Silhouette mean, exact up to `cap` points and computed on a seeded uniform
// subsample of `cap` points above it. Returns {mean, sampled}.
std::pair<double, bool> SilhouetteMeanCapped(std::span<const Point> points,
                                             std::span<const std::uint32_t> assignment,
                                             std::size_t cap, std::uint64_t seed);

// Best-of-restarts K-means++ + Lloyd for one k, keeping the lowest wcss.
// Points are sorted lexicographically first so input order does not matter;
// the returned assignment follows the caller's order. The silhouette is
// filled in when k >= 2.
ClusterModel FitKMeans(std::span<const Point> points, std::size_t k, Rng& rng,
                       const KMeansOptions& options = {});

struct SweepEntry {
  std::size_t k = 0;
  ClusterModel model;
};

// FitKMeans for every k in [k_min, k_max] (2 <= k_min <= k_max <= distinct
// points). Each k draws from its own sub-stream of one master draw, so an
// entry does not depend on the rest of the range.
std::vector<SweepEntry> SweepK(std::span<const Point> points, std::size_t k_min,
                               std::size_t k_max, Rng& rng,
                               const KMeansOptions& options = {});

// k of the entry with the highest silhouette mean (smallest k on ties).
std::size_t BestK(std::span<const SweepEntry> sweep);

// Per-feature min-max scaling to [0, 1]. A constant feature maps to 0.
struct MinMaxScaler {
  std::vector<double> lo;
  std::vector<double> hi;

  static MinMaxScaler Fit(std::span<const Point> points);
  std::vector<Point> Transform(std::span<const Point> points) const;
  Point Inverse(const Point& p) const;
};

struct JobClassification {
  // Centers de-normalized into (mean_cpu, mean_memory) and ordered MINOR,
  // MEDIOCRE, MAJOR, so assignment[i] is the class index of record i. wcss
  // and silhouette are measured in the normalized space.
  ClusterModel model;
  std::vector<JobClass> labels;
  std::array<std::size_t, kJobClassCount> counts{};
};

// Tri-modal job classification on min-max-normalized (mean_cpu,
// mean_memory). Classes are named by ascending L2 norm of the de-normalized
// center, ties broken by cpu then memory.
JobClassification ClassifyJobs(std::span<const JobRecord> records, Rng& rng,
                               const KMeansOptions& options = {});

struct ArrivalCluster {
  double center_seconds = 0.0;
  double start_seconds = 0.0;
  double end_seconds = 0.0;
  std::size_t count = 0;

  double extent_seconds() const { return end_seconds - start_seconds; }
};

struct ArrivalClustering {
  // Centers in seconds; wcss and silhouette in the normalized space.
  ClusterModel model;
  std::vector<ArrivalCluster> clusters;
};

// 1-D clustering of arrival times (seconds). k = 1 is allowed and yields no
// silhouette.
ArrivalClustering ClusterArrivals(std::span<const JobRecord> records, std::size_t k,
                                  Rng& rng, const KMeansOptions& options = {});

}  // namespace tracelens::cluster

#endif  // TRACELENS_CLUSTER_H_
