#include "tracelens/cluster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tracelens/errors.h"
#include "tracelens/parallel.h"

namespace tracelens::cluster {

namespace {

std::size_t ValidatePoints(std::span<const Point> points) {
  if (points.empty()) throw ArgumentError("no points");
  const std::size_t d = points.front().dim();
  if (d == 0) throw ArgumentError("points must have at least one coordinate");
  for (const auto& p : points) {
    if (p.dim() != d) throw ArgumentError("points differ in dimension");
    for (double x : p.coords) {
      if (!std::isfinite(x)) throw ArgumentError("non-finite coordinate");
    }
  }
  return d;
}

bool LexLess(const Point& a, const Point& b) {
  return std::lexicographical_compare(a.coords.begin(), a.coords.end(),
                                      b.coords.begin(), b.coords.end());
}

// Nearest center per point (ties to the lowest index); returns wcss. The
// per-point work is independent and the sum runs in index order.
double Assign(std::span<const Point> points, const std::vector<double>& centers,
              std::size_t k, std::size_t d, std::vector<std::uint32_t>* assignment,
              std::vector<double>* dist2) {
  const std::size_t n = points.size();
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  ParallelFor(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const double* x = points[i].coords.data();
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_j = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const double* cj = centers.data() + j * d;
        double s = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
          const double diff = x[t] - cj[t];
          s += diff * diff;
        }
        if (s < best) {
          best = s;
          best_j = static_cast<std::uint32_t>(j);
        }
      }
      (*assignment)[i] = best_j;
      (*dist2)[i] = best;
    }
  });
  double wcss = 0.0;
  for (double v : *dist2) wcss += v;
  return wcss;
}

}  // namespace

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double diff = a[t] - b[t];
    s += diff * diff;
  }
  return s;
}

std::size_t CountDistinct(std::span<const Point> points) {
  std::vector<const Point*> sorted;
  sorted.reserve(points.size());
  for (const auto& p : points) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const Point* a, const Point* b) { return LexLess(*a, *b); });
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || sorted[i - 1]->coords != sorted[i]->coords) ++distinct;
  }
  return distinct;
}

std::vector<Point> KMeansPlusPlusSeed(std::span<const Point> points, std::size_t k,
                                      Rng& rng) {
  if (k == 0) throw ArgumentError("k must be positive");
  ValidatePoints(points);
  const std::size_t distinct = CountDistinct(points);
  if (k > distinct) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(distinct) + " distinct points");
  }
  const std::size_t n = points.size();
  std::vector<Point> centers;
  centers.reserve(k);
  std::size_t chosen = rng.UniformIndex(n);
  centers.push_back({points[chosen].coords, points[chosen].source_id});

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = SquaredDistance(points[i].coords, centers.back().coords);
  }
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    const double target = rng.Uniform() * total;
    // First index whose cumulative weight passes the target. Points already
    // chosen have weight 0 and can never be drawn again.
    std::size_t pick = n;
    std::size_t last_positive = n;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      last_positive = i;
      cumulative += d2[i];
      if (cumulative > target) {
        pick = i;
        break;
      }
    }
    if (pick == n) pick = last_positive;
    if (pick == n) throw ContractError("no positive seeding weight left");
    centers.push_back({points[pick].coords, points[pick].source_id});
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SquaredDistance(points[i].coords, centers.back().coords));
    }
  }
  return centers;
}

ClusterModel Lloyd(std::span<const Point> points, std::span<const Point> initial_centers,
                   std::size_t max_iter, double tol) {
  const std::size_t d = ValidatePoints(points);
  if (initial_centers.empty()) throw ArgumentError("no initial centers");
  if (max_iter == 0) throw ArgumentError("max_iter must be positive");
  if (!(tol >= 0.0)) throw ArgumentError("tol must be non-negative");
  const std::size_t k = initial_centers.size();
  const std::size_t n = points.size();
  std::vector<double> centers(k * d);
  for (std::size_t j = 0; j < k; ++j) {
    if (initial_centers[j].dim() != d) {
      throw ArgumentError("center dimension differs from point dimension");
    }
    for (std::size_t t = 0; t < d; ++t) {
      const double c = initial_centers[j].coords[t];
      if (!std::isfinite(c)) throw ArgumentError("non-finite center coordinate");
      centers[j * d + t] = c;
    }
  }

  ClusterModel model;
  model.k = k;
  std::vector<std::uint32_t>& assignment = model.assignment;
  assignment.assign(n, 0);
  std::vector<double> dist2(n);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);
  std::vector<double> next(k * d);
  std::vector<char> used_for_repair(n);

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    model.iterations = iter;
    model.wcss_history.push_back(Assign(points, centers, k, d, &assignment, &dist2));

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = assignment[i];
      ++counts[j];
      for (std::size_t t = 0; t < d; ++t) sums[j * d + t] += points[i].coords[t];
    }
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t t = 0; t < d; ++t) {
        next[j * d + t] = counts[j] > 0
                              ? sums[j * d + t] / static_cast<double>(counts[j])
                              : centers[j * d + t];
      }
    }
    // Empty clusters take the point farthest from its updated center.
    std::fill(used_for_repair.begin(), used_for_repair.end(), 0);
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      double far = 0.0;
      std::size_t far_i = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (used_for_repair[i]) continue;
        const std::size_t a = assignment[i];
        const double dd = SquaredDistance(
            points[i].coords, std::span<const double>(next.data() + a * d, d));
        if (dd > far) {
          far = dd;
          far_i = i;
        }
      }
      if (far_i == n) continue;  // every point already sits on a center
      used_for_repair[far_i] = 1;
      --counts[assignment[far_i]];
      assignment[far_i] = static_cast<std::uint32_t>(j);
      counts[j] = 1;
      for (std::size_t t = 0; t < d; ++t) next[j * d + t] = points[far_i].coords[t];
    }

    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double moved = std::sqrt(SquaredDistance(
          std::span<const double>(centers.data() + j * d, d),
          std::span<const double>(next.data() + j * d, d)));
      shift = std::max(shift, moved);
    }
    centers.swap(next);
    if (shift <= tol) break;
  }

  model.wcss = Assign(points, centers, k, d, &assignment, &dist2);
  model.wcss_history.push_back(model.wcss);
  model.centers.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    model.centers[j].coords.assign(centers.begin() + j * d, centers.begin() + (j + 1) * d);
  }
  return model;
}

SilhouetteResult Silhouette(std::span<const Point> points,
                            std::span<const std::uint32_t> assignment) {
  const std::size_t d = ValidatePoints(points);
  const std::size_t n = points.size();
  if (assignment.size() != n) {
    throw ArgumentError("assignment length differs from point count");
  }
  const std::size_t labels =
      static_cast<std::size_t>(*std::max_element(assignment.begin(), assignment.end())) + 1;
  std::vector<std::size_t> sizes(labels);
  for (auto a : assignment) ++sizes[a];
  std::vector<std::size_t> populated;
  for (std::size_t c = 0; c < labels; ++c) {
    if (sizes[c] > 0) populated.push_back(c);
  }
  if (populated.size() < 2) {
    throw ArgumentError("silhouette needs at least two populated clusters");
  }

  // Group points by cluster, coordinates stored per dimension.
  std::vector<std::size_t> start(labels + 1, 0);
  for (std::size_t c = 0; c < labels; ++c) start[c + 1] = start[c] + sizes[c];
  std::vector<std::size_t> original(n);
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) original[fill[assignment[i]]++] = i;
  }
  std::vector<std::vector<double>> soa(d, std::vector<double>(n));
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t t = 0; t < d; ++t) soa[t][pos] = points[original[pos]].coords[t];
  }

  // sums[pos * labels + c] = sum of distances from pos to members of c.
  std::vector<double> sums(n * labels, 0.0);
  std::vector<double> tmp(n);
  std::vector<double> colsum(n);
  for (std::size_t ai = 0; ai < populated.size(); ++ai) {
    const std::size_t a = populated[ai];
    for (std::size_t bi = ai; bi < populated.size(); ++bi) {
      const std::size_t b = populated[bi];
      const std::size_t b_begin = start[b];
      const std::size_t b_end = start[b + 1];
      std::fill(colsum.begin(), colsum.begin() + (b_end - b_begin), 0.0);
      for (std::size_t i = start[a]; i < start[a + 1]; ++i) {
        const std::size_t j_begin = (a == b) ? i + 1 : b_begin;
        if (j_begin >= b_end) continue;
        const std::size_t len = b_end - j_begin;
        double* t2 = tmp.data();
        std::fill(t2, t2 + len, 0.0);
        for (std::size_t t = 0; t < d; ++t) {
          const double* x = soa[t].data() + j_begin;
          const double xi = soa[t][i];
#pragma omp simd
          for (std::size_t jj = 0; jj < len; ++jj) {
            const double diff = x[jj] - xi;
            t2[jj] += diff * diff;
          }
        }
        double row = 0.0;
        double* cs = colsum.data() + (j_begin - b_begin);
#pragma omp simd reduction(+ : row)
        for (std::size_t jj = 0; jj < len; ++jj) {
          const double dist = std::sqrt(t2[jj]);
          row += dist;
          cs[jj] += dist;
        }
        sums[i * labels + b] += row;
      }
      for (std::size_t j = b_begin; j < b_end; ++j) {
        sums[j * labels + a] += colsum[j - b_begin];
      }
    }
  }

  SilhouetteResult result;
  result.scores.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t own = assignment[original[pos]];
    double score = 0.0;
    if (sizes[own] > 1) {
      const double a = sums[pos * labels + own] / static_cast<double>(sizes[own] - 1);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c : populated) {
        if (c == own) continue;
        b = std::min(b, sums[pos * labels + c] / static_cast<double>(sizes[c]));
      }
      const double denom = std::max(a, b);
      score = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    result.scores[original[pos]] = score;
  }
  for (double s : result.scores) total += s;
  result.mean = total / static_cast<double>(n);
  return result;
}

std::pair<double, bool> SilhouetteMeanCapped(std::span<const Point> points,
                                             std::span<const std::uint32_t> assignment,
                                             std::size_t cap, std::uint64_t seed) {
  if (cap < 2) throw ArgumentError("silhouette cap must be at least 2");
  if (points.size() <= cap) return {Silhouette(points, assignment).mean, false};
  if (assignment.size() != points.size()) {
    throw ArgumentError("assignment length differs from point count");
  }
  // Partial Fisher-Yates over indices, then restore index order.
  Rng rng(seed);
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < cap; ++i) {
    std::swap(idx[i], idx[i + rng.UniformIndex(idx.size() - i)]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  std::vector<Point> sub;
  std::vector<std::uint32_t> sub_assignment;
  sub.reserve(cap);
  sub_assignment.reserve(cap);
  for (std::size_t i : idx) {
    sub.push_back(points[i]);
    sub_assignment.push_back(assignment[i]);
  }
  return {Silhouette(sub, sub_assignment).mean, true};
}

ClusterModel FitKMeans(std::span<const Point> points, std::size_t k, Rng& rng,
                       const KMeansOptions& options) {
  ValidatePoints(points);
  if (options.restarts == 0) throw ArgumentError("restarts must be positive");
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return LexLess(points[a], points[b]);
  });
  std::vector<Point> sorted;
  sorted.reserve(n);
  for (std::size_t i : order) sorted.push_back(points[i]);

  const std::uint64_t base = rng.NextU64();
  std::vector<ClusterModel> runs(options.restarts);
  ParallelFor(options.restarts, [&](std::size_t r) {
    Rng run_rng(MixSeed(base, r));
    const auto seeds = KMeansPlusPlusSeed(sorted, k, run_rng);
    runs[r] = Lloyd(sorted, seeds, options.max_iter, options.tol);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].wcss < runs[best].wcss) best = r;
  }
  ClusterModel model = std::move(runs[best]);

  std::size_t populated = 0;
  {
    std::vector<char> seen(k, 0);
    for (auto a : model.assignment) {
      if (!seen[a]) {
        seen[a] = 1;
        ++populated;
      }
    }
  }
  if (k >= 2 && populated >= 2) {
    const auto [mean, sampled] = SilhouetteMeanCapped(
        sorted, model.assignment, options.silhouette_cap, MixSeed(base, 0x5111));
    model.silhouette_mean = mean;
    model.silhouette_sampled = sampled;
  }

  std::vector<std::uint32_t> assignment(n);
  for (std::size_t p = 0; p < n; ++p) assignment[order[p]] = model.assignment[p];
  model.assignment = std::move(assignment);
  return model;
}

std::vector<SweepEntry> SweepK(std::span<const Point> points, std::size_t k_min,
                               std::size_t k_max, Rng& rng,
                               const KMeansOptions& options) {
  ValidatePoints(points);
  const std::size_t distinct = CountDistinct(points);
  if (k_min < 2 || k_min > k_max || k_max > distinct) {
    throw ArgumentError("k range [" + std::to_string(k_min) + ", " +
                        std::to_string(k_max) + "] must lie within [2, " +
                        std::to_string(distinct) + "]");
  }
  const std::uint64_t base = rng.NextU64();
  std::vector<SweepEntry> sweep;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    Rng k_rng(MixSeed(base, k));
    sweep.push_back({k, FitKMeans(points, k, k_rng, options)});
  }
  return sweep;
}

std::size_t BestK(std::span<const SweepEntry> sweep) {
  std::size_t best_k = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : sweep) {
    if (e.model.silhouette_mean && *e.model.silhouette_mean > best) {
      best = *e.model.silhouette_mean;
      best_k = e.k;
    }
  }
  return best_k;
}

MinMaxScaler MinMaxScaler::Fit(std::span<const Point> points) {
  const std::size_t d = ValidatePoints(points);
  MinMaxScaler s;
  s.lo.assign(d, std::numeric_limits<double>::infinity());
  s.hi.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& p : points) {
    for (std::size_t t = 0; t < d; ++t) {
      s.lo[t] = std::min(s.lo[t], p.coords[t]);
      s.hi[t] = std::max(s.hi[t], p.coords[t]);
    }
  }
  return s;
}

std::vector<Point> MinMaxScaler::Transform(std::span<const Point> points) const {
  std::vector<Point> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    Point q{std::vector<double>(p.dim()), p.source_id};
    for (std::size_t t = 0; t < p.dim(); ++t) {
      const double range = hi[t] - lo[t];
      q.coords[t] = range > 0.0 ? (p.coords[t] - lo[t]) / range : 0.0;
    }
    out.push_back(std::move(q));
  }
  return out;
}

Point MinMaxScaler::Inverse(const Point& p) const {
  Point q{std::vector<double>(p.dim()), p.source_id};
  for (std::size_t t = 0; t < p.dim(); ++t) {
    q.coords[t] = p.coords[t] * (hi[t] - lo[t]) + lo[t];
  }
  return q;
}

JobClassification ClassifyJobs(std::span<const JobRecord> records, Rng& rng,
                               const KMeansOptions& options) {
  if (records.size() < 3) {
    throw ArgumentError("job classification needs at least 3 records");
  }
  std::vector<Point> raw;
  raw.reserve(records.size());
  for (const auto& r : records) {
    if (!std::isfinite(r.mean_cpu) || !std::isfinite(r.mean_memory)) {
      throw ArgumentError("non-finite resource mean for job " + std::to_string(r.job_id));
    }
    raw.push_back({{r.mean_cpu, r.mean_memory}, r.job_id});
  }
  if (CountDistinct(raw) < 3) {
    throw DegenerateInputError(
        "fewer than 3 distinct (cpu, memory) points: no tri-modal structure");
  }
  const MinMaxScaler scaler = MinMaxScaler::Fit(raw);
  const std::vector<Point> normalized = scaler.Transform(raw);
  ClusterModel model = FitKMeans(normalized, kJobClassCount, rng, options);

  std::vector<Point> centers;
  for (const auto& c : model.centers) centers.push_back(scaler.Inverse(c));
  std::array<std::size_t, kJobClassCount> rank_of{};
  std::array<std::size_t, kJobClassCount> by_rank{0, 1, 2};
  std::sort(by_rank.begin(), by_rank.end(), [&](std::size_t a, std::size_t b) {
    const double na = std::hypot(centers[a].coords[0], centers[a].coords[1]);
    const double nb = std::hypot(centers[b].coords[0], centers[b].coords[1]);
    if (na != nb) return na < nb;
    if (centers[a].coords[0] != centers[b].coords[0]) {
      return centers[a].coords[0] < centers[b].coords[0];
    }
    return centers[a].coords[1] < centers[b].coords[1];
  });
  for (std::size_t r = 0; r < kJobClassCount; ++r) rank_of[by_rank[r]] = r;

  JobClassification out;
  model.centers.clear();
  for (std::size_t r = 0; r < kJobClassCount; ++r) {
    model.centers.push_back(centers[by_rank[r]]);
  }
  for (auto& a : model.assignment) a = static_cast<std::uint32_t>(rank_of[a]);
  out.labels.reserve(records.size());
  for (auto a : model.assignment) {
    out.labels.push_back(static_cast<JobClass>(a));
    ++out.counts[a];
  }
  out.model = std::move(model);
  return out;
}

ArrivalClustering ClusterArrivals(std::span<const JobRecord> records, std::size_t k,
                                  Rng& rng, const KMeansOptions& options) {
  if (k == 0) throw ArgumentError("k must be positive");
  if (records.size() < k) {
    throw ArgumentError("arrival clustering needs at least k records");
  }
  std::vector<Point> raw;
  raw.reserve(records.size());
  for (const auto& r : records) {
    raw.push_back({{static_cast<double>(r.arrival_time.micros()) / kMicrosPerSecond},
                   r.job_id});
  }
  const MinMaxScaler scaler = MinMaxScaler::Fit(raw);
  ClusterModel model = FitKMeans(scaler.Transform(raw), k, rng, options);
  for (auto& c : model.centers) c = scaler.Inverse(c);

  ArrivalClustering out;
  out.clusters.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.clusters[j].center_seconds = model.centers[j].coords[0];
    out.clusters[j].start_seconds = std::numeric_limits<double>::infinity();
    out.clusters[j].end_seconds = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ArrivalCluster& c = out.clusters[model.assignment[i]];
    const double t = raw[i].coords[0];
    c.start_seconds = std::min(c.start_seconds, t);
    c.end_seconds = std::max(c.end_seconds, t);
    ++c.count;
  }
  for (auto& c : out.clusters) {
    if (c.count == 0) c.start_seconds = c.end_seconds = c.center_seconds;
  }
  out.model = std::move(model);
  return out;
}

}  // namespace tracelens::cluster
