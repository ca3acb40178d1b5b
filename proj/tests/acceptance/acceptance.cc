// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include <malloc.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <new>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "test_support.h"
#include "tracelens/cli.h"
#include "tracelens/cluster.h"
#include "tracelens/distfit.h"
#include "tracelens/ingest.h"
#include "tracelens/io.h"
#include "tracelens/json_schema.h"
#include "tracelens/parallel.h"
#include "tracelens/synth.h"

// --- heap accounting --------------------------------------------------------
//
// Global operator new/delete replacements tracking live and peak bytes via
// malloc_usable_size, so frees need no header.

namespace {
std::atomic<std::int64_t> g_live{0};
std::atomic<std::int64_t> g_peak{0};

void* Track(void* p) {
  if (p == nullptr) throw std::bad_alloc();
  const auto now = g_live.fetch_add(static_cast<std::int64_t>(malloc_usable_size(p))) +
                   static_cast<std::int64_t>(malloc_usable_size(p));
  auto peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
  return p;
}

void Untrack(void* p) {
  if (p == nullptr) return;
  g_live.fetch_sub(static_cast<std::int64_t>(malloc_usable_size(p)));
  std::free(p);
}

void* AlignedAlloc(std::size_t n, std::align_val_t a) {
  const auto align = static_cast<std::size_t>(a);
  return std::aligned_alloc(align, (std::max<std::size_t>(n, 1) + align - 1) / align * align);
}

void ResetPeak() { g_peak.store(g_live.load()); }
std::int64_t PeakAbove(std::int64_t base) { return g_peak.load() - base; }
}  // namespace

void* operator new(std::size_t n) { return Track(std::malloc(std::max<std::size_t>(n, 1))); }
void* operator new[](std::size_t n) { return Track(std::malloc(std::max<std::size_t>(n, 1))); }
void* operator new(std::size_t n, std::align_val_t a) { return Track(AlignedAlloc(n, a)); }
void* operator new[](std::size_t n, std::align_val_t a) { return Track(AlignedAlloc(n, a)); }
void operator delete(void* p) noexcept { Untrack(p); }
void operator delete[](void* p) noexcept { Untrack(p); }
void operator delete(void* p, std::size_t) noexcept { Untrack(p); }
void operator delete[](void* p, std::size_t) noexcept { Untrack(p); }
void operator delete(void* p, std::align_val_t) noexcept { Untrack(p); }
void operator delete[](void* p, std::align_val_t) noexcept { Untrack(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { Untrack(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { Untrack(p); }

namespace tracelens {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::vector<cluster::Point> UsagePoints(std::span<const JobRecord> records) {
  std::vector<cluster::Point> pts;
  pts.reserve(records.size());
  for (const auto& r : records) pts.push_back({{r.mean_cpu, r.mean_memory}, r.job_id});
  return pts;
}

double LabelAccuracy(const synth::SyntheticTrace& trace, std::span<const JobClass> labels) {
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    agree += labels[i] == trace.jobs[i].true_class ? 1 : 0;
  }
  return static_cast<double>(agree) / static_cast<double>(labels.size());
}

std::vector<double> WeibullDraws(std::size_t n, double shape, double scale, std::uint64_t seed) {
  Rng rng(seed);
  return synth::GenInterarrivals(n, WeibullParams{shape, scale}, rng);
}

std::vector<double> ParetoDraws(std::size_t n, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = synth::SampleParetoTail(ParetoTailParams{alpha, 1.0}, rng);
  return x;
}

// 1. three usage blobs: k = 3 by silhouette, >= 95% label accuracy, <= 30 s.
Outcome TriModal() {
  synth::SynthesisSpec spec;
  spec.job_count = 50000;
  spec.seed = 101;
  const auto trace = synth::GenJobStream(spec);
  std::vector<JobRecord> records;
  for (const auto& j : trace.jobs) records.push_back(j.record);

  const auto start = std::chrono::steady_clock::now();
  const auto raw = UsagePoints(records);
  const auto points = cluster::MinMaxScaler::Fit(raw).Transform(raw);
  Rng rng(7);
  Rng sweep_rng = rng.Fork(1);
  const auto sweep = cluster::SweepK(points, 2, 6, sweep_rng);
  const std::size_t best = cluster::BestK(sweep);
  Rng classify_rng = rng.Fork(2);
  const auto classes = cluster::ClassifyJobs(records, classify_rng);
  const double elapsed = Seconds(start);
  const double acc = LabelAccuracy(trace, classes.labels);
  return {best == 3 && acc >= 0.95 && elapsed <= 30.0,
          fmt::format("n=50000 best_k={} accuracy={:.4f} time={:.1f}s", best, acc, elapsed)};
}

// 2. end-to-end MINOR share 0.75 +- 0.02.
Outcome MinorShare() {
  TempDir dir("acc2");
  synth::SynthesisSpec spec;
  spec.job_count = 20000;
  spec.seed = 202;
  spec.class_mix = {0.75, 0.15, 0.10};
  synth::EmitTrace(synth::GenJobStream(spec), spec, dir.path());
  const auto records = ingest::IngestTrace(dir.path()).jobs.records;
  Rng rng(2);
  const auto classes = cluster::ClassifyJobs(records, rng);
  const double share = static_cast<double>(classes.counts[0]) / records.size();
  return {std::abs(share - 0.75) <= 0.02,
          fmt::format("jobs={} minor_share={:.4f}", records.size(), share)};
}

// 3. Weibull (1.5, 2.0) at n = 100k: 5% recovery, KS within the 95% bound
// on at least 95% of seeds, <= 10 s per run.
Outcome WeibullRoundTrip() {
  const int seeds = 20;
  int recovered = 0, ks_ok = 0;
  double worst_time = 0, worst_rel = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto start = std::chrono::steady_clock::now();
    const auto x = WeibullDraws(100000, 1.5, 2.0, 300 + s);
    const auto fit = distfit::FitWeibull(x);
    worst_time = std::max(worst_time, Seconds(start));
    const auto p = std::get<WeibullParams>(fit.params);
    const double rel = std::max(std::abs(p.shape / 1.5 - 1), std::abs(p.scale / 2.0 - 1));
    worst_rel = std::max(worst_rel, rel);
    recovered += rel <= 0.05 ? 1 : 0;
    ks_ok += *fit.ks_statistic <= distfit::KsCritical95(x.size()) ? 1 : 0;
  }
  return {recovered == seeds && ks_ok >= seeds * 95 / 100 && worst_time <= 10.0,
          fmt::format("seeds={} recovered={} ks_within_bound={} worst_rel={:.4f} worst_time={:.2f}s",
                      seeds, recovered, ks_ok, worst_rel, worst_time)};
}

// 4. exact Zipf to 1e-9 with R^2 = 1; sampled Zipf(1.2, 1000) within 0.1.
Outcome Zipf() {
  double worst = 0, worst_r2 = 0;
  for (double theta : {0.8, 1.0, 1.2, 2.0}) {
    std::vector<double> v;
    for (int i = 1; i <= 1000; ++i) v.push_back(3.5 / std::pow(i, theta));
    const auto fit = distfit::FitZipf(v);
    worst = std::max(worst, std::abs(std::get<ZipfParams>(fit.params).exponent - theta));
    worst_r2 = std::max(worst_r2, std::abs(*fit.r_squared - 1));
  }
  const synth::ZipfSampler sampler(1.2, 1000);
  Rng rng(404);
  std::map<std::uint64_t, double> freq;
  for (int i = 0; i < 100000; ++i) freq[sampler.Sample(rng)] += 1;
  std::vector<double> counts;
  for (const auto& [rank, c] : freq) counts.push_back(c);
  const double sampled = std::get<ZipfParams>(distfit::FitZipf(counts).params).exponent;
  return {worst <= 1e-9 && worst_r2 <= 1e-12 && std::abs(sampled - 1.2) <= 0.1,
          fmt::format("exact_err={:.2e} r2_err={:.2e} sampled_theta={:.4f}", worst, worst_r2,
                      sampled)};
}

// 5. Pareto alpha in {1.0, 1.5} within 5% at n = 100k; alpha = 3 flagged.
Outcome HeavyTail() {
  std::string detail;
  bool ok = true;
  for (double alpha : {1.0, 1.5}) {
    const auto fit = distfit::FitParetoTail(ParetoDraws(100000, alpha, 500));
    const double a = std::get<ParetoTailParams>(fit.params).exponent;
    ok = ok && std::abs(a / alpha - 1) <= 0.05 && fit.flags.empty();
    detail += fmt::format("alpha={} fitted={:.4f} ", alpha, a);
  }
  const auto three = distfit::FitParetoTail(ParetoDraws(100000, 3.0, 501));
  const bool flagged = three.flags == std::vector<std::string>{"alpha_outside_(0,2]"};
  ok = ok && flagged;
  detail += fmt::format("alpha=3 flagged={}", flagged);
  return {ok, detail};
}

// 6. ECDF properties and brute force on 1000 random query points.
Outcome EcdfProperties() {
  Rng rng(606);
  std::size_t violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(1 + rng.UniformIndex(2000));
    for (auto& v : s) v = std::round(rng.Normal() * 50) / 7;
    const distfit::Ecdf e(s);
    violations += e.Evaluate(*std::max_element(s.begin(), s.end())) == 1.0 ? 0 : 1;
    std::vector<double> q(1000);
    for (auto& v : q) v = (rng.Uniform() - 0.5) * 60;
    std::sort(q.begin(), q.end());
    double prev = 0;
    for (double x : q) {
      const double f = e.Evaluate(x);
      const auto count = std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; });
      if (f != static_cast<double>(count) / s.size() || f < prev || f < 0 || f > 1) ++violations;
      prev = f;
    }
  }
  return {violations == 0, fmt::format("datasets=20 queries=20000 violations={}", violations)};
}

double BruteSilhouette(std::span<const cluster::Point> pts, std::span<const std::uint32_t> lab,
                       std::size_t k) {
  double total = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      double d2 = 0;
      for (std::size_t c = 0; c < pts[i].dim(); ++c) {
        d2 += (pts[i].coords[c] - pts[j].coords[c]) * (pts[i].coords[c] - pts[j].coords[c]);
      }
      sum[lab[j]] += std::sqrt(d2);
      ++cnt[lab[j]];
    }
    if (cnt[lab[i]] == 0) continue;
    const double a = sum[lab[i]] / cnt[lab[i]];
    double b = INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
      if (c != lab[i] && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / pts.size();
}

// 7. seeding distinctness, monotone wcss, silhouette vs brute force,
// bitwise determinism.
Outcome KMeansSuite() {
  Rng rng(707);
  int seeding_bad = 0, monotone_bad = 0, sil_bad = 0, det_bad = 0;
  double sil_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + rng.UniformIndex(291);
    const std::size_t dim = 1 + rng.UniformIndex(3);
    std::vector<cluster::Point> pts(n);
    for (auto& p : pts) {
      for (std::size_t d = 0; d < dim; ++d) p.coords.push_back(std::round(rng.Normal() * 8) / 3);
    }
    const std::size_t k = 2 + rng.UniformIndex(std::min<std::size_t>(5, cluster::CountDistinct(pts) - 1));
    Rng seed_rng = rng.Fork(trial);
    const auto centers = cluster::KMeansPlusPlusSeed(pts, k, seed_rng);
    seeding_bad += cluster::CountDistinct(centers) == k ? 0 : 1;

    const auto m = cluster::Lloyd(pts, centers, 300, 0.0);
    for (std::size_t i = 1; i < m.wcss_history.size(); ++i) {
      if (m.wcss_history[i] > m.wcss_history[i - 1] * (1 + 1e-12)) {
        ++monotone_bad;
        break;
      }
    }
    std::set<std::uint32_t> used(m.assignment.begin(), m.assignment.end());
    if (used.size() >= 2) {
      const double err = std::abs(cluster::Silhouette(pts, m.assignment).mean -
                                  BruteSilhouette(pts, m.assignment, m.k));
      sil_err = std::max(sil_err, err);
      sil_bad += err <= 1e-12 ? 0 : 1;
    }
    Rng a(trial), b(trial);
    det_bad += cluster::FitKMeans(pts, k, a) == cluster::FitKMeans(pts, k, b) ? 0 : 1;
  }
  return {seeding_bad + monotone_bad + sil_bad + det_bad == 0,
          fmt::format("datasets=100 seeding_dup={} wcss_increase={} silhouette_mismatch={} "
                      "max_sil_err={:.1e} nondeterministic={}",
                      seeding_bad, monotone_bad, sil_bad, sil_err, det_bad)};
}

// 8. gradient at the MLE vs central differences, |diff| <= 1e-6 n.
Outcome MleStationarity() {
  Rng rng(808);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 100 + rng.UniformIndex(20000);
    const double shape = 0.3 + 4 * rng.Uniform();
    const double scale = 0.01 + 100 * rng.Uniform();
    const auto x = WeibullDraws(n, shape, scale, 900 + trial);
    const auto p = std::get<WeibullParams>(distfit::FitWeibull(x).params);
    const auto g = distfit::WeibullLogLikelihoodGradient(x, p.shape, p.scale);
    const double ha = 1e-6 * p.shape, hb = 1e-6 * p.scale;
    const double da = (distfit::WeibullLogLikelihood(x, p.shape + ha, p.scale) -
                       distfit::WeibullLogLikelihood(x, p.shape - ha, p.scale)) / (2 * ha);
    const double db = (distfit::WeibullLogLikelihood(x, p.shape, p.scale + hb) -
                       distfit::WeibullLogLikelihood(x, p.shape, p.scale - hb)) / (2 * hb);
    worst = std::max({worst, std::abs(g.d_shape - da) / n, std::abs(g.d_scale - db) / n});
  }
  return {worst <= 1e-6, fmt::format("datasets=20 max|analytic-numeric|/n={:.2e}", worst)};
}

std::uint64_t UsageRows(const synth::Manifest& m) {
  std::uint64_t rows = 0;
  for (const auto& f : m.files) rows += f.table == "task_usage" ? f.rows : 0;
  return rows;
}

// Peak heap above the baseline during one ingest pass.
std::int64_t IngestPeak(const fs::path& root, std::vector<JobRecord>* records) {
  const auto base = g_live.load();
  ResetPeak();
  auto result = ingest::IngestTrace(root);
  const auto peak = PeakAbove(base);
  *records = std::move(result.jobs.records);
  return peak;
}

// Rewrites a trace with every table's rows globally shuffled across a new
// set of part files.
void ShuffleTrace(const fs::path& from, const fs::path& to, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto t : {ingest::Table::kJobEvents, ingest::Table::kTaskUsage}) {
    const std::string table(ingest::TableName(t));
    std::vector<std::string> lines;
    for (const auto& p : ingest::ListPartFiles(from, t)) {
      LineReader r(p);
      std::string_view line;
      while (r.Next(&line)) lines.emplace_back(line);
    }
    for (std::size_t i = lines.size(); i > 1; --i) std::swap(lines[i - 1], lines[rng.UniformIndex(i)]);
    const std::size_t parts = 5;
    for (std::size_t part = 0; part < parts; ++part) {
      std::vector<std::string> chunk;
      for (std::size_t i = part; i < lines.size(); i += parts) chunk.push_back(std::move(lines[i]));
      fs::create_directories(to / table);
      testing::WriteLines(to / table / fmt::format("part-{:05}-of-{:05}.csv.gz", part, parts), chunk,
                          true);
    }
  }
}

// 9. 1M usage rows ingest with peak heap tied to the job count, and a
// shuffled copy gives identical records.
Outcome IngestAtScale() {
  TempDir dir("acc9");
  synth::SynthesisSpec spec;
  spec.job_count = 5000;
  spec.seed = 909;
  spec.tasks_per_job = 10;
  spec.shards = 8;
  const auto trace = synth::GenJobStream(spec);

  // Same jobs, usage tiled at two granularities: ~10x more rows in `big`.
  spec.usage_window = 30;
  const auto big = synth::EmitTrace(trace, spec, dir / "big");
  spec.usage_window = 300;
  const auto small = synth::EmitTrace(trace, spec, dir / "small");
  const auto big_rows = UsageRows(big);
  const auto small_rows = UsageRows(small);

  std::vector<JobRecord> big_records, small_records, shuffled_records;
  const auto big_peak = IngestPeak(dir / "big", &big_records);
  const auto small_peak = IngestPeak(dir / "small", &small_records);
  ShuffleTrace(dir / "big", dir / "shuffled", 99);
  IngestPeak(dir / "shuffled", &shuffled_records);

  // Only arrival, runtime, task count and the constant usage rates matter
  // here; both granularities must agree on all of them.
  const bool same_jobs = big_records == small_records;
  const bool shuffle_same = shuffled_records == big_records && big_records.size() == spec.job_count;
  const double ratio = static_cast<double>(big_peak) / static_cast<double>(small_peak);
  const bool bounded = big_rows >= 1000000 && ratio <= 1.5;
  return {bounded && same_jobs && shuffle_same,
          fmt::format("usage_rows={} vs {} peak_heap={:.1f}MiB vs {:.1f}MiB ratio={:.2f} "
                      "granularity_invariant={} shuffle_identical={}",
                      big_rows, small_rows, big_peak / 1048576.0, small_peak / 1048576.0, ratio,
                      same_jobs, shuffle_same)};
}

int Cli(std::vector<std::string> args, std::string* err) {
  args.insert(args.begin(), "tracelens");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, errs;
  const int code = cli::Run(static_cast<int>(argv.size()), argv.data(), out, errs);
  *err += errs.str();
  return code;
}

// 10. generate -> ingest -> analyze from an empty directory.
Outcome ClosedLoop() {
  TempDir dir("acc10");
  WriteTextFile(dir / "spec.conf", "job_count = 2000\nseed = 10\n");
  std::string err;
  const int g = Cli({"generate", "--spec", (dir / "spec.conf").string(), "--out-dir",
                     (dir / "trace").string()}, &err);
  const int i = Cli({"ingest", "--trace-root", (dir / "trace").string(), "--out",
                     (dir / "ingested").string()}, &err);
  const int a = Cli({"analyze", "--jobs", (dir / "ingested" / "jobs.csv").string(), "--out-dir",
                     (dir / "report").string(), "--seed", "10"}, &err);
  std::size_t problems = 1;
  if (fs::exists(dir / "report" / "report.json")) {
    problems = ValidateReport(Json::parse(ReadTextFile(dir / "report" / "report.json"))).size();
  }
  return {g == 0 && i == 0 && a == 0 && problems == 0,
          fmt::format("exit codes {}/{}/{} schema_errors={}", g, i, a, problems)};
}

}  // namespace
}  // namespace tracelens

int main() {
  using namespace tracelens;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"tri-modal recovery", TriModal},
      {"minor-job share", MinorShare},
      {"weibull round trip", WeibullRoundTrip},
      {"zipf exactness and recovery", Zipf},
      {"heavy-tail recovery", HeavyTail},
      {"ecdf correctness", EcdfProperties},
      {"k-means++ suite", KMeansSuite},
      {"mle stationarity", MleStationarity},
      {"ingestion at scale", IngestAtScale},
      {"closed loop", ClosedLoop},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
