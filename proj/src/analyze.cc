#include "tracelens/analyze.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracelens/cluster.h"
#include "tracelens/distfit.h"
#include "tracelens/errors.h"
#include "tracelens/ingest.h"
#include "tracelens/io.h"
#include "tracelens/random.h"

namespace tracelens::analyze {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t {
  kClassifyStream = 1,
  kSweepStream = 2,
  kArrivalStream = 3,
  kSilhouettePlotStream = 4,
};

constexpr std::size_t kDefaultArrivalKMax = 6;

Json Insufficient(const std::string& why) {
  return Json{{"status", "insufficient_data"}, {"message", why}};
}

Json Failed(const std::string& why) { return Json{{"status", "failed"}, {"message", why}}; }

std::string Csv(std::initializer_list<double> values) {
  std::string line;
  for (double v : values) {
    if (!line.empty()) line += ',';
    AppendDouble(&line, v);
  }
  return line;
}

std::size_t Distinct(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

class Runner {
 public:
  Runner(std::span<const JobRecord> records, const AnalyzeOptions& options, Analysis* out)
      : records_(records), options_(options), out_(out), master_(options.seed) {
    kmeans_.restarts = options.restarts;
    kmeans_.silhouette_cap = options.silhouette_cap;
  }

  // Runs one section; errors become a "failed" entry instead of escaping.
  template <typename Fn>
  Json Section(Fn&& fn) {
    Json result;
    try {
      result = fn();
    } catch (const ArgumentError& e) {
      ++out_->attempted;
      return Failed(e.what());
    } catch (const FitError& e) {
      ++out_->attempted;
      return Failed(e.what());
    }
    if (result.at("status") == "ok") {
      ++out_->attempted;
      ++out_->succeeded;
    }
    return result;
  }

  Json JobClasses() {
    if (records_.size() < 3) return Insufficient("job classification needs at least 3 jobs");
    Rng rng = master_.Fork(kClassifyStream);
    const auto jc = cluster::ClassifyJobs(records_, rng, kmeans_);
    Json classes = Json::array();
    for (std::size_t c = 0; c < kJobClassCount; ++c) {
      const auto& center = jc.model.centers[c].coords;
      classes.push_back({{"label", JobClassName(static_cast<JobClass>(c))},
                         {"count", jc.counts[c]},
                         {"share", static_cast<double>(jc.counts[c]) /
                                       static_cast<double>(records_.size())},
                         {"center", {{"cpu", center[0]}, {"memory", center[1]}}}});
    }
    auto& table = out_->tables["job_assignments.csv"];
    table.push_back("job_id,cluster_index,label");
    for (std::size_t i = 0; i < records_.size(); ++i) {
      table.push_back(std::to_string(records_[i].job_id) + "," +
                      std::to_string(jc.model.assignment[i]) + "," +
                      std::string(JobClassName(jc.labels[i])));
    }
    return Json{{"status", "ok"},
                {"k", jc.model.k},
                {"classes", classes},
                {"wcss", jc.model.wcss},
                {"iterations", jc.model.iterations},
                {"silhouette_mean", FiniteOrNull(jc.model.silhouette_mean.value_or(NAN))},
                {"silhouette_sampled", jc.model.silhouette_sampled}};
  }

  Json KSweep() {
    std::vector<cluster::Point> raw;
    raw.reserve(records_.size());
    for (const auto& r : records_) raw.push_back({{r.mean_cpu, r.mean_memory}, r.job_id});
    if (raw.empty()) return Insufficient("no jobs");
    const std::size_t distinct = cluster::CountDistinct(raw);
    if (distinct < options_.k_min) {
      return Insufficient("only " + std::to_string(distinct) +
                          " distinct (cpu, memory) points, below k_min");
    }
    const std::size_t k_max = std::min(options_.k_max, distinct);
    const auto scaler = cluster::MinMaxScaler::Fit(raw);
    const auto points = scaler.Transform(raw);
    Rng rng = master_.Fork(kSweepStream);
    const auto sweep = cluster::SweepK(points, options_.k_min, k_max, rng, kmeans_);
    Json entries = Json::array();
    for (const auto& e : sweep) {
      entries.push_back(
          {{"k", e.k},
           {"wcss", e.model.wcss},
           {"iterations", e.model.iterations},
           {"silhouette_mean", FiniteOrNull(e.model.silhouette_mean.value_or(NAN))},
           {"silhouette_sampled", e.model.silhouette_sampled}});
    }
    return Json{{"status", "ok"},
                {"k_min", options_.k_min},
                {"k_max", k_max},
                {"restarts", options_.restarts},
                {"best_k", cluster::BestK(sweep)},
                {"entries", entries}};
  }

  Json ArrivalClusters() {
    std::vector<double> arrivals;
    for (const auto& r : records_) {
      arrivals.push_back(static_cast<double>(r.arrival_time.micros()) / kMicrosPerSecond);
    }
    const std::size_t distinct = Distinct(arrivals);
    const Rng base = master_.Fork(kArrivalStream);
    std::optional<cluster::ArrivalClustering> best;
    std::string k_source;
    Json sweep = Json::array();
    if (options_.arrival_k) {
      const std::size_t k = *options_.arrival_k;
      if (records_.size() < k || distinct < k) {
        return Insufficient("fewer distinct arrival times than --arrival-k");
      }
      Rng rng(MixSeed(base.seed(), k));
      best = cluster::ClusterArrivals(records_, k, rng, kmeans_);
      k_source = "flag";
    } else {
      if (distinct < 2) return Insufficient("fewer than 2 distinct arrival times");
      const std::size_t k_max = std::min(kDefaultArrivalKMax, distinct);
      for (std::size_t k = 2; k <= k_max; ++k) {
        Rng rng(MixSeed(base.seed(), k));
        auto result = cluster::ClusterArrivals(records_, k, rng, kmeans_);
        const double s = result.model.silhouette_mean.value_or(-2.0);
        sweep.push_back({{"k", k}, {"silhouette_mean", FiniteOrNull(s)}});
        if (!best || s > best->model.silhouette_mean.value_or(-2.0)) best = std::move(result);
      }
      k_source = "silhouette";
    }

    Json clusters = Json::array();
    for (std::size_t j = 0; j < best->clusters.size(); ++j) {
      const auto& c = best->clusters[j];
      clusters.push_back({{"index", j},
                          {"center_seconds", c.center_seconds},
                          {"start_seconds", c.start_seconds},
                          {"end_seconds", c.end_seconds},
                          {"extent_seconds", c.extent_seconds()},
                          {"count", c.count}});
    }
    SilhouettePlot(arrivals, best->model.assignment, best->model.k);
    return Json{{"status", "ok"},
                {"k", best->model.k},
                {"k_source", k_source},
                {"wcss", best->model.wcss},
                {"silhouette_mean", FiniteOrNull(best->model.silhouette_mean.value_or(NAN))},
                {"silhouette_sampled", best->model.silhouette_sampled},
                {"sweep", sweep},
                {"clusters", clusters}};
  }

  Json InterarrivalFit() {
    if (records_.size() < 11) return Insufficient("Weibull fit needs at least 11 jobs");
    const auto gaps = ingest::InterarrivalTimes(records_);
    std::vector<double> x;
    x.reserve(gaps.size());
    for (Duration d : gaps) x.push_back(static_cast<double>(d) / kMicrosPerSecond);
    const FittedDistribution fit = distfit::FitWeibull(x);
    const auto& p = std::get<WeibullParams>(fit.params);

    std::sort(x.begin(), x.end());
    const distfit::Ecdf ecdf(x);
    auto& emp = out_->tables["interarrival_ecdf.csv"];
    auto& model = out_->tables["interarrival_weibull_cdf.csv"];
    emp.push_back("x,F");
    model.push_back("x,F");
    for (double q : QuantileGrid(x, kCurvePoints)) {
      emp.push_back(Csv({q, ecdf.Evaluate(q)}));
      model.push_back(Csv({q, distfit::WeibullCdf(q, p.shape, p.scale)}));
    }

    const auto below = static_cast<std::size_t>(
        std::upper_bound(x.begin(), x.end(), options_.arrival_threshold) - x.begin());
    annotations_.push_back(
        {{"key", "arrival_threshold"},
         {"text", "Interarrival times at or below --arrival-threshold, read as "
                  "seconds."},
         {"values",
          {{"threshold_seconds", options_.arrival_threshold},
           {"count", below},
           {"fraction", static_cast<double>(below) / static_cast<double>(x.size())}}}});

    Json j{{"status", "ok"}};
    j.update(Json(fit));
    j["unit"] = "seconds";
    j["ks_critical_95"] = distfit::KsCritical95(x.size());
    return j;
  }

  Json UsageFit(bool cpu) {
    const char* name = cpu ? "cpu" : "memory";
    std::vector<double> values;
    std::size_t excluded = 0;
    for (const auto& r : records_) {
      const double v = cpu ? r.mean_cpu : r.mean_memory;
      if (v > 0.0) {
        values.push_back(v);
      } else {
        ++excluded;
      }
    }
    if (values.size() < 10) {
      return Insufficient(std::string("Zipf fit needs at least 10 jobs with positive mean ") +
                          name);
    }
    const FittedDistribution fit = distfit::FitZipf(values);
    std::sort(values.begin(), values.end(), std::greater<>());
    auto& table = out_->tables[std::string(name) + "_rank_frequency.csv"];
    table.push_back("rank,value");
    std::size_t last = 0;
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < kCurvePoints; ++i) {
      // Log-spaced ranks 1..n.
      const double t = static_cast<double>(i) / static_cast<double>(kCurvePoints - 1);
      const auto rank = static_cast<std::size_t>(std::llround(std::pow(n, t)));
      if (rank <= last || rank > values.size()) continue;
      last = rank;
      table.push_back(std::to_string(rank) + "," + FormatDouble(values[rank - 1]));
    }
    Json j{{"status", "ok"}};
    j.update(Json(fit));
    j["unit"] = "fraction";
    j["excluded_count"] = excluded;
    return j;
  }

  Json RuntimeFit() {
    std::vector<double> runtimes;
    std::size_t excluded = 0;
    for (const auto& r : records_) {
      if (r.runtime) {
        runtimes.push_back(static_cast<double>(*r.runtime) / kMicrosPerSecond);
      } else {
        ++excluded;
      }
    }
    if (runtimes.size() < 50) {
      return Insufficient("tail fit needs at least 50 jobs with a runtime");
    }
    const FittedDistribution fit = distfit::FitParetoTail(runtimes);
    const auto& p = std::get<ParetoTailParams>(fit.params);
    const auto summary = distfit::TailSkewnessReport(runtimes);

    std::sort(runtimes.begin(), runtimes.end());
    const distfit::Ecdf ecdf(runtimes);
    const double tail_share =
        static_cast<double>(fit.sample_count) / static_cast<double>(runtimes.size());
    auto& emp = out_->tables["runtime_survival.csv"];
    auto& model = out_->tables["runtime_pareto_survival.csv"];
    emp.push_back("x,survival");
    model.push_back("x,survival");
    for (double q : QuantileGrid(runtimes, kCurvePoints)) {
      emp.push_back(Csv({q, 1.0 - ecdf.Evaluate(q)}));
      if (q >= p.xmin) {
        model.push_back(Csv({q, tail_share * std::pow(q / p.xmin, -p.exponent)}));
      }
    }

    Json j{{"status", "ok"}};
    j.update(Json(fit));
    j["unit"] = "seconds";
    j["excluded_count"] = excluded;
    j["tail_summary"] = Json{{"mean", summary.mean},
                             {"median", summary.median},
                             {"p90", summary.p90},
                             {"p99", summary.p99},
                             {"max", summary.max},
                             {"mean_median_ratio", FiniteOrNull(summary.mean_median_ratio)}};
    if (excluded > 0) {
      annotations_.push_back(
          {{"key", "runtime_censoring"},
           {"text", "Jobs without a runtime are left out of the runtime fit."},
           {"values", {{"excluded", excluded}}}});
    }
    return j;
  }

  Json Annotations() {
    annotations_.push_back(
        {{"key", "zipf_ranked_quantity"},
         {"text", "Rank-frequency fits use per-job mean cpu and mean memory, each ranked "
                  "on its own. Jobs with a zero mean are excluded."},
         {"values", Json::object()}});
    return annotations_;
  }

 private:
  void SilhouettePlot(const std::vector<double>& arrivals,
                      const std::vector<std::uint32_t>& assignment, std::size_t k) {
    std::vector<std::size_t> idx(arrivals.size());
    std::iota(idx.begin(), idx.end(), 0);
    bool sampled = false;
    if (idx.size() > options_.silhouette_plot_points) {
      Rng rng = master_.Fork(kSilhouettePlotStream);
      for (std::size_t i = 0; i < options_.silhouette_plot_points; ++i) {
        std::swap(idx[i], idx[i + rng.UniformIndex(idx.size() - i)]);
      }
      idx.resize(options_.silhouette_plot_points);
      std::sort(idx.begin(), idx.end());
      sampled = true;
    }
    std::vector<cluster::Point> points;
    std::vector<std::uint32_t> assign;
    std::vector<std::size_t> populated(k, 0);
    for (std::size_t i : idx) {
      points.push_back({{arrivals[i]}, std::nullopt});
      assign.push_back(assignment[i]);
      ++populated[assignment[i]];
    }
    if (std::count_if(populated.begin(), populated.end(),
                      [](std::size_t c) { return c > 0; }) < 2) {
      return;
    }
    const auto sil = cluster::Silhouette(points, assign);
    std::vector<std::pair<std::uint32_t, double>> rows;
    for (std::size_t i = 0; i < points.size(); ++i) rows.emplace_back(assign[i], sil.scores[i]);
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second > b.second;
    });
    auto& table = out_->tables["arrival_silhouette.csv"];
    table.push_back("cluster_index,silhouette");
    for (const auto& [c, s] : rows) table.push_back(std::to_string(c) + "," + FormatDouble(s));
    if (sampled) {
      annotations_.push_back(
          {{"key", "arrival_silhouette_plot_sampled"},
           {"text", "The per-point arrival silhouette export uses a seeded subsample."},
           {"values", {{"points", points.size()}}}});
    }
  }

  std::span<const JobRecord> records_;
  const AnalyzeOptions& options_;
  Analysis* out_;
  Rng master_;
  cluster::KMeansOptions kmeans_;
  Json annotations_ = Json::array();
};

}  // namespace

void AnalyzeOptions::Validate() const {
  if (k_min < 2) throw ArgumentError("--k-min must be at least 2");
  if (k_max < k_min) throw ArgumentError("--k-max must not be below --k-min");
  if (restarts == 0) throw ArgumentError("--restarts must be positive");
  if (arrival_k && *arrival_k == 0) throw ArgumentError("--arrival-k must be positive");
  if (!(arrival_threshold >= 0.0) || !std::isfinite(arrival_threshold)) {
    throw ArgumentError("arrival threshold must be a non-negative number");
  }
  if (silhouette_cap < 2) throw ArgumentError("silhouette cap must be at least 2");
}

std::vector<double> QuantileGrid(std::span<const double> sorted, std::size_t count) {
  std::vector<double> xs;
  if (sorted.empty()) return xs;
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < count; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    xs.push_back(sorted[std::clamp<std::size_t>(rank, 1, n) - 1]);
  }
  return xs;
}

Analysis Analyze(std::span<const JobRecord> records, const AnalyzeOptions& options,
                 const std::optional<Json>& ingest_stats,
                 const std::string& ingest_stats_source) {
  options.Validate();
  Analysis out;
  Runner run(records, options, &out);

  std::size_t with_runtime = 0;
  std::size_t censored = 0;
  for (const auto& r : records) {
    with_runtime += r.runtime ? 1 : 0;
    censored += r.terminal_event == TerminalEvent::kCensored ? 1 : 0;
  }

  Json& report = out.report;
  report["schema_version"] = kReportSchemaVersion;
  report["seed"] = options.seed;
  report["job_count"] = records.size();
  report["ingest_stats"] = {
      {"jobs_loaded", records.size()},
      {"jobs_with_runtime", with_runtime},
      {"jobs_censored", censored},
      {"source", ingest_stats ? Json(ingest_stats_source) : Json(nullptr)},
      {"ingest", ingest_stats ? *ingest_stats : Json(nullptr)}};
  report["job_classes"] = run.Section([&] { return run.JobClasses(); });
  report["k_sweep"] = run.Section([&] { return run.KSweep(); });
  report["arrival_clusters"] = run.Section([&] { return run.ArrivalClusters(); });
  report["fits"] = {
      {"interarrival", run.Section([&] { return run.InterarrivalFit(); })},
      {"cpu_usage", run.Section([&] { return run.UsageFit(true); })},
      {"memory_usage", run.Section([&] { return run.UsageFit(false); })},
      {"runtime", run.Section([&] { return run.RuntimeFit(); })}};
  report["annotations"] = run.Annotations();
  Json outputs = Json::array();
  outputs.push_back("report.json");
  for (const auto& [name, lines] : out.tables) outputs.push_back(name);
  report["outputs"] = outputs;
  return out;
}

fs::path WriteAnalysis(const Analysis& analysis, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  for (const auto& [name, lines] : analysis.tables) {
    std::string text;
    for (const auto& line : lines) {
      text += line;
      text += '\n';
    }
    WriteTextFile(out_dir / name, text);
  }
  const fs::path report_path = out_dir / "report.json";
  WriteTextFile(report_path, analysis.report.dump(2) + "\n");
  return report_path;
}

}  // namespace tracelens::analyze
