// The analysis pipeline behind `tracelens analyze`: job classification, a
// k sweep, arrival clustering and the three distribution fits, collected
// into one JSON report plus plot-ready CSV tables.

#ifndef TRACELENS_ANALYZE_H_
#define TRACELENS_ANALYZE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tracelens/serialize.h"
#include "tracelens/trace_model.h"

namespace tracelens::analyze {

struct AnalyzeOptions {
  std::size_t k_min = 2;
  std::size_t k_max = 6;
  std::size_t restarts = 10;
  std::uint64_t seed = 1;
  // Fixed arrival k; when absent k is picked by silhouette over 2..6.
  std::optional<std::size_t> arrival_k;
  // Interarrival threshold for the burst annotation, in seconds.
  double arrival_threshold = 5.0;
  std::size_t silhouette_cap = 50000;
  // Points in the per-point arrival silhouette export.
  std::size_t silhouette_plot_points = 5000;

  // Throws ArgumentError on inconsistent values.
  void Validate() const;
};

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::size_t kCurvePoints = 512;

struct Analysis {
  Json report;
  // File name -> CSV lines (header first).
  std::map<std::string, std::vector<std::string>> tables;
  int attempted = 0;
  int succeeded = 0;

  bool failed() const { return attempted > 0 && succeeded == 0; }
};

// `ingest_stats` is embedded as-is when present (normally the
// ingest_stats.json written next to jobs.csv).
Analysis Analyze(std::span<const JobRecord> records, const AnalyzeOptions& options,
                 const std::optional<Json>& ingest_stats = std::nullopt,
                 const std::string& ingest_stats_source = "");

// Writes report.json and every table under out_dir; returns the report path.
std::filesystem::path WriteAnalysis(const Analysis& analysis,
                                    const std::filesystem::path& out_dir);

// Abscissae for CDF overlays: the empirical quantiles at (i + 0.5) / count.
std::vector<double> QuantileGrid(std::span<const double> sorted, std::size_t count);

}  // namespace tracelens::analyze

#endif  // TRACELENS_ANALYZE_H_
