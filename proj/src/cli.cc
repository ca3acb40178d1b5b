#include "tracelens/cli.h"

#include <cstdlib>
#include <ostream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "tracelens/errors.h"
#include "tracelens/ingest.h"
#include "tracelens/json_schema.h"
#include "tracelens/parallel.h"
#include "tracelens/serialize.h"
#include "tracelens/synth.h"

namespace tracelens::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> Log() {
  static const auto logger = [] {
    auto l = spdlog::stderr_logger_st("tracelens");
    l->set_pattern("%L %v");
    return l;
  }();
  return logger;
}

void EnsureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void ErrorLine(std::ostream& err, const char* kind, int code, const std::string& message,
               const std::string& key = "") {
  Json line{{"error", kind}, {"exit_code", code}, {"message", message}};
  if (!key.empty()) line["key"] = key;
  err << line.dump() << '\n';
}

unsigned ThreadsFromEnv() {
  const char* env = std::getenv("TRACELENS_THREADS");
  if (env == nullptr) return 0;
  const auto v = ParseUint(env);
  if (!v || *v > 4096) throw ArgumentError("TRACELENS_THREADS must be an integer in [0, 4096]");
  return static_cast<unsigned>(*v);
}

}  // namespace

int RunIngest(const IngestArgs& args, std::ostream& out) {
  ingest::IngestOptions options;
  if (args.colmap) options.columns = ingest::ColumnMaps::Load(*args.colmap);
  const Timestamp start = Timestamp::FromMicros(args.window_start.value_or(0));
  const Timestamp end =
      args.window_end ? Timestamp::FromMicros(*args.window_end) : Timestamp::Max();
  options.window = ingest::TimeWindow::Make(start, end);

  Log()->info("ingesting {}", args.trace_root.string());
  const ingest::IngestResult result = ingest::IngestTrace(args.trace_root, options);
  EnsureDirectory(args.out);

  const fs::path jobs_path = args.out / "jobs.csv";
  ingest::WriteJobTable(jobs_path, result.jobs.records);

  Json tables = Json::object();
  for (const auto& [table, stats] : result.tables) {
    tables[std::string(ingest::TableName(table))] = stats;
    if (stats.stream.rows_skipped > 0) {
      Log()->warn("{}: skipped {} malformed rows", ingest::TableName(table),
                  stats.stream.rows_skipped);
    }
  }
  Json stats{{"jobs", result.jobs.records.size()},
             {"censored", result.jobs.censored},
             {"skipped_no_submit", result.jobs.skipped_no_submit},
             {"window", {{"start", start.micros()}, {"end", end.micros()}}},
             {"tables", tables}};
  const fs::path stats_path = args.out / "ingest_stats.json";
  WriteTextFile(stats_path, stats.dump(2) + "\n");
  Log()->info("{} jobs, {} censored", result.jobs.records.size(), result.jobs.censored);
  out << jobs_path.string() << '\n' << stats_path.string() << '\n';
  return kExitOk;
}

int RunAnalyze(const AnalyzeArgs& args, std::ostream& out) {
  args.options.Validate();
  const std::vector<JobRecord> records = ingest::ReadJobTable(args.jobs);
  std::optional<Json> stats;
  const fs::path stats_path = args.jobs.parent_path() / "ingest_stats.json";
  if (fs::exists(stats_path)) {
    try {
      stats = Json::parse(ReadTextFile(stats_path));
    } catch (const Json::parse_error& e) {
      throw ArgumentError(stats_path.string() + ": " + e.what());
    }
  }
  Log()->info("analyzing {} jobs", records.size());
  const analyze::Analysis analysis =
      analyze::Analyze(records, args.options, stats, stats ? stats_path.string() : "");
  const auto problems = ValidateReport(analysis.report);
  if (!problems.empty()) {
    throw ContractError("report violates its schema: " + problems.front());
  }
  EnsureDirectory(args.out_dir);
  const fs::path report_path = analyze::WriteAnalysis(analysis, args.out_dir);
  out << report_path.string() << '\n';
  if (analysis.failed()) {
    Log()->error("every attempted analysis failed");
    return kExitUsage;
  }
  return kExitOk;
}

int RunGenerate(const GenerateArgs& args, std::ostream& out) {
  const synth::SynthesisSpec spec = synth::SynthesisSpec::Load(args.spec);
  Log()->info("generating {} jobs, seed {}", spec.job_count, spec.seed);
  const synth::SyntheticTrace trace = synth::GenJobStream(spec);
  EnsureDirectory(args.out_dir);
  const synth::Manifest manifest = synth::EmitTrace(trace, spec, args.out_dir);
  if (manifest.clamp_events > 0) {
    Log()->warn("{} resource draws clamped into [0, 1]", manifest.clamp_events);
  }
  out << manifest.manifest_path.string() << '\n';
  return kExitOk;
}

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cluster trace workload characterization"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<unsigned> threads;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Aggregate trace tables into jobs.csv");
  ingest->add_option("--trace-root", ingest_args.trace_root)->required();
  ingest->add_option("--out", ingest_args.out, "Output directory")->required();
  ingest->add_option("--window-start", ingest_args.window_start, "Microseconds");
  ingest->add_option("--window-end", ingest_args.window_end, "Microseconds, exclusive");
  ingest->add_option("--colmap", ingest_args.colmap, "Column mapping file");

  AnalyzeArgs analyze_args;
  auto& opt = analyze_args.options;
  auto* analyze = app.add_subcommand("analyze", "Cluster jobs and fit distributions");
  analyze->add_option("--jobs", analyze_args.jobs)->required();
  analyze->add_option("--out-dir", analyze_args.out_dir)->required();
  analyze->add_option("--k-min", opt.k_min)->capture_default_str();
  analyze->add_option("--k-max", opt.k_max)->capture_default_str();
  analyze->add_option("--restarts", opt.restarts)->capture_default_str();
  analyze->add_option("--seed", opt.seed)->capture_default_str();
  analyze->add_option("--arrival-k", opt.arrival_k, "Fixed k for arrival clustering");
  analyze->add_option("--arrival-threshold", opt.arrival_threshold,
                      "Interarrival threshold in seconds for the burst annotation")
      ->capture_default_str();

  GenerateArgs generate_args;
  auto* generate = app.add_subcommand("generate", "Write a synthetic trace");
  generate->add_option("--spec", generate_args.spec)->required();
  generate->add_option("--out-dir", generate_args.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    ErrorLine(err, "usage", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    SetWorkerThreads(threads ? *threads : ThreadsFromEnv());
    if (ingest->parsed()) return RunIngest(ingest_args, out);
    if (analyze->parsed()) return RunAnalyze(analyze_args, out);
    return RunGenerate(generate_args, out);
  } catch (const ValidationError& e) {
    ErrorLine(err, "validation", kExitUsage, e.what(), e.key());
    return kExitUsage;
  } catch (const ArgumentError& e) {
    ErrorLine(err, "argument", kExitUsage, e.what());
    return kExitUsage;
  } catch (const FitError& e) {
    ErrorLine(err, "fit", kExitUsage, e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    ErrorLine(err, "io", kExitIo, e.what());
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    ErrorLine(err, "io", kExitIo, e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    ErrorLine(err, "internal", kExitInternal, e.what());
    return kExitInternal;
  }
}

}  // namespace tracelens::cli
