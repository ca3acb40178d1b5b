// Synthetic trace generation from workload models: Weibull interarrivals, a
// three-class job mix, per-class resource models and Pareto runtimes. The
// output uses the ingest layout, so a generated trace can be fed straight
// back through ingestion and fitting.

#ifndef TRACELENS_SYNTH_H_
#define TRACELENS_SYNTH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tracelens/io.h"
#include "tracelens/random.h"
#include "tracelens/trace_model.h"

namespace tracelens::synth {

enum class ResourceModel { kBlob, kZipf };
enum class TaskCountModel { kConstant, kGeometric };

struct ClassResources {
  double cpu = 0.0;
  double memory = 0.0;
  // Standard deviation of the Gaussian blob around (cpu, memory).
  double spread = 0.01;
};

struct SynthesisSpec {
  std::uint64_t job_count = 1000;
  std::uint64_t seed = 1;
  // Interarrival times in seconds.
  WeibullParams interarrival{1.5, 2.0};
  // MINOR, MEDIOCRE, MAJOR. The 0.15 / 0.10 split is a default, not data.
  std::array<double, 3> class_mix{0.75, 0.15, 0.10};
  ResourceModel resource_model = ResourceModel::kBlob;
  std::array<ClassResources, 3> resources{{{0.05, 0.05, 0.01},
                                           {0.40, 0.40, 0.02},
                                           {0.90, 0.90, 0.02}}};
  // Zipf mode: magnitude = rank^-exponent with rank ~ Zipf(exponent,
  // support); cpu and memory are the class center scaled by the magnitude.
  double zipf_exponent = 1.2;
  std::uint64_t zipf_support = 1000;
  // Runtimes in seconds: xmin * (1 - u)^(-1 / alpha) times the class
  // multiplier, capped at runtime_cap.
  ParetoTailParams runtime{1.5, 60.0};
  std::array<double, 3> runtime_multiplier{1.0, 4.0, 16.0};
  double runtime_cap = 29.0 * 24.0 * 3600.0;
  TaskCountModel task_model = TaskCountModel::kConstant;
  std::uint32_t tasks_per_job = 1;
  // Geometric model: 1 + Geometric(p) tasks.
  double task_p = 0.5;
  // Part files per table; jobs are sharded by job_id mod shards.
  std::uint32_t shards = 1;
  // Length of one usage row, seconds.
  double usage_window = 300.0;
  JobId first_job_id = 1;

  // Throws ValidationError naming the offending key.
  void Validate() const;

  // Flat `key = value` config, e.g. `interarrival.shape = 1.5`. Unknown
  // keys and bad values raise ValidationError.
  static SynthesisSpec FromEntries(std::span<const KeyValueEntry> entries);
  static SynthesisSpec Load(const std::filesystem::path& path);
  std::string ToConfigText() const;
};

// x_i = scale * (-ln(1 - u_i))^(1 / shape), u_i uniform on [0, 1).
std::vector<double> GenInterarrivals(std::size_t n, WeibullParams weibull, Rng& rng);

// Pareto draw xmin * (1 - u)^(-1 / alpha).
double SampleParetoTail(ParetoTailParams params, Rng& rng);

// Zipf rank in [1, support] with Pr(i) proportional to i^-exponent.
class ZipfSampler {
 public:
  ZipfSampler(double exponent, std::uint64_t support);
  std::uint64_t Sample(Rng& rng) const;

 private:
  std::vector<double> cumulative_;
};

struct SyntheticJob {
  JobRecord record;
  JobClass true_class = JobClass::kMinor;
};

struct SyntheticTrace {
  std::vector<SyntheticJob> jobs;
  // Resource draws clamped into [0, 1].
  std::uint64_t clamp_events = 0;
  // Runtimes cut at runtime_cap.
  std::uint64_t capped_runtimes = 0;
};

// Arrivals are cumulative sums of microsecond-rounded interarrivals, so the
// first arrival equals the first interarrival. Every job is FINISHed;
// runtime is at least 1 microsecond.
SyntheticTrace GenJobStream(const SynthesisSpec& spec);

struct ManifestFile {
  std::string table;
  std::string path;  // relative to the output directory
  std::uint64_t rows = 0;
};

struct Manifest {
  std::vector<ManifestFile> files;
  std::uint64_t jobs = 0;
  std::uint64_t clamp_events = 0;
  std::uint64_t capped_runtimes = 0;
  std::filesystem::path manifest_path;
};

// Writes job_events and task_usage gzip part files plus manifest.json. Per
// job: SUBMIT at arrival, SCHEDULE one microsecond later, FINISH at
// SCHEDULE + runtime; each task gets usage rows tiling [SCHEDULE, FINISH] in
// usage_window steps at the job's cpu and memory rates. Identical inputs
// give byte-identical files.
Manifest EmitTrace(const SyntheticTrace& trace, const SynthesisSpec& spec,
                   const std::filesystem::path& out_dir);

}  // namespace tracelens::synth

#endif  // TRACELENS_SYNTH_H_
