#include "tracelens/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>

#include "json.hpp"

#include "tracelens/errors.h"
#include "tracelens/ingest.h"

namespace tracelens::synth {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 3> kClassKeys = {"minor", "mediocre", "major"};

// Random sub-streams, one per model component, so changing one component's
// configuration leaves the other draws untouched.
enum Stream : std::uint64_t {
  kArrivalStream = 1,
  kClassStream = 2,
  kResourceStream = 3,
  kRuntimeStream = 4,
  kTaskStream = 5,
};

double RequireReal(const KeyValueEntry& e) {
  const auto v = ParseDouble(e.value);
  if (!v || !std::isfinite(*v)) throw ValidationError(e.key, "expected a real number");
  return *v;
}

std::uint64_t RequireUint(const KeyValueEntry& e) {
  const auto v = ParseUint(e.value);
  if (!v) throw ValidationError(e.key, "expected a non-negative integer");
  return *v;
}

std::array<double, 3> RequireTriple(const KeyValueEntry& e) {
  std::vector<std::string_view> parts;
  SplitFields(e.value, ',', &parts);
  if (parts.size() != 3) throw ValidationError(e.key, "expected three comma-separated values");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = ParseDouble(parts[i]);
    if (!v || !std::isfinite(*v)) throw ValidationError(e.key, "expected real numbers");
    out[i] = *v;
  }
  return out;
}

void RequirePositive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(key, "must be positive");
}

std::int64_t ToMicros(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * kMicrosPerSecond));
}

std::string PartName(std::uint32_t shard, std::uint32_t shards) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "part-%05u-of-%05u.csv.gz", shard, shards);
  return buf;
}

void RemoveStaleParts(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  std::vector<fs::path> stale;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("part-", 0) == 0) {
      stale.push_back(entry.path());
    }
  }
  for (const auto& p : stale) fs::remove(p);
}

}  // namespace

void SynthesisSpec::Validate() const {
  if (job_count == 0) throw ValidationError("job_count", "must be positive");
  RequirePositive(interarrival.shape, "interarrival.shape");
  RequirePositive(interarrival.scale, "interarrival.scale");
  double mix_sum = 0.0;
  for (double w : class_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("class_mix", "weights must be non-negative");
    }
    mix_sum += w;
  }
  if (std::abs(mix_sum - 1.0) > 1e-9) {
    throw ValidationError("class_mix", "weights must sum to 1 (got " +
                                           FormatDouble(mix_sum) + ")");
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const std::string prefix = "resource." + std::string(kClassKeys[c]);
    const auto& r = resources[c];
    if (!(r.cpu >= 0.0 && r.cpu <= 1.0)) throw ValidationError(prefix + ".cpu", "must lie in [0, 1]");
    if (!(r.memory >= 0.0 && r.memory <= 1.0)) {
      throw ValidationError(prefix + ".memory", "must lie in [0, 1]");
    }
    RequirePositive(r.spread, prefix + ".spread");
  }
  RequirePositive(zipf_exponent, "resource.zipf.exponent");
  if (zipf_support == 0) throw ValidationError("resource.zipf.support", "must be positive");
  if (zipf_support > 100'000'000) throw ValidationError("resource.zipf.support", "too large");
  RequirePositive(runtime.exponent, "runtime.alpha");
  RequirePositive(runtime.xmin, "runtime.xmin");
  RequirePositive(runtime_cap, "runtime.cap");
  for (double m : runtime_multiplier) RequirePositive(m, "runtime.multiplier");
  if (!(runtime_multiplier[0] < runtime_multiplier[1] &&
        runtime_multiplier[1] < runtime_multiplier[2])) {
    throw ValidationError("runtime.multiplier",
                          "must increase strictly from minor to major");
  }
  if (tasks_per_job == 0) throw ValidationError("tasks.count", "must be positive");
  if (!(task_p > 0.0 && task_p <= 1.0)) throw ValidationError("tasks.p", "must lie in (0, 1]");
  if (shards == 0 || shards > 99999) throw ValidationError("emit.shards", "must lie in [1, 99999]");
  RequirePositive(usage_window, "emit.usage_window");
  if (ToMicros(usage_window) < 1) throw ValidationError("emit.usage_window", "below 1 microsecond");
  if (first_job_id > std::numeric_limits<JobId>::max() - job_count) {
    throw ValidationError("emit.first_job_id", "job ids overflow");
  }
}

SynthesisSpec SynthesisSpec::FromEntries(std::span<const KeyValueEntry> entries) {
  SynthesisSpec s;
  std::map<std::string, std::function<void(const KeyValueEntry&)>, std::less<>> setters;
  setters["job_count"] = [&](const auto& e) { s.job_count = RequireUint(e); };
  setters["seed"] = [&](const auto& e) { s.seed = RequireUint(e); };
  setters["interarrival.shape"] = [&](const auto& e) { s.interarrival.shape = RequireReal(e); };
  setters["interarrival.scale"] = [&](const auto& e) { s.interarrival.scale = RequireReal(e); };
  setters["class_mix"] = [&](const auto& e) { s.class_mix = RequireTriple(e); };
  setters["resource.model"] = [&](const auto& e) {
    if (e.value == "blob") {
      s.resource_model = ResourceModel::kBlob;
    } else if (e.value == "zipf") {
      s.resource_model = ResourceModel::kZipf;
    } else {
      throw ValidationError(e.key, "expected blob or zipf");
    }
  };
  setters["resource.zipf.exponent"] = [&](const auto& e) { s.zipf_exponent = RequireReal(e); };
  setters["resource.zipf.support"] = [&](const auto& e) { s.zipf_support = RequireUint(e); };
  setters["runtime.alpha"] = [&](const auto& e) { s.runtime.exponent = RequireReal(e); };
  setters["runtime.xmin"] = [&](const auto& e) { s.runtime.xmin = RequireReal(e); };
  setters["runtime.cap"] = [&](const auto& e) { s.runtime_cap = RequireReal(e); };
  setters["runtime.multiplier"] = [&](const auto& e) { s.runtime_multiplier = RequireTriple(e); };
  for (std::size_t c = 0; c < 3; ++c) {
    const std::string cls(kClassKeys[c]);
    setters["class_mix." + cls] = [&s, c](const auto& e) { s.class_mix[c] = RequireReal(e); };
    setters["resource." + cls + ".cpu"] = [&s, c](const auto& e) {
      s.resources[c].cpu = RequireReal(e);
    };
    setters["resource." + cls + ".memory"] = [&s, c](const auto& e) {
      s.resources[c].memory = RequireReal(e);
    };
    setters["resource." + cls + ".spread"] = [&s, c](const auto& e) {
      s.resources[c].spread = RequireReal(e);
    };
    setters["runtime.multiplier." + cls] = [&s, c](const auto& e) {
      s.runtime_multiplier[c] = RequireReal(e);
    };
  }
  setters["tasks.model"] = [&](const auto& e) {
    if (e.value == "constant") {
      s.task_model = TaskCountModel::kConstant;
    } else if (e.value == "geometric") {
      s.task_model = TaskCountModel::kGeometric;
    } else {
      throw ValidationError(e.key, "expected constant or geometric");
    }
  };
  setters["tasks.count"] = [&](const auto& e) {
    const auto v = RequireUint(e);
    if (v > 1'000'000) throw ValidationError(e.key, "too large");
    s.tasks_per_job = static_cast<std::uint32_t>(v);
  };
  setters["tasks.p"] = [&](const auto& e) { s.task_p = RequireReal(e); };
  setters["emit.shards"] = [&](const auto& e) {
    const auto v = RequireUint(e);
    if (v == 0 || v > 99999) throw ValidationError(e.key, "must lie in [1, 99999]");
    s.shards = static_cast<std::uint32_t>(v);
  };
  setters["emit.usage_window"] = [&](const auto& e) { s.usage_window = RequireReal(e); };
  setters["emit.first_job_id"] = [&](const auto& e) { s.first_job_id = RequireUint(e); };

  for (const auto& e : entries) {
    const auto it = setters.find(e.key);
    if (it == setters.end()) throw ValidationError(e.key, "unknown key");
    it->second(e);
  }
  s.Validate();
  return s;
}

SynthesisSpec SynthesisSpec::Load(const fs::path& path) {
  const auto entries = LoadKeyValueFile(path);
  return FromEntries(entries);
}

std::string SynthesisSpec::ToConfigText() const {
  std::string out;
  const auto line = [&](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  const auto triple = [](const std::array<double, 3>& v) {
    return FormatDouble(v[0]) + ", " + FormatDouble(v[1]) + ", " + FormatDouble(v[2]);
  };
  line("job_count", std::to_string(job_count));
  line("seed", std::to_string(seed));
  line("interarrival.shape", FormatDouble(interarrival.shape));
  line("interarrival.scale", FormatDouble(interarrival.scale));
  line("class_mix", triple(class_mix));
  line("resource.model", resource_model == ResourceModel::kBlob ? "blob" : "zipf");
  for (std::size_t c = 0; c < 3; ++c) {
    const std::string prefix = "resource." + std::string(kClassKeys[c]);
    line(prefix + ".cpu", FormatDouble(resources[c].cpu));
    line(prefix + ".memory", FormatDouble(resources[c].memory));
    line(prefix + ".spread", FormatDouble(resources[c].spread));
  }
  line("resource.zipf.exponent", FormatDouble(zipf_exponent));
  line("resource.zipf.support", std::to_string(zipf_support));
  line("runtime.alpha", FormatDouble(runtime.exponent));
  line("runtime.xmin", FormatDouble(runtime.xmin));
  line("runtime.cap", FormatDouble(runtime_cap));
  line("runtime.multiplier", triple(runtime_multiplier));
  line("tasks.model", task_model == TaskCountModel::kConstant ? "constant" : "geometric");
  line("tasks.count", std::to_string(tasks_per_job));
  line("tasks.p", FormatDouble(task_p));
  line("emit.shards", std::to_string(shards));
  line("emit.usage_window", FormatDouble(usage_window));
  line("emit.first_job_id", std::to_string(first_job_id));
  return out;
}

std::vector<double> GenInterarrivals(std::size_t n, WeibullParams weibull, Rng& rng) {
  RequirePositive(weibull.shape, "interarrival.shape");
  RequirePositive(weibull.scale, "interarrival.scale");
  std::vector<double> out(n);
  const double inv_shape = 1.0 / weibull.shape;
  for (auto& x : out) {
    const double u = rng.Uniform();
    x = weibull.scale * std::pow(-std::log1p(-u), inv_shape);
  }
  return out;
}

double SampleParetoTail(ParetoTailParams params, Rng& rng) {
  const double u = rng.Uniform();
  return params.xmin * std::pow(1.0 - u, -1.0 / params.exponent);
}

ZipfSampler::ZipfSampler(double exponent, std::uint64_t support) {
  if (!(exponent > 0.0) || support == 0) {
    throw ArgumentError("Zipf sampler needs exponent > 0 and support >= 1");
  }
  cumulative_.resize(support);
  double total = 0.0;
  for (std::uint64_t i = 0; i < support; ++i) {
    total += std::pow(static_cast<double>(i + 1), -exponent);
    cumulative_[i] = total;
  }
  for (double& c : cumulative_) c /= total;
}

std::uint64_t ZipfSampler::Sample(Rng& rng) const {
  const double u = rng.Uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = static_cast<std::uint64_t>(it - cumulative_.begin());
  return std::min<std::uint64_t>(idx, cumulative_.size() - 1) + 1;
}

SyntheticTrace GenJobStream(const SynthesisSpec& spec) {
  spec.Validate();
  const Rng root(spec.seed);
  Rng arrival_rng = root.Fork(kArrivalStream);
  Rng class_rng = root.Fork(kClassStream);
  Rng resource_rng = root.Fork(kResourceStream);
  Rng runtime_rng = root.Fork(kRuntimeStream);
  Rng task_rng = root.Fork(kTaskStream);

  std::unique_ptr<ZipfSampler> zipf;
  if (spec.resource_model == ResourceModel::kZipf) {
    zipf = std::make_unique<ZipfSampler>(spec.zipf_exponent, spec.zipf_support);
  }

  const std::vector<double> gaps = GenInterarrivals(spec.job_count, spec.interarrival,
                                                    arrival_rng);
  SyntheticTrace trace;
  trace.jobs.reserve(spec.job_count);
  std::int64_t arrival = 0;
  const auto clamp = [&](double v) {
    if (v < 0.0 || v > 1.0) {
      ++trace.clamp_events;
      return std::clamp(v, 0.0, 1.0);
    }
    return v;
  };
  for (std::uint64_t i = 0; i < spec.job_count; ++i) {
    arrival += ToMicros(gaps[i]);

    const double u = class_rng.Uniform();
    std::size_t cls = 2;
    if (u < spec.class_mix[0]) {
      cls = 0;
    } else if (u < spec.class_mix[0] + spec.class_mix[1]) {
      cls = 1;
    }
    const ClassResources& res = spec.resources[cls];
    double cpu = 0.0;
    double memory = 0.0;
    if (zipf) {
      const double magnitude =
          std::pow(static_cast<double>(zipf->Sample(resource_rng)), -spec.zipf_exponent);
      cpu = res.cpu * magnitude;
      memory = res.memory * magnitude;
    } else {
      cpu = res.cpu + res.spread * resource_rng.Normal();
      memory = res.memory + res.spread * resource_rng.Normal();
    }

    double runtime_s = SampleParetoTail(spec.runtime, runtime_rng) * spec.runtime_multiplier[cls];
    if (runtime_s > spec.runtime_cap) {
      runtime_s = spec.runtime_cap;
      ++trace.capped_runtimes;
    }

    std::uint32_t tasks = spec.tasks_per_job;
    if (spec.task_model == TaskCountModel::kGeometric) {
      const double v = spec.task_p >= 1.0
                           ? 0.0
                           : std::floor(std::log1p(-task_rng.Uniform()) /
                                        std::log1p(-spec.task_p));
      tasks = 1 + static_cast<std::uint32_t>(std::min(v, 1e6));
    }

    SyntheticJob job;
    job.true_class = static_cast<JobClass>(cls);
    job.record.job_id = spec.first_job_id + i;
    job.record.arrival_time = Timestamp::FromMicros(arrival);
    job.record.runtime = std::max<std::int64_t>(1, ToMicros(runtime_s));
    job.record.mean_cpu = clamp(cpu);
    job.record.mean_memory = clamp(memory);
    job.record.task_count = tasks;
    job.record.terminal_event = TerminalEvent::kFinish;
    trace.jobs.push_back(job);
  }
  return trace;
}

Manifest EmitTrace(const SyntheticTrace& trace, const SynthesisSpec& spec,
                   const fs::path& out_dir) {
  spec.Validate();
  const fs::path events_dir = out_dir / "job_events";
  const fs::path usage_dir = out_dir / "task_usage";
  std::error_code ec;
  fs::create_directories(events_dir, ec);
  if (ec) throw IoError("cannot create " + events_dir.string() + ": " + ec.message());
  fs::create_directories(usage_dir, ec);
  if (ec) throw IoError("cannot create " + usage_dir.string() + ": " + ec.message());
  RemoveStaleParts(events_dir);
  RemoveStaleParts(usage_dir);

  const std::uint32_t shards = spec.shards;
  std::vector<std::unique_ptr<LineWriter>> events;
  std::vector<std::unique_ptr<LineWriter>> usage;
  for (std::uint32_t s = 0; s < shards; ++s) {
    events.push_back(std::make_unique<LineWriter>(events_dir / PartName(s, shards), true));
    usage.push_back(std::make_unique<LineWriter>(usage_dir / PartName(s, shards), true));
  }

  const std::int64_t window = ToMicros(spec.usage_window);
  for (const auto& job : trace.jobs) {
    const JobRecord& r = job.record;
    if (!r.runtime) throw ContractError("synthetic job without runtime");
    const std::size_t shard = static_cast<std::size_t>(r.job_id % shards);
    const std::int64_t submit = r.arrival_time.micros();
    const std::int64_t schedule = submit + 1;
    const std::int64_t finish = schedule + *r.runtime;

    JobEvent e;
    e.job_id = r.job_id;
    for (const auto& [t, type] : {std::pair{submit, EventType::kSubmit},
                                  std::pair{schedule, EventType::kSchedule},
                                  std::pair{finish, EventType::kFinish}}) {
      e.time = Timestamp::FromMicros(t);
      e.event_type = type;
      events[shard]->Write(ingest::FormatRow(e));
    }

    TaskUsage u;
    u.job_id = r.job_id;
    u.cpu_rate = r.mean_cpu;
    u.canonical_memory = r.mean_memory;
    u.assigned_memory = r.mean_memory;
    for (std::uint32_t task = 0; task < r.task_count; ++task) {
      u.task_index = task;
      for (std::int64_t start = schedule; start < finish; start += window) {
        u.start_time = Timestamp::FromMicros(start);
        u.end_time = Timestamp::FromMicros(std::min(start + window, finish));
        usage[shard]->Write(ingest::FormatRow(u));
      }
    }
  }

  Manifest manifest;
  manifest.jobs = trace.jobs.size();
  manifest.clamp_events = trace.clamp_events;
  manifest.capped_runtimes = trace.capped_runtimes;
  for (std::uint32_t s = 0; s < shards; ++s) {
    events[s]->Close();
    usage[s]->Close();
    manifest.files.push_back({"job_events", "job_events/" + PartName(s, shards),
                              events[s]->lines()});
  }
  for (std::uint32_t s = 0; s < shards; ++s) {
    manifest.files.push_back({"task_usage", "task_usage/" + PartName(s, shards),
                              usage[s]->lines()});
  }

  nlohmann::ordered_json doc;
  doc["seed"] = spec.seed;
  doc["jobs"] = manifest.jobs;
  doc["clamp_events"] = manifest.clamp_events;
  doc["capped_runtimes"] = manifest.capped_runtimes;
  doc["files"] = nlohmann::ordered_json::array();
  for (const auto& f : manifest.files) {
    doc["files"].push_back({{"table", f.table}, {"path", f.path}, {"rows", f.rows}});
  }
  manifest.manifest_path = out_dir / "manifest.json";
  WriteTextFile(manifest.manifest_path, doc.dump(2) + "\n");
  return manifest;
}

}  // namespace tracelens::synth
