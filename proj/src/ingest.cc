#include "tracelens/ingest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>

#include "tracelens/parallel.h"

namespace tracelens::ingest {

namespace fs = std::filesystem;

namespace {

// Default column orders of the clusterdata-2011-2 tables.
constexpr std::array<std::string_view, 8> kJobEventColumns = {
    "timestamp", "missing_info", "job_id", "event_type",
    "user", "scheduling_class", "job_name", "logical_job_name"};

constexpr std::array<std::string_view, 13> kTaskEventColumns = {
    "timestamp", "missing_info", "job_id", "task_index", "machine_id",
    "event_type", "user", "scheduling_class", "priority", "cpu_request",
    "memory_request", "disk_request", "different_machines"};

constexpr std::array<std::string_view, 20> kTaskUsageColumns = {
    "start_time", "end_time", "job_id", "task_index", "machine_id",
    "cpu_rate", "canonical_memory", "assigned_memory", "unmapped_page_cache",
    "total_page_cache", "max_memory", "mean_disk_io_time",
    "mean_local_disk_space", "max_cpu_rate", "max_disk_io_time", "cpi", "mai",
    "sample_portion", "aggregation_type", "sampled_cpu_usage"};

constexpr std::array<std::string_view, 6> kMachineEventColumns = {
    "timestamp", "machine_id", "event_type",
    "platform_id", "cpu_capacity", "memory_capacity"};

std::span<const std::string_view> ColumnsOf(Table table) {
  switch (table) {
    case Table::kJobEvents:
      return kJobEventColumns;
    case Table::kTaskEvents:
      return kTaskEventColumns;
    case Table::kTaskUsage:
      return kTaskUsageColumns;
    case Table::kMachineEvents:
      return kMachineEventColumns;
  }
  return {};
}

// Field accessor; columns past the end of a short row read as empty.
class Fields {
 public:
  Fields(std::span<const std::string_view> fields, const ColumnMap& map,
         std::string* error)
      : fields_(fields), map_(map), error_(error) {}

  std::string_view Raw(std::string_view name) const {
    const int idx = map_.Index(name);
    if (idx < 0 || static_cast<std::size_t>(idx) >= fields_.size()) return {};
    return Trim(fields_[idx]);
  }

  bool RequiredTime(std::string_view name, Timestamp* out) const {
    const auto v = ParseInt(Raw(name));
    if (!v) return Fail(name, "missing or non-integer timestamp");
    if (*v < 0) return Fail(name, "negative timestamp");
    *out = Timestamp::FromMicros(*v);
    return true;
  }

  bool RequiredUint(std::string_view name, std::uint64_t* out) const {
    const auto v = ParseUint(Raw(name));
    if (!v) return Fail(name, "missing or invalid unsigned integer");
    *out = *v;
    return true;
  }

  bool RequiredInt(std::string_view name, std::int64_t* out) const {
    const auto v = ParseInt(Raw(name));
    if (!v) return Fail(name, "missing or invalid integer");
    *out = *v;
    return true;
  }

  bool OptionalUint(std::string_view name, std::optional<std::uint64_t>* out) const {
    const std::string_view raw = Raw(name);
    if (raw.empty()) {
      out->reset();
      return true;
    }
    const auto v = ParseUint(raw);
    if (!v) return Fail(name, "invalid unsigned integer");
    *out = *v;
    return true;
  }

  // Optional real in [lo, hi].
  bool OptionalReal(std::string_view name, double lo, double hi,
                    std::optional<double>* out) const {
    const std::string_view raw = Raw(name);
    if (raw.empty() || !map_.Has(name)) {
      out->reset();
      return true;
    }
    const auto v = ParseDouble(raw);
    if (!v || !std::isfinite(*v)) return Fail(name, "invalid number");
    if (*v < lo || *v > hi) return Fail(name, "value out of range");
    *out = *v;
    return true;
  }

  bool EventCode(std::string_view name, EventType* out) const {
    const auto v = ParseInt(Raw(name));
    if (!v) return Fail(name, "missing event code");
    const auto type = EventTypeFromCode(*v);
    if (!type) return Fail(name, "unknown event code " + std::to_string(*v));
    *out = *type;
    return true;
  }

  bool Fail(std::string_view name, const std::string& what) const {
    *error_ = std::string(name) + ": " + what;
    return false;
  }

 private:
  std::span<const std::string_view> fields_;
  const ColumnMap& map_;
  std::string* error_;
};

// Trace resource values are normalized to the largest machine.
constexpr double kFractionMax = 1.0;
// Non-normalized usage columns only need to be non-negative; the cap keeps
// them inside ExactWeightedSum's range.
constexpr double kUsageMax = 255.0;

void AppendOptional(std::string* out, const std::optional<double>& v) {
  if (v) AppendDouble(out, *v);
}

template <typename T>
void AppendOptionalInt(std::string* out, const std::optional<T>& v) {
  if (v) *out += std::to_string(*v);
}

void MinTime(Timestamp* slot, Timestamp t) {
  if (t.is_missing()) return;
  if (slot->is_missing() || t < *slot) *slot = t;
}

bool IsTerminal(EventType t) {
  return t == EventType::kFail || t == EventType::kFinish ||
         t == EventType::kKill || t == EventType::kLost;
}

TerminalEvent ToTerminal(EventType t) {
  switch (t) {
    case EventType::kFinish:
      return TerminalEvent::kFinish;
    case EventType::kFail:
      return TerminalEvent::kFail;
    case EventType::kKill:
      return TerminalEvent::kKill;
    case EventType::kLost:
      return TerminalEvent::kLost;
    default:
      throw ContractError("not a terminal event");
  }
}

bool IsPartFile(const fs::path& p) {
  const std::string name = p.filename().string();
  if (name.rfind("part-", 0) != 0) return false;
  const auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".csv") || ends_with(".csv.gz");
}

}  // namespace

std::string_view TableName(Table table) {
  switch (table) {
    case Table::kJobEvents:
      return "job_events";
    case Table::kTaskEvents:
      return "task_events";
    case Table::kTaskUsage:
      return "task_usage";
    case Table::kMachineEvents:
      return "machine_events";
  }
  return "unknown";
}

ColumnMap ColumnMap::Defaults(Table table) {
  ColumnMap map(table);
  const auto cols = ColumnsOf(table);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    map.columns_.emplace(std::string(cols[i]), static_cast<int>(i));
  }
  return map;
}

int ColumnMap::Index(std::string_view field) const {
  const auto it = columns_.find(field);
  return it == columns_.end() ? -1 : it->second;
}

void ColumnMap::Set(std::string_view field, int index) {
  const auto it = columns_.find(field);
  if (it == columns_.end()) {
    throw ValidationError(std::string(TableName(table_)) + "." + std::string(field),
                          "unknown field");
  }
  if (index < 0) {
    throw ValidationError(std::string(TableName(table_)) + "." + std::string(field),
                          "column index must be non-negative");
  }
  it->second = index;
}

bool ColumnMap::Has(std::string_view field) const { return Index(field) >= 0; }

const ColumnMap& ColumnMaps::For(Table table) const {
  switch (table) {
    case Table::kJobEvents:
      return job_events;
    case Table::kTaskEvents:
      return task_events;
    case Table::kTaskUsage:
      return task_usage;
    case Table::kMachineEvents:
      return machine_events;
  }
  throw ContractError("unknown table");
}

ColumnMap& ColumnMaps::For(Table table) {
  return const_cast<ColumnMap&>(std::as_const(*this).For(table));
}

ColumnMaps ColumnMaps::FromEntries(std::span<const KeyValueEntry> entries) {
  ColumnMaps maps;
  for (const auto& e : entries) {
    const auto index = ParseInt(e.value);
    if (!index || *index < 0 || *index > 4096) {
      throw ValidationError(e.key, "expected a zero-based column index");
    }
    const auto dot = e.key.find('.');
    if (dot != std::string::npos) {
      const std::string_view table_name = std::string_view(e.key).substr(0, dot);
      const std::string_view field = std::string_view(e.key).substr(dot + 1);
      bool matched = false;
      for (Table t : kAllTables) {
        if (TableName(t) == table_name) {
          maps.For(t).Set(field, static_cast<int>(*index));
          matched = true;
        }
      }
      if (!matched) throw ValidationError(e.key, "unknown table");
      continue;
    }
    bool matched = false;
    for (Table t : kAllTables) {
      if (maps.For(t).Has(e.key)) {
        maps.For(t).Set(e.key, static_cast<int>(*index));
        matched = true;
      }
    }
    if (!matched) throw ValidationError(e.key, "unknown field");
  }
  return maps;
}

ColumnMaps ColumnMaps::Load(const fs::path& path) {
  const auto entries = LoadKeyValueFile(path);
  return FromEntries(entries);
}

bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              JobEvent* out, std::string* error) {
  Fields f(fields, map, error);
  std::int64_t sched = 0;
  if (!f.RequiredTime("timestamp", &out->time) ||
      !f.RequiredUint("job_id", &out->job_id) ||
      !f.EventCode("event_type", &out->event_type) ||
      !f.RequiredInt("scheduling_class", &sched)) {
    return false;
  }
  if (sched < 0 || sched > 3) return f.Fail("scheduling_class", "expected 0-3");
  out->scheduling_class = static_cast<std::uint8_t>(sched);
  out->user = std::string(f.Raw("user"));
  out->job_name = std::string(f.Raw("job_name"));
  return true;
}

bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              TaskEvent* out, std::string* error) {
  Fields f(fields, map, error);
  if (!f.RequiredTime("timestamp", &out->time) ||
      !f.RequiredUint("job_id", &out->job_id) ||
      !f.RequiredInt("task_index", &out->task_index) ||
      !f.OptionalUint("machine_id", &out->machine_id) ||
      !f.EventCode("event_type", &out->event_type) ||
      !f.RequiredInt("priority", &out->priority) ||
      !f.OptionalReal("cpu_request", 0.0, kFractionMax, &out->cpu_request) ||
      !f.OptionalReal("memory_request", 0.0, kFractionMax, &out->memory_request) ||
      !f.OptionalReal("disk_request", 0.0, kFractionMax, &out->disk_request)) {
    return false;
  }
  if (out->task_index < 0) return f.Fail("task_index", "negative");
  if (out->priority < 0) return f.Fail("priority", "negative");
  return true;
}

bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              TaskUsage* out, std::string* error) {
  Fields f(fields, map, error);
  if (!f.RequiredTime("start_time", &out->start_time) ||
      !f.RequiredTime("end_time", &out->end_time) ||
      !f.RequiredUint("job_id", &out->job_id) ||
      !f.RequiredInt("task_index", &out->task_index) ||
      !f.OptionalUint("machine_id", &out->machine_id) ||
      !f.OptionalReal("cpu_rate", 0.0, kFractionMax, &out->cpu_rate) ||
      !f.OptionalReal("canonical_memory", 0.0, kFractionMax, &out->canonical_memory) ||
      !f.OptionalReal("assigned_memory", 0.0, kUsageMax, &out->assigned_memory) ||
      !f.OptionalReal("total_page_cache", 0.0, kUsageMax, &out->page_cache_total) ||
      !f.OptionalReal("mean_disk_io_time", 0.0, kUsageMax, &out->disk_io_time) ||
      !f.OptionalReal("mean_local_disk_space", 0.0, kUsageMax, &out->local_disk_space) ||
      !f.OptionalReal("cpi", 0.0, std::numeric_limits<double>::max(), &out->cpi) ||
      !f.OptionalReal("mai", 0.0, std::numeric_limits<double>::max(), &out->mai)) {
    return false;
  }
  if (out->task_index < 0) return f.Fail("task_index", "negative");
  if (!(out->start_time < out->end_time)) {
    return f.Fail("end_time", "window must satisfy start_time < end_time");
  }
  return true;
}

bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              MachineEvent* out, std::string* error) {
  Fields f(fields, map, error);
  std::int64_t code = 0;
  if (!f.RequiredTime("timestamp", &out->time) ||
      !f.RequiredUint("machine_id", &out->machine_id) ||
      !f.RequiredInt("event_type", &code) ||
      !f.OptionalReal("cpu_capacity", 0.0, kFractionMax, &out->cpu_capacity) ||
      !f.OptionalReal("memory_capacity", 0.0, kFractionMax, &out->memory_capacity)) {
    return false;
  }
  const auto type = MachineEventTypeFromCode(code);
  if (!type) return f.Fail("event_type", "unknown event code " + std::to_string(code));
  out->event_type = *type;
  out->platform = std::string(f.Raw("platform_id"));
  return true;
}

std::string FormatRow(const JobEvent& r) {
  std::string s = std::to_string(r.time.micros());
  s += ",,";
  s += std::to_string(r.job_id);
  s += ',';
  s += std::to_string(static_cast<int>(r.event_type));
  s += ',';
  s += r.user;
  s += ',';
  s += std::to_string(r.scheduling_class);
  s += ',';
  s += r.job_name;
  s += ',';
  return s;
}

std::string FormatRow(const TaskEvent& r) {
  std::string s = std::to_string(r.time.micros());
  s += ",,";
  s += std::to_string(r.job_id);
  s += ',';
  s += std::to_string(r.task_index);
  s += ',';
  AppendOptionalInt(&s, r.machine_id);
  s += ',';
  s += std::to_string(static_cast<int>(r.event_type));
  s += ",,0,";
  s += std::to_string(r.priority);
  s += ',';
  AppendOptional(&s, r.cpu_request);
  s += ',';
  AppendOptional(&s, r.memory_request);
  s += ',';
  AppendOptional(&s, r.disk_request);
  s += ',';
  return s;
}

std::string FormatRow(const TaskUsage& r) {
  std::string s = std::to_string(r.start_time.micros());
  s += ',';
  s += std::to_string(r.end_time.micros());
  s += ',';
  s += std::to_string(r.job_id);
  s += ',';
  s += std::to_string(r.task_index);
  s += ',';
  AppendOptionalInt(&s, r.machine_id);
  s += ',';
  AppendOptional(&s, r.cpu_rate);
  s += ',';
  AppendOptional(&s, r.canonical_memory);
  s += ',';
  AppendOptional(&s, r.assigned_memory);
  s += ",,";  // unmapped_page_cache
  AppendOptional(&s, r.page_cache_total);
  s += ",,";  // max_memory
  AppendOptional(&s, r.disk_io_time);
  s += ',';
  AppendOptional(&s, r.local_disk_space);
  s += ",,,";  // max_cpu_rate, max_disk_io_time
  AppendOptional(&s, r.cpi);
  s += ',';
  AppendOptional(&s, r.mai);
  s += ",,,";
  return s;
}

std::string FormatRow(const MachineEvent& r) {
  std::string s = std::to_string(r.time.micros());
  s += ',';
  s += std::to_string(r.machine_id);
  s += ',';
  s += std::to_string(static_cast<int>(r.event_type));
  s += ',';
  s += r.platform;
  s += ',';
  AppendOptional(&s, r.cpu_capacity);
  s += ',';
  AppendOptional(&s, r.memory_capacity);
  return s;
}

std::vector<fs::path> ListPartFiles(const fs::path& root, Table table) {
  const fs::path dir = root / TableName(table);
  std::vector<fs::path> files;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && IsPartFile(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

TimeWindow TimeWindow::Make(Timestamp start, Timestamp end) {
  if (start.is_missing() || end.is_missing()) {
    throw ArgumentError("window bounds must be valid timestamps");
  }
  if (end < start) throw ArgumentError("window start must not exceed window end");
  return TimeWindow{start, end};
}

void ExactWeightedSum::Add(double value, std::int64_t weight) {
  constexpr int kFractionBits = 56;
  if (!std::isfinite(value) || value < 0.0 || value >= 256.0) {
    throw ContractError("weighted value out of range");
  }
  if (weight < 0 || weight >= (std::int64_t{1} << 46)) {
    throw ContractError("weight out of range");
  }
  if (value == 0.0 || weight == 0) return;
  int exponent = 0;
  const double fraction = std::frexp(value, &exponent);
  const auto mantissa = static_cast<std::int64_t>(std::ldexp(fraction, 53));
  __int128 product = static_cast<__int128>(mantissa) * weight;
  const int shift = exponent - 53 + kFractionBits;
  if (shift >= 0) {
    product <<= shift;
  } else {
    product >>= -shift;
  }
  acc_ += product;
}

double ExactWeightedSum::Value() const {
  return std::ldexp(static_cast<double>(acc_), -56);
}

void JobTableBuilder::ResourceAccumulator::Add(double value, std::int64_t w) {
  if (w <= 0) return;
  if (weight == 0) {
    min = max = value;
  } else {
    min = std::min(min, value);
    max = std::max(max, value);
  }
  sum.Add(value, w);
  weight += w;
}

void JobTableBuilder::ResourceAccumulator::Merge(const ResourceAccumulator& o) {
  if (o.weight == 0) return;
  if (weight == 0) {
    *this = o;
    return;
  }
  min = std::min(min, o.min);
  max = std::max(max, o.max);
  sum.Merge(o.sum);
  weight += o.weight;
}

double JobTableBuilder::ResourceAccumulator::Mean() const {
  if (weight == 0) return 0.0;
  // A constant series averages to itself exactly.
  if (min == max) return min;
  const double mean = sum.Value() / static_cast<double>(weight);
  return std::clamp(mean, min, max);
}

void JobTableBuilder::JobState::Merge(const JobState& o) {
  has_event = has_event || o.has_event;
  MinTime(&first_submit, o.first_submit);
  MinTime(&first_schedule, o.first_schedule);
  if (!o.first_terminal.is_missing()) {
    if (first_terminal.is_missing() || o.first_terminal < first_terminal ||
        (o.first_terminal == first_terminal && o.terminal_type < terminal_type)) {
      first_terminal = o.first_terminal;
      terminal_type = o.terminal_type;
    }
  }
  cpu.Merge(o.cpu);
  memory.Merge(o.memory);
  if (!o.tasks.empty()) {
    std::vector<std::int64_t> merged;
    merged.reserve(tasks.size() + o.tasks.size());
    std::set_union(tasks.begin(), tasks.end(), o.tasks.begin(), o.tasks.end(),
                   std::back_inserter(merged));
    tasks = std::move(merged);
  }
}

void JobTableBuilder::Add(const JobEvent& event) {
  JobState& job = jobs_[event.job_id];
  job.has_event = true;
  switch (event.event_type) {
    case EventType::kSubmit:
      MinTime(&job.first_submit, event.time);
      break;
    case EventType::kSchedule:
      MinTime(&job.first_schedule, event.time);
      break;
    default:
      if (IsTerminal(event.event_type)) {
        // Earliest terminal wins; equal times resolve to the lower code.
        if (job.first_terminal.is_missing() || event.time < job.first_terminal ||
            (event.time == job.first_terminal &&
             event.event_type < job.terminal_type)) {
          job.first_terminal = event.time;
          job.terminal_type = event.event_type;
        }
      }
      break;
  }
}

void JobTableBuilder::Add(const TaskUsage& usage) {
  JobState& job = jobs_[usage.job_id];
  const Duration w = usage.duration();
  if (usage.cpu_rate) job.cpu.Add(*usage.cpu_rate, w);
  if (usage.canonical_memory) job.memory.Add(*usage.canonical_memory, w);
  const auto it = std::lower_bound(job.tasks.begin(), job.tasks.end(), usage.task_index);
  if (it == job.tasks.end() || *it != usage.task_index) {
    job.tasks.insert(it, usage.task_index);
  }
}

void JobTableBuilder::Merge(const JobTableBuilder& other) {
  for (const auto& [id, state] : other.jobs_) jobs_[id].Merge(state);
}

JobTable JobTableBuilder::Finish() const {
  JobTable table;
  table.records.reserve(jobs_.size());
  for (const auto& [id, job] : jobs_) {
    // Jobs seen only in usage rows have no job_events entry.
    if (!job.has_event) continue;
    if (job.first_submit.is_missing()) {
      ++table.skipped_no_submit;
      continue;
    }
    JobRecord r;
    r.job_id = id;
    r.arrival_time = job.first_submit;
    if (job.first_terminal.is_missing()) {
      r.terminal_event = TerminalEvent::kCensored;
      ++table.censored;
    } else {
      r.terminal_event = ToTerminal(job.terminal_type);
      if (r.terminal_event != TerminalEvent::kLost &&
          !job.first_schedule.is_missing() &&
          job.first_schedule < job.first_terminal) {
        r.runtime = job.first_terminal.micros() - job.first_schedule.micros();
      }
    }
    r.mean_cpu = job.cpu.Mean();
    r.mean_memory = job.memory.Mean();
    r.task_count = static_cast<std::uint32_t>(job.tasks.size());
    table.records.push_back(r);
  }
  std::sort(table.records.begin(), table.records.end(),
            [](const JobRecord& a, const JobRecord& b) { return a.job_id < b.job_id; });
  return table;
}

JobTable BuildJobTable(std::span<const JobEvent> job_events,
                       std::span<const TaskUsage> task_usage) {
  JobTableBuilder builder;
  for (const auto& e : job_events) builder.Add(e);
  for (const auto& u : task_usage) builder.Add(u);
  return builder.Finish();
}

std::vector<Duration> InterarrivalTimes(std::span<const JobRecord> records) {
  if (records.size() < 2) {
    throw ArgumentError("interarrival times need at least 2 records");
  }
  std::vector<std::int64_t> arrivals;
  arrivals.reserve(records.size());
  for (const auto& r : records) arrivals.push_back(r.arrival_time.micros());
  std::sort(arrivals.begin(), arrivals.end());
  std::vector<Duration> gaps(arrivals.size() - 1);
  for (std::size_t i = 1; i < arrivals.size(); ++i) {
    gaps[i - 1] = arrivals[i] - arrivals[i - 1];
  }
  return gaps;
}

namespace {

void Accumulate(StreamStats* into, const StreamStats& from) {
  into->rows_read += from.rows_read;
  into->rows_emitted += from.rows_emitted;
  into->rows_skipped += from.rows_skipped;
  for (const auto& e : from.sample_errors) {
    if (into->sample_errors.size() < 5) into->sample_errors.push_back(e);
  }
}

template <typename Row>
void ScanFile(const fs::path& file, const IngestOptions& options,
              JobTableBuilder* builder, TableStats* stats) {
  RowStream<Row> stream({file}, options.columns.For(TableOf<Row>::value),
                        options.buffer_bytes);
  WindowFilter<RowStream<Row>, Row> filtered(&stream, options.window);
  Row row;
  while (filtered.Next(&row)) {
    if constexpr (std::is_same_v<Row, JobEvent> || std::is_same_v<Row, TaskUsage>) {
      builder->Add(row);
    }
  }
  Accumulate(&stats->stream, stream.stats());
  stats->rows_filtered += filtered.filtered();
}

}  // namespace

IngestResult IngestTrace(const fs::path& root, const IngestOptions& options) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("trace root is not a readable directory: " + root.string());
  }
  struct Work {
    Table table;
    fs::path file;
  };
  std::vector<Work> work;
  IngestResult result;
  for (Table t : kAllTables) {
    const bool needed = t == Table::kJobEvents || t == Table::kTaskUsage ||
                        options.scan_auxiliary_tables;
    auto files = ListPartFiles(root, t);
    result.tables[t].stream.files = needed ? files.size() : 0;
    if (!needed) continue;
    for (auto& f : files) work.push_back({t, std::move(f)});
  }

  // One builder per slot, so peak memory is O(jobs x slots), not O(files).
  const std::size_t slots =
      std::max<std::size_t>(1, std::min<std::size_t>(WorkerThreads(), work.size()));
  std::vector<JobTableBuilder> builders(slots);
  std::vector<std::map<Table, TableStats>> slot_stats(slots);
  ParallelFor(slots, [&](std::size_t slot) {
    for (std::size_t i = slot; i < work.size(); i += slots) {
      const Work& w = work[i];
      TableStats& stats = slot_stats[slot][w.table];
      switch (w.table) {
        case Table::kJobEvents:
          ScanFile<JobEvent>(w.file, options, &builders[slot], &stats);
          break;
        case Table::kTaskEvents:
          ScanFile<TaskEvent>(w.file, options, &builders[slot], &stats);
          break;
        case Table::kTaskUsage:
          ScanFile<TaskUsage>(w.file, options, &builders[slot], &stats);
          break;
        case Table::kMachineEvents:
          ScanFile<MachineEvent>(w.file, options, &builders[slot], &stats);
          break;
      }
    }
  });

  for (std::size_t s = 1; s < slots; ++s) {
    builders[0].Merge(builders[s]);
    builders[s] = JobTableBuilder();
  }
  for (const auto& per_slot : slot_stats) {
    for (const auto& [table, stats] : per_slot) {
      Accumulate(&result.tables[table].stream, stats.stream);
      result.tables[table].rows_filtered += stats.rows_filtered;
    }
  }
  result.jobs = builders[0].Finish();
  return result;
}

std::string JobTableHeader() {
  return "job_id,arrival_time,runtime,mean_cpu,mean_memory,task_count,terminal_event";
}

std::string FormatJobRecord(const JobRecord& r) {
  std::string s = std::to_string(r.job_id);
  s += ',';
  s += std::to_string(r.arrival_time.micros());
  s += ',';
  if (r.runtime) s += std::to_string(*r.runtime);
  s += ',';
  AppendDouble(&s, r.mean_cpu);
  s += ',';
  AppendDouble(&s, r.mean_memory);
  s += ',';
  s += std::to_string(r.task_count);
  s += ',';
  s += TerminalEventName(r.terminal_event);
  return s;
}

JobRecord ParseJobRecord(std::string_view line) {
  std::vector<std::string_view> f;
  SplitFields(line, ',', &f);
  if (f.size() != 7) {
    throw ArgumentError("expected 7 fields, found " + std::to_string(f.size()));
  }
  JobRecord r;
  const auto id = ParseUint(f[0]);
  if (!id) throw ArgumentError("invalid job_id");
  r.job_id = *id;
  const auto arrival = ParseInt(f[1]);
  if (!arrival || *arrival < 0) throw ArgumentError("invalid arrival_time");
  r.arrival_time = Timestamp::FromMicros(*arrival);
  if (!Trim(f[2]).empty()) {
    const auto runtime = ParseInt(f[2]);
    if (!runtime || *runtime <= 0) throw ArgumentError("invalid runtime");
    r.runtime = *runtime;
  }
  const auto cpu = ParseDouble(f[3]);
  const auto mem = ParseDouble(f[4]);
  if (!cpu || !std::isfinite(*cpu) || *cpu < 0) throw ArgumentError("invalid mean_cpu");
  if (!mem || !std::isfinite(*mem) || *mem < 0) throw ArgumentError("invalid mean_memory");
  r.mean_cpu = *cpu;
  r.mean_memory = *mem;
  const auto tasks = ParseUint(f[5]);
  if (!tasks || *tasks > std::numeric_limits<std::uint32_t>::max()) {
    throw ArgumentError("invalid task_count");
  }
  r.task_count = static_cast<std::uint32_t>(*tasks);
  const auto terminal = TerminalEventFromName(Trim(f[6]));
  if (!terminal) throw ArgumentError("invalid terminal_event");
  r.terminal_event = *terminal;
  const bool expects_runtime = r.terminal_event == TerminalEvent::kFinish ||
                               r.terminal_event == TerminalEvent::kFail ||
                               r.terminal_event == TerminalEvent::kKill;
  if (r.runtime && !expects_runtime) {
    throw ArgumentError("runtime present for a job without FINISH/FAIL/KILL");
  }
  return r;
}

void WriteJobTable(const fs::path& path, std::span<const JobRecord> records) {
  LineWriter out(path, /*gzip=*/false);
  out.Write(JobTableHeader());
  for (const auto& r : records) out.Write(FormatJobRecord(r));
  out.Close();
}

std::vector<JobRecord> ReadJobTable(const fs::path& path) {
  LineReader in(path);
  std::string_view line;
  if (!in.Next(&line) || Trim(line) != JobTableHeader()) {
    throw ArgumentError(path.string() + ": missing or unexpected header");
  }
  std::vector<JobRecord> records;
  std::size_t line_no = 1;
  while (in.Next(&line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      records.push_back(ParseJobRecord(line));
    } catch (const ArgumentError& e) {
      throw ArgumentError(path.string() + ":" + std::to_string(line_no) + ": " +
                          e.what());
    }
  }
  return records;
}

}  // namespace tracelens::ingest
