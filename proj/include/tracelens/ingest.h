// Streaming ingestion of cluster-trace tables and aggregation into
// per-job records.
//
// Layout: <root>/<table>/part-NNNNN-of-MMMMM.csv[.gz], comma separated, no
// header, empty field = missing value. Part files are read in lexicographic
// order through a fixed-size buffer, one row at a time; aggregation state is
// per job, so memory grows with the number of distinct jobs and not with the
// number of rows.

#ifndef TRACELENS_INGEST_H_
#define TRACELENS_INGEST_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tracelens/io.h"
#include "tracelens/trace_model.h"

namespace tracelens::ingest {

enum class Table { kJobEvents, kTaskEvents, kTaskUsage, kMachineEvents };

inline constexpr Table kAllTables[] = {Table::kJobEvents, Table::kTaskEvents,
                                       Table::kTaskUsage, Table::kMachineEvents};

std::string_view TableName(Table table);

// Field name -> zero-based column index for one table.
class ColumnMap {
 public:
  static ColumnMap Defaults(Table table);

  Table table() const { return table_; }
  int Index(std::string_view field) const;
  void Set(std::string_view field, int index);
  bool Has(std::string_view field) const;

 private:
  explicit ColumnMap(Table table) : table_(table) {}

  Table table_;
  std::map<std::string, int, std::less<>> columns_;
};

struct ColumnMaps {
  ColumnMap job_events = ColumnMap::Defaults(Table::kJobEvents);
  ColumnMap task_events = ColumnMap::Defaults(Table::kTaskEvents);
  ColumnMap task_usage = ColumnMap::Defaults(Table::kTaskUsage);
  ColumnMap machine_events = ColumnMap::Defaults(Table::kMachineEvents);

  const ColumnMap& For(Table table) const;
  ColumnMap& For(Table table);

  // Keys are either `<table>.<field>` or a bare field name, which applies to
  // every table carrying that field. Unknown fields raise ValidationError.
  static ColumnMaps Load(const std::filesystem::path& path);
  static ColumnMaps FromEntries(std::span<const KeyValueEntry> entries);
};

template <typename Row>
struct TableOf;
template <>
struct TableOf<JobEvent> {
  static constexpr Table value = Table::kJobEvents;
};
template <>
struct TableOf<TaskEvent> {
  static constexpr Table value = Table::kTaskEvents;
};
template <>
struct TableOf<TaskUsage> {
  static constexpr Table value = Table::kTaskUsage;
};
template <>
struct TableOf<MachineEvent> {
  static constexpr Table value = Table::kMachineEvents;
};

// Row parsers. Return false (and set *error) for malformed rows.
bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              JobEvent* out, std::string* error);
bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              TaskEvent* out, std::string* error);
bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              TaskUsage* out, std::string* error);
bool ParseRow(std::span<const std::string_view> fields, const ColumnMap& map,
              MachineEvent* out, std::string* error);

// Row formatters in the default column layout; the inverse of ParseRow.
std::string FormatRow(const JobEvent& row);
std::string FormatRow(const TaskEvent& row);
std::string FormatRow(const TaskUsage& row);
std::string FormatRow(const MachineEvent& row);

struct StreamStats {
  std::uint64_t files = 0;
  std::uint64_t rows_read = 0;
  std::uint64_t rows_emitted = 0;
  std::uint64_t rows_skipped = 0;
  // First few parse errors, for diagnostics.
  std::vector<std::string> sample_errors;
};

// Part files for `table` under `root`, sorted by name. A missing table
// directory yields no files.
std::vector<std::filesystem::path> ListPartFiles(const std::filesystem::path& root,
                                                 Table table);

// Single-consumer stream of parsed rows over a list of part files.
// rows_emitted + rows_skipped == rows_read at every point.
template <typename Row>
class RowStream {
 public:
  RowStream(std::vector<std::filesystem::path> files, ColumnMap map,
            std::size_t buffer_bytes = 1 << 16)
      : files_(std::move(files)), map_(std::move(map)),
        buffer_bytes_(buffer_bytes) {
    stats_.files = files_.size();
  }

  bool Next(Row* out) {
    std::string_view line;
    for (;;) {
      if (!reader_) {
        if (next_file_ >= files_.size()) return false;
        reader_ = std::make_unique<LineReader>(files_[next_file_++], buffer_bytes_);
      }
      if (!reader_->Next(&line)) {
        reader_.reset();
        continue;
      }
      if (Trim(line).empty()) continue;
      ++stats_.rows_read;
      SplitFields(line, ',', &fields_);
      if (ParseRow(fields_, map_, out, &error_)) {
        ++stats_.rows_emitted;
        return true;
      }
      ++stats_.rows_skipped;
      if (stats_.sample_errors.size() < 5) {
        stats_.sample_errors.push_back(reader_->path().filename().string() +
                                       ": " + error_);
      }
    }
  }

  const StreamStats& stats() const { return stats_; }

 private:
  std::vector<std::filesystem::path> files_;
  ColumnMap map_;
  std::size_t buffer_bytes_;
  std::size_t next_file_ = 0;
  std::unique_ptr<LineReader> reader_;
  std::vector<std::string_view> fields_;
  std::string error_;
  StreamStats stats_;
};

template <typename Row>
RowStream<Row> OpenTable(const std::filesystem::path& root,
                         const ColumnMap& map = ColumnMap::Defaults(TableOf<Row>::value)) {
  return RowStream<Row>(ListPartFiles(root, TableOf<Row>::value), map);
}

// Time used for window filtering; usage rows are keyed by start_time.
inline Timestamp RowTime(const JobEvent& r) { return r.time; }
inline Timestamp RowTime(const TaskEvent& r) { return r.time; }
inline Timestamp RowTime(const MachineEvent& r) { return r.time; }
inline Timestamp RowTime(const TaskUsage& r) { return r.start_time; }

// Half-open [start, end).
struct TimeWindow {
  Timestamp start = Timestamp::FromMicros(0);
  Timestamp end = Timestamp::Max();

  // Throws ArgumentError when start > end.
  static TimeWindow Make(Timestamp start, Timestamp end);
  bool Contains(Timestamp t) const { return start <= t && t < end; }
};

// Wraps a stream and drops rows outside the window.
template <typename Stream, typename Row>
class WindowFilter {
 public:
  WindowFilter(Stream* source, TimeWindow window)
      : source_(source), window_(window) {}

  bool Next(Row* out) {
    while (source_->Next(out)) {
      if (window_.Contains(RowTime(*out))) return true;
      ++filtered_;
    }
    return false;
  }

  std::uint64_t filtered() const { return filtered_; }

 private:
  Stream* source_;
  TimeWindow window_;
  std::uint64_t filtered_ = 0;
};

template <typename Row>
std::vector<Row> FilterWindow(std::span<const Row> rows, Timestamp start,
                              Timestamp end) {
  const TimeWindow window = TimeWindow::Make(start, end);
  std::vector<Row> kept;
  for (const Row& r : rows) {
    if (window.Contains(RowTime(r))) kept.push_back(r);
  }
  return kept;
}

// Order-independent sum of value * weight. Each product is truncated once to
// fixed point with 56 fractional bits and accumulated as a 128-bit integer,
// so the total does not depend on the order rows arrive in.
class ExactWeightedSum {
 public:
  // value must be finite, in [0, 256); weight in [0, 2^46).
  void Add(double value, std::int64_t weight);
  void Merge(const ExactWeightedSum& other) { acc_ += other.acc_; }
  double Value() const;

  friend bool operator==(const ExactWeightedSum&, const ExactWeightedSum&) = default;

 private:
  __int128 acc_ = 0;
};

struct JobTable {
  std::vector<JobRecord> records;  // ascending job_id
  std::uint64_t skipped_no_submit = 0;
  std::uint64_t censored = 0;
};

// Incremental per-job aggregation. add() accepts rows in any order and
// Merge() combines partial builders; both are associative and commutative,
// so Finish() is independent of row order and sharding.
class JobTableBuilder {
 public:
  void Add(const JobEvent& event);
  void Add(const TaskUsage& usage);
  void Merge(const JobTableBuilder& other);

  JobTable Finish() const;
  std::size_t tracked_jobs() const { return jobs_.size(); }

 private:
  struct ResourceAccumulator {
    ExactWeightedSum sum;
    std::int64_t weight = 0;
    double min = 0.0;
    double max = 0.0;

    void Add(double value, std::int64_t w);
    void Merge(const ResourceAccumulator& other);
    double Mean() const;
  };

  struct JobState {
    bool has_event = false;
    Timestamp first_submit;
    Timestamp first_schedule;
    Timestamp first_terminal;
    EventType terminal_type = EventType::kFinish;
    ResourceAccumulator cpu;
    ResourceAccumulator memory;
    std::vector<std::int64_t> tasks;  // sorted, distinct

    void Merge(const JobState& other);
  };

  std::unordered_map<JobId, JobState> jobs_;
};

JobTable BuildJobTable(std::span<const JobEvent> job_events,
                       std::span<const TaskUsage> task_usage);

// Sorted arrival times, consecutive differences. Requires >= 2 records.
std::vector<Duration> InterarrivalTimes(std::span<const JobRecord> records);

struct TableStats {
  StreamStats stream;
  std::uint64_t rows_filtered = 0;  // outside the time window
};

struct IngestOptions {
  TimeWindow window;
  ColumnMaps columns;
  std::size_t buffer_bytes = 1 << 16;
  // Also stream task_events and machine_events for row statistics.
  bool scan_auxiliary_tables = true;
};

struct IngestResult {
  JobTable jobs;
  std::map<Table, TableStats> tables;
};

// Full pass over a trace root. Part files are processed in parallel up to
// WorkerThreads(); results do not depend on the thread count.
IngestResult IngestTrace(const std::filesystem::path& root,
                         const IngestOptions& options = {});

// jobs.csv: header plus one row per job, in the JobRecord field order.
void WriteJobTable(const std::filesystem::path& path,
                   std::span<const JobRecord> records);
std::vector<JobRecord> ReadJobTable(const std::filesystem::path& path);

std::string JobTableHeader();
std::string FormatJobRecord(const JobRecord& record);
// Throws ArgumentError naming the problem.
JobRecord ParseJobRecord(std::string_view line);

}  // namespace tracelens::ingest

#endif  // TRACELENS_INGEST_H_
