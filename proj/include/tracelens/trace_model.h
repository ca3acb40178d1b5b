// Row-level trace records and the per-job aggregates built from them.
//
// All times are integer microseconds since trace start. Resource values are
// fractions normalized to the largest machine in the cell, as in the
// clusterdata-2011-2 format.

#ifndef TRACELENS_TRACE_MODEL_H_
#define TRACELENS_TRACE_MODEL_H_

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tracelens/errors.h"

namespace tracelens {

using JobId = std::uint64_t;
using MachineId = std::uint64_t;
// Microseconds.
using Duration = std::int64_t;

inline constexpr double kMicrosPerSecond = 1e6;

// Microseconds since trace start. A default-constructed Timestamp is the
// MISSING sentinel; micros() refuses to hand it out for arithmetic.
class Timestamp {
 public:
  constexpr Timestamp() = default;

  static Timestamp FromMicros(std::int64_t micros) {
    if (micros < 0) {
      throw ArgumentError("timestamp must be non-negative, got " +
                          std::to_string(micros));
    }
    return Timestamp(micros);
  }
  static constexpr Timestamp Missing() { return Timestamp(); }
  // Upper bound used for open-ended windows.
  static constexpr Timestamp Max() {
    return Timestamp(std::numeric_limits<std::int64_t>::max());
  }

  constexpr bool is_missing() const { return value_ < 0; }

  std::int64_t micros() const {
    if (is_missing()) throw ContractError("MISSING timestamp used as a value");
    return value_;
  }

  friend constexpr bool operator==(Timestamp, Timestamp) = default;
  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

 private:
  constexpr explicit Timestamp(std::int64_t v) : value_(v) {}

  std::int64_t value_ = -1;
};

// Event codes as they appear in the job_events and task_events tables.
enum class EventType : std::uint8_t {
  kSubmit = 0,
  kSchedule = 1,
  kEvict = 2,
  kFail = 3,
  kFinish = 4,
  kKill = 5,
  kLost = 6,
  kUpdatePending = 7,
  kUpdateRunning = 8,
};

std::optional<EventType> EventTypeFromCode(std::int64_t code);
std::string_view EventTypeName(EventType type);

enum class MachineEventType : std::uint8_t { kAdd = 0, kRemove = 1, kUpdate = 2 };

std::optional<MachineEventType> MachineEventTypeFromCode(std::int64_t code);

struct JobEvent {
  Timestamp time;
  JobId job_id = 0;
  EventType event_type = EventType::kSubmit;
  std::uint8_t scheduling_class = 0;
  std::string user;
  std::string job_name;

  friend bool operator==(const JobEvent&, const JobEvent&) = default;
};

struct TaskEvent {
  Timestamp time;
  JobId job_id = 0;
  std::int64_t task_index = 0;
  std::optional<MachineId> machine_id;
  EventType event_type = EventType::kSubmit;
  std::int64_t priority = 0;
  std::optional<double> cpu_request;
  std::optional<double> memory_request;
  std::optional<double> disk_request;

  friend bool operator==(const TaskEvent&, const TaskEvent&) = default;
};

// One usage sample window of one task. Resource fields are optional because
// the trace leaves them empty when the measurement is unavailable.
struct TaskUsage {
  Timestamp start_time;
  Timestamp end_time;
  JobId job_id = 0;
  std::int64_t task_index = 0;
  std::optional<MachineId> machine_id;
  std::optional<double> cpu_rate;
  std::optional<double> canonical_memory;
  std::optional<double> assigned_memory;
  std::optional<double> page_cache_total;
  std::optional<double> disk_io_time;
  std::optional<double> local_disk_space;
  // Cycles per instruction and memory accesses per instruction. Parsed and
  // exposed; nothing downstream consumes them.
  std::optional<double> cpi;
  std::optional<double> mai;

  Duration duration() const { return end_time.micros() - start_time.micros(); }

  friend bool operator==(const TaskUsage&, const TaskUsage&) = default;
};

struct MachineEvent {
  Timestamp time;
  MachineId machine_id = 0;
  MachineEventType event_type = MachineEventType::kAdd;
  std::optional<double> cpu_capacity;
  std::optional<double> memory_capacity;
  std::string platform;

  friend bool operator==(const MachineEvent&, const MachineEvent&) = default;
};

enum class TerminalEvent : std::uint8_t { kFinish, kFail, kKill, kLost, kCensored };

std::string_view TerminalEventName(TerminalEvent t);
std::optional<TerminalEvent> TerminalEventFromName(std::string_view name);

// Per-job feature vector. runtime is SCHEDULE -> terminal event and is absent
// for censored and lost jobs.
struct JobRecord {
  JobId job_id = 0;
  Timestamp arrival_time;
  std::optional<Duration> runtime;
  double mean_cpu = 0.0;
  double mean_memory = 0.0;
  std::uint32_t task_count = 0;
  TerminalEvent terminal_event = TerminalEvent::kCensored;

  friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

// Ordered by center magnitude.
enum class JobClass : std::uint8_t { kMinor = 0, kMediocre = 1, kMajor = 2 };

inline constexpr int kJobClassCount = 3;

std::string_view JobClassName(JobClass c);
std::optional<JobClass> JobClassFromName(std::string_view name);

struct WeibullParams {
  double shape = 1.0;
  double scale = 1.0;

  friend bool operator==(const WeibullParams&, const WeibullParams&) = default;
};

struct ZipfParams {
  double exponent = 1.0;
  std::uint64_t support_size = 1;

  friend bool operator==(const ZipfParams&, const ZipfParams&) = default;
};

// Survival function (x / xmin)^-exponent for x >= xmin.
struct ParetoTailParams {
  double exponent = 1.0;
  double xmin = 1.0;

  friend bool operator==(const ParetoTailParams&, const ParetoTailParams&) = default;
};

enum class DistributionKind : std::uint8_t { kWeibull, kZipf, kParetoTail };

std::string_view DistributionKindName(DistributionKind kind);

struct FittedDistribution {
  std::variant<WeibullParams, ZipfParams, ParetoTailParams> params;
  // Kolmogorov-Smirnov distance to the fitted CDF. Zipf fits carry the R^2 of
  // the log-log regression instead.
  std::optional<double> ks_statistic;
  std::optional<double> r_squared;
  std::uint64_t sample_count = 0;
  // Zero samples moved to the smallest positive double (Weibull only).
  std::uint64_t shifted_zeros = 0;
  std::vector<std::string> flags;

  DistributionKind kind() const {
    return static_cast<DistributionKind>(params.index());
  }

  friend bool operator==(const FittedDistribution&,
                         const FittedDistribution&) = default;
};

}  // namespace tracelens

#endif  // TRACELENS_TRACE_MODEL_H_
