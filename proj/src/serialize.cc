#include "tracelens/serialize.h"

#include <cmath>
#include <string>

namespace tracelens {

namespace {

template <typename T>
Json Opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> GetOpt(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->template get<T>();
}

EventType EventFromJson(const Json& j) {
  const auto code = EventTypeFromCode(j.get<std::int64_t>());
  if (!code) throw ArgumentError("unknown event code " + j.dump());
  return *code;
}

}  // namespace

Json FiniteOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void to_json(Json& j, const Timestamp& t) {
  j = t.is_missing() ? Json(nullptr) : Json(t.micros());
}

void from_json(const Json& j, Timestamp& t) {
  t = j.is_null() ? Timestamp::Missing() : Timestamp::FromMicros(j.get<std::int64_t>());
}

void to_json(Json& j, const JobEvent& e) {
  j = Json{{"time", e.time},
           {"job_id", e.job_id},
           {"event_type", static_cast<int>(e.event_type)},
           {"scheduling_class", e.scheduling_class},
           {"user", e.user},
           {"job_name", e.job_name}};
}

void from_json(const Json& j, JobEvent& e) {
  e.time = j.at("time").get<Timestamp>();
  e.job_id = j.at("job_id").get<JobId>();
  e.event_type = EventFromJson(j.at("event_type"));
  e.scheduling_class = j.at("scheduling_class").get<std::uint8_t>();
  e.user = j.at("user").get<std::string>();
  e.job_name = j.at("job_name").get<std::string>();
}

void to_json(Json& j, const TaskEvent& e) {
  j = Json{{"time", e.time},
           {"job_id", e.job_id},
           {"task_index", e.task_index},
           {"machine_id", Opt(e.machine_id)},
           {"event_type", static_cast<int>(e.event_type)},
           {"priority", e.priority},
           {"cpu_request", Opt(e.cpu_request)},
           {"memory_request", Opt(e.memory_request)},
           {"disk_request", Opt(e.disk_request)}};
}

void from_json(const Json& j, TaskEvent& e) {
  e.time = j.at("time").get<Timestamp>();
  e.job_id = j.at("job_id").get<JobId>();
  e.task_index = j.at("task_index").get<std::int64_t>();
  e.machine_id = GetOpt<MachineId>(j, "machine_id");
  e.event_type = EventFromJson(j.at("event_type"));
  e.priority = j.at("priority").get<std::int64_t>();
  e.cpu_request = GetOpt<double>(j, "cpu_request");
  e.memory_request = GetOpt<double>(j, "memory_request");
  e.disk_request = GetOpt<double>(j, "disk_request");
}

void to_json(Json& j, const TaskUsage& u) {
  j = Json{{"start_time", u.start_time},
           {"end_time", u.end_time},
           {"job_id", u.job_id},
           {"task_index", u.task_index},
           {"machine_id", Opt(u.machine_id)},
           {"cpu_rate", Opt(u.cpu_rate)},
           {"canonical_memory", Opt(u.canonical_memory)},
           {"assigned_memory", Opt(u.assigned_memory)},
           {"page_cache_total", Opt(u.page_cache_total)},
           {"disk_io_time", Opt(u.disk_io_time)},
           {"local_disk_space", Opt(u.local_disk_space)},
           {"cpi", Opt(u.cpi)},
           {"mai", Opt(u.mai)}};
}

void from_json(const Json& j, TaskUsage& u) {
  u.start_time = j.at("start_time").get<Timestamp>();
  u.end_time = j.at("end_time").get<Timestamp>();
  u.job_id = j.at("job_id").get<JobId>();
  u.task_index = j.at("task_index").get<std::int64_t>();
  u.machine_id = GetOpt<MachineId>(j, "machine_id");
  u.cpu_rate = GetOpt<double>(j, "cpu_rate");
  u.canonical_memory = GetOpt<double>(j, "canonical_memory");
  u.assigned_memory = GetOpt<double>(j, "assigned_memory");
  u.page_cache_total = GetOpt<double>(j, "page_cache_total");
  u.disk_io_time = GetOpt<double>(j, "disk_io_time");
  u.local_disk_space = GetOpt<double>(j, "local_disk_space");
  u.cpi = GetOpt<double>(j, "cpi");
  u.mai = GetOpt<double>(j, "mai");
}

void to_json(Json& j, const MachineEvent& e) {
  j = Json{{"time", e.time},
           {"machine_id", e.machine_id},
           {"event_type", static_cast<int>(e.event_type)},
           {"cpu_capacity", Opt(e.cpu_capacity)},
           {"memory_capacity", Opt(e.memory_capacity)},
           {"platform", e.platform}};
}

void from_json(const Json& j, MachineEvent& e) {
  e.time = j.at("time").get<Timestamp>();
  e.machine_id = j.at("machine_id").get<MachineId>();
  const auto type = MachineEventTypeFromCode(j.at("event_type").get<std::int64_t>());
  if (!type) throw ArgumentError("unknown machine event code");
  e.event_type = *type;
  e.cpu_capacity = GetOpt<double>(j, "cpu_capacity");
  e.memory_capacity = GetOpt<double>(j, "memory_capacity");
  e.platform = j.at("platform").get<std::string>();
}

void to_json(Json& j, const JobRecord& r) {
  j = Json{{"job_id", r.job_id},
           {"arrival_time", r.arrival_time},
           {"runtime", Opt(r.runtime)},
           {"mean_cpu", r.mean_cpu},
           {"mean_memory", r.mean_memory},
           {"task_count", r.task_count},
           {"terminal_event", TerminalEventName(r.terminal_event)}};
}

void from_json(const Json& j, JobRecord& r) {
  r.job_id = j.at("job_id").get<JobId>();
  r.arrival_time = j.at("arrival_time").get<Timestamp>();
  r.runtime = GetOpt<Duration>(j, "runtime");
  r.mean_cpu = j.at("mean_cpu").get<double>();
  r.mean_memory = j.at("mean_memory").get<double>();
  r.task_count = j.at("task_count").get<std::uint32_t>();
  const auto name = j.at("terminal_event").get<std::string>();
  const auto t = TerminalEventFromName(name);
  if (!t) throw ArgumentError("unknown terminal event " + name);
  r.terminal_event = *t;
}

void to_json(Json& j, const FittedDistribution& d) {
  Json params;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, WeibullParams>) {
          params = Json{{"shape", p.shape}, {"scale", p.scale}};
        } else if constexpr (std::is_same_v<P, ZipfParams>) {
          params = Json{{"exponent", p.exponent}, {"support_size", p.support_size}};
        } else {
          params = Json{{"exponent", p.exponent}, {"xmin", p.xmin}};
        }
      },
      d.params);
  j = Json{{"family", DistributionKindName(d.kind())},
           {"params", params},
           {"ks_statistic", Opt(d.ks_statistic)},
           {"r_squared", Opt(d.r_squared)},
           {"sample_count", d.sample_count},
           {"shifted_zeros", d.shifted_zeros},
           {"flags", d.flags}};
}

void from_json(const Json& j, FittedDistribution& d) {
  const auto family = j.at("family").get<std::string>();
  const Json& p = j.at("params");
  if (family == "weibull") {
    d.params = WeibullParams{p.at("shape").get<double>(), p.at("scale").get<double>()};
  } else if (family == "zipf") {
    d.params = ZipfParams{p.at("exponent").get<double>(),
                          p.at("support_size").get<std::uint64_t>()};
  } else if (family == "pareto_tail") {
    d.params = ParetoTailParams{p.at("exponent").get<double>(), p.at("xmin").get<double>()};
  } else {
    throw ArgumentError("unknown distribution family " + family);
  }
  d.ks_statistic = GetOpt<double>(j, "ks_statistic");
  d.r_squared = GetOpt<double>(j, "r_squared");
  d.sample_count = j.at("sample_count").get<std::uint64_t>();
  d.shifted_zeros = j.at("shifted_zeros").get<std::uint64_t>();
  d.flags = j.at("flags").get<std::vector<std::string>>();
}

namespace cluster {

void to_json(Json& j, const Point& p) {
  j = Json{{"coords", p.coords}, {"source_id", Opt(p.source_id)}};
}

void from_json(const Json& j, Point& p) {
  p.coords = j.at("coords").get<std::vector<double>>();
  p.source_id = GetOpt<JobId>(j, "source_id");
}

void to_json(Json& j, const ClusterModel& m) {
  j = Json{{"k", m.k},
           {"centers", m.centers},
           {"assignment", m.assignment},
           {"wcss", m.wcss},
           {"iterations", m.iterations},
           {"silhouette_mean", Opt(m.silhouette_mean)},
           {"silhouette_sampled", m.silhouette_sampled},
           {"wcss_history", m.wcss_history}};
}

void from_json(const Json& j, ClusterModel& m) {
  m.k = j.at("k").get<std::size_t>();
  m.centers = j.at("centers").get<std::vector<Point>>();
  m.assignment = j.at("assignment").get<std::vector<std::uint32_t>>();
  m.wcss = j.at("wcss").get<double>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.silhouette_mean = GetOpt<double>(j, "silhouette_mean");
  m.silhouette_sampled = j.at("silhouette_sampled").get<bool>();
  m.wcss_history = j.at("wcss_history").get<std::vector<double>>();
}

}  // namespace cluster

namespace ingest {

void to_json(Json& j, const StreamStats& s) {
  j = Json{{"files", s.files},
           {"rows_read", s.rows_read},
           {"rows_emitted", s.rows_emitted},
           {"rows_skipped", s.rows_skipped},
           {"sample_errors", s.sample_errors}};
}

void to_json(Json& j, const TableStats& s) {
  j = s.stream;
  j["rows_filtered"] = s.rows_filtered;
}

}  // namespace ingest

}  // namespace tracelens
