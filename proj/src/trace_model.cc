#include "tracelens/trace_model.h"

#include <array>

namespace tracelens {

namespace {

constexpr std::array<std::string_view, 9> kEventNames = {
    "SUBMIT", "SCHEDULE", "EVICT", "FAIL", "FINISH",
    "KILL", "LOST", "UPDATE_PENDING", "UPDATE_RUNNING"};

constexpr std::array<std::string_view, 5> kTerminalNames = {
    "FINISH", "FAIL", "KILL", "LOST", "CENSORED"};

constexpr std::array<std::string_view, 3> kClassNames = {"MINOR", "MEDIOCRE",
                                                         "MAJOR"};

}  // namespace

std::optional<EventType> EventTypeFromCode(std::int64_t code) {
  if (code < 0 || code >= static_cast<std::int64_t>(kEventNames.size())) {
    return std::nullopt;
  }
  return static_cast<EventType>(code);
}

std::string_view EventTypeName(EventType type) {
  return kEventNames[static_cast<std::size_t>(type)];
}

std::optional<MachineEventType> MachineEventTypeFromCode(std::int64_t code) {
  if (code < 0 || code > 2) return std::nullopt;
  return static_cast<MachineEventType>(code);
}

std::string_view TerminalEventName(TerminalEvent t) {
  return kTerminalNames[static_cast<std::size_t>(t)];
}

std::optional<TerminalEvent> TerminalEventFromName(std::string_view name) {
  for (std::size_t i = 0; i < kTerminalNames.size(); ++i) {
    if (kTerminalNames[i] == name) return static_cast<TerminalEvent>(i);
  }
  return std::nullopt;
}

std::string_view JobClassName(JobClass c) {
  return kClassNames[static_cast<std::size_t>(c)];
}

std::optional<JobClass> JobClassFromName(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<JobClass>(i);
  }
  return std::nullopt;
}

std::string_view DistributionKindName(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::kWeibull:
      return "weibull";
    case DistributionKind::kZipf:
      return "zipf";
    case DistributionKind::kParetoTail:
      return "pareto_tail";
  }
  return "unknown";
}

}  // namespace tracelens
