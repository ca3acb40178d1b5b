// JSON forms of the shared data types, used by the report and by tests.
// Missing optionals and MISSING timestamps serialize as null; doubles are
// written with enough digits to round-trip exactly.

#ifndef TRACELENS_SERIALIZE_H_
#define TRACELENS_SERIALIZE_H_

#include "json.hpp"

#include "tracelens/cluster.h"
#include "tracelens/ingest.h"
#include "tracelens/trace_model.h"

namespace tracelens {

using Json = nlohmann::ordered_json;

void to_json(Json& j, const Timestamp& t);
void from_json(const Json& j, Timestamp& t);

void to_json(Json& j, const JobEvent& e);
void from_json(const Json& j, JobEvent& e);
void to_json(Json& j, const TaskEvent& e);
void from_json(const Json& j, TaskEvent& e);
void to_json(Json& j, const TaskUsage& u);
void from_json(const Json& j, TaskUsage& u);
void to_json(Json& j, const MachineEvent& e);
void from_json(const Json& j, MachineEvent& e);

void to_json(Json& j, const JobRecord& r);
void from_json(const Json& j, JobRecord& r);

// {"family": "weibull", "params": {...}, "ks_statistic": ..., ...}
void to_json(Json& j, const FittedDistribution& d);
void from_json(const Json& j, FittedDistribution& d);

namespace cluster {
void to_json(Json& j, const Point& p);
void from_json(const Json& j, Point& p);
// Includes the assignment vector; the report drops it and exports a CSV.
void to_json(Json& j, const ClusterModel& m);
void from_json(const Json& j, ClusterModel& m);
}  // namespace cluster

namespace ingest {
void to_json(Json& j, const StreamStats& s);
void to_json(Json& j, const TableStats& s);
}  // namespace ingest

// Finite doubles as numbers, anything else as null.
Json FiniteOrNull(double v);

}  // namespace tracelens

#endif  // TRACELENS_SERIALIZE_H_
