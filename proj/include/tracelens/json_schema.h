// Validator for the subset of JSON Schema the report schema uses:
// type, enum, const, properties, required, additionalProperties, items,
// minItems, minimum, maximum, anyOf and local $ref into definitions/$defs.
// Unsupported keywords are rejected when the validator is built.

#ifndef TRACELENS_JSON_SCHEMA_H_
#define TRACELENS_JSON_SCHEMA_H_

#include <string>
#include <string_view>
#include <vector>

#include "tracelens/serialize.h"

namespace tracelens {

class SchemaValidator {
 public:
  explicit SchemaValidator(Json schema);

  // One message per violation, each prefixed with a JSON pointer.
  std::vector<std::string> Validate(const Json& instance) const;

 private:
  void Check(const Json& schema, const Json& value, const std::string& pointer,
             std::vector<std::string>* errors) const;
  const Json& Resolve(const Json& schema) const;

  Json root_;
};

// The report schema shipped in schema/report.schema.json.
const Json& ReportSchema();
std::vector<std::string> ValidateReport(const Json& report);

}  // namespace tracelens

#endif  // TRACELENS_JSON_SCHEMA_H_
