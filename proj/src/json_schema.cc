#include "tracelens/json_schema.h"

#include <cmath>
#include <set>

#include "tracelens/errors.h"

namespace tracelens {

extern const std::string_view kReportSchemaText;

namespace {

const std::set<std::string, std::less<>> kKnownKeywords = {
    "$schema", "$id", "$ref", "title", "description", "definitions", "$defs",
    "type", "enum", "const", "properties", "required", "additionalProperties",
    "items", "minItems", "minimum", "maximum", "anyOf"};

void CheckKeywords(const Json& schema, const std::string& where) {
  if (schema.is_boolean()) return;
  if (!schema.is_object()) throw ArgumentError("schema at " + where + " is not an object");
  for (const auto& [key, sub] : schema.items()) {
    if (!kKnownKeywords.contains(key)) {
      throw ArgumentError("unsupported schema keyword '" + key + "' at " + where);
    }
    if (key == "properties" || key == "definitions" || key == "$defs") {
      for (const auto& [name, s] : sub.items()) CheckKeywords(s, where + "/" + key + "/" + name);
    } else if (key == "items" || key == "additionalProperties") {
      CheckKeywords(sub, where + "/" + key);
    } else if (key == "anyOf") {
      for (std::size_t i = 0; i < sub.size(); ++i) {
        CheckKeywords(sub[i], where + "/anyOf/" + std::to_string(i));
      }
    }
  }
}

bool MatchesType(const Json& value, std::string_view type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  if (type == "number") return value.is_number();
  if (type == "integer") {
    if (value.is_number_integer()) return true;
    if (value.is_number_float()) {
      const double d = value.get<double>();
      return std::isfinite(d) && d == std::floor(d);
    }
    return false;
  }
  return false;
}

}  // namespace

SchemaValidator::SchemaValidator(Json schema) : root_(std::move(schema)) {
  CheckKeywords(root_, "#");
}

const Json& SchemaValidator::Resolve(const Json& schema) const {
  const Json* current = &schema;
  for (int depth = 0; current->is_object() && current->contains("$ref"); ++depth) {
    if (depth > 32) throw ArgumentError("$ref chain too deep");
    const std::string ref = current->at("$ref").get<std::string>();
    if (ref.rfind("#/", 0) != 0) throw ArgumentError("only local $ref supported: " + ref);
    current = &root_.at(Json::json_pointer(ref.substr(1)));
  }
  return *current;
}

void SchemaValidator::Check(const Json& raw_schema, const Json& value,
                            const std::string& pointer,
                            std::vector<std::string>* errors) const {
  const Json& schema = Resolve(raw_schema);
  if (schema.is_boolean()) {
    if (!schema.get<bool>()) errors->push_back(pointer + ": not allowed");
    return;
  }
  const std::string at = pointer.empty() ? "/" : pointer;

  if (const auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = MatchesType(value, it->get<std::string>());
    } else {
      for (const auto& t : *it) ok = ok || MatchesType(value, t.get<std::string>());
    }
    if (!ok) {
      errors->push_back(at + ": expected type " + it->dump() + ", got " + value.type_name());
      return;
    }
  }
  if (const auto it = schema.find("enum"); it != schema.end()) {
    bool found = false;
    for (const auto& candidate : *it) found = found || candidate == value;
    if (!found) errors->push_back(at + ": value " + value.dump() + " not in enum");
  }
  if (const auto it = schema.find("const"); it != schema.end() && *it != value) {
    errors->push_back(at + ": expected constant " + it->dump());
  }
  if (value.is_number()) {
    const double v = value.get<double>();
    if (const auto it = schema.find("minimum"); it != schema.end() && v < it->get<double>()) {
      errors->push_back(at + ": below minimum " + it->dump());
    }
    if (const auto it = schema.find("maximum"); it != schema.end() && v > it->get<double>()) {
      errors->push_back(at + ": above maximum " + it->dump());
    }
  }
  if (value.is_object()) {
    if (const auto it = schema.find("required"); it != schema.end()) {
      for (const auto& name : *it) {
        if (!value.contains(name.get<std::string>())) {
          errors->push_back(at + ": missing required property " + name.dump());
        }
      }
    }
    const auto props = schema.find("properties");
    const auto extra = schema.find("additionalProperties");
    for (const auto& [key, sub] : value.items()) {
      const std::string child = pointer + "/" + key;
      if (props != schema.end() && props->contains(key)) {
        Check(props->at(key), sub, child, errors);
      } else if (extra != schema.end()) {
        Check(*extra, sub, child, errors);
      }
    }
  }
  if (value.is_array()) {
    if (const auto it = schema.find("minItems");
        it != schema.end() && value.size() < it->get<std::size_t>()) {
      errors->push_back(at + ": fewer than " + it->dump() + " items");
    }
    if (const auto it = schema.find("items"); it != schema.end()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        Check(*it, value[i], pointer + "/" + std::to_string(i), errors);
      }
    }
  }
  if (const auto it = schema.find("anyOf"); it != schema.end()) {
    bool any = false;
    for (const auto& option : *it) {
      std::vector<std::string> sub_errors;
      Check(option, value, pointer, &sub_errors);
      if (sub_errors.empty()) {
        any = true;
        break;
      }
    }
    if (!any) errors->push_back(at + ": matches no anyOf alternative");
  }
}

std::vector<std::string> SchemaValidator::Validate(const Json& instance) const {
  std::vector<std::string> errors;
  Check(root_, instance, "", &errors);
  return errors;
}

const Json& ReportSchema() {
  static const Json schema = Json::parse(kReportSchemaText);
  return schema;
}

std::vector<std::string> ValidateReport(const Json& report) {
  static const SchemaValidator validator(ReportSchema());
  return validator.Validate(report);
}

}  // namespace tracelens
