#include <cmath>
#include <map>

#include "embedded_schemas.hpp"
#include "whe/errors.hpp"
#include "whe/io.hpp"

namespace whe {

namespace {

bool type_matches(const nlohmann::json& x, const std::string& t) {
  if (t == "object") return x.is_object();
  if (t == "array") return x.is_array();
  if (t == "string") return x.is_string();
  if (t == "boolean") return x.is_boolean();
  if (t == "null") return x.is_null();
  if (t == "number") return x.is_number();
  if (t == "integer") {
    if (x.is_number_integer()) return true;
    if (x.is_number_float()) {
      const double d = x.get<double>();
      return std::isfinite(d) && d == std::floor(d);
    }
    return false;
  }
  return false;
}

void check(const nlohmann::json& x, const nlohmann::json& s, const std::string& path,
           std::vector<SchemaIssue>& out) {
  if (s.contains("$ref")) {
    std::string name = s["$ref"].get<std::string>();
    const auto dot = name.find(".schema.json");
    if (dot != std::string::npos) name = name.substr(0, dot);
    check(x, builtin_schema(name), path, out);
    return;
  }
  if (s.contains("oneOf")) {
    int ok = 0;
    for (const auto& alt : s["oneOf"]) {
      std::vector<SchemaIssue> tmp;
      check(x, alt, path, tmp);
      ok += tmp.empty();
    }
    if (ok != 1) out.push_back({path, "must match exactly one alternative"});
    return;
  }
  if (s.contains("type")) {
    const auto& t = s["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const auto& e : t) ok = ok || type_matches(x, e.get<std::string>());
    } else {
      ok = type_matches(x, t.get<std::string>());
    }
    if (!ok) {
      out.push_back({path, "expected type " + t.dump()});
      return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == x;
    if (!found) out.push_back({path, "value " + x.dump() + " not in " + s["enum"].dump()});
  }
  if (x.is_number()) {
    const double d = x.get<double>();
    if (s.contains("minimum") && d < s["minimum"].get<double>())
      out.push_back({path, "must be >= " + s["minimum"].dump()});
    if (s.contains("maximum") && d > s["maximum"].get<double>())
      out.push_back({path, "must be <= " + s["maximum"].dump()});
    if (s.contains("exclusiveMinimum") && d <= s["exclusiveMinimum"].get<double>())
      out.push_back({path, "must be > " + s["exclusiveMinimum"].dump()});
  }
  if (x.is_array()) {
    if (s.contains("minItems") && x.size() < s["minItems"].get<size_t>())
      out.push_back({path, "needs at least " + s["minItems"].dump() + " items"});
    if (s.contains("maxItems") && x.size() > s["maxItems"].get<size_t>())
      out.push_back({path, "allows at most " + s["maxItems"].dump() + " items"});
    if (s.contains("items"))
      for (size_t i = 0; i < x.size(); ++i)
        check(x[i], s["items"], path + "[" + std::to_string(i) + "]", out);
  }
  if (x.is_object()) {
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!x.contains(r.get<std::string>()))
          out.push_back({path, "missing required field '" + r.get<std::string>() + "'"});
    const nlohmann::json props = s.value("properties", nlohmann::json::object());
    const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
    for (auto it = x.begin(); it != x.end(); ++it) {
      const std::string p = path + "." + it.key();
      if (props.contains(it.key())) check(it.value(), props[it.key()], p, out);
      else if (closed) out.push_back({p, "unknown field"});
    }
  }
}

}  // namespace

std::vector<SchemaIssue> validate_schema(const nlohmann::json& instance,
                                         const nlohmann::json& schema) {
  std::vector<SchemaIssue> out;
  check(instance, schema, "$", out);
  return out;
}

const nlohmann::json& builtin_schema(const std::string& name) {
  static const std::map<std::string, nlohmann::json> table = [] {
    std::map<std::string, nlohmann::json> t;
    for (const auto& [n, text] : embedded_schemas()) t[n] = nlohmann::json::parse(text);
    return t;
  }();
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown schema '" + name + "'");
  return it->second;
}

}  // namespace whe
