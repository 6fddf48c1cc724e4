#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace whe {

// Deterministic JSON text: sorted keys, every float with 17 significant
// digits, non-finite values as null.
std::string json_text(const nlohmann::json& j, int indent = 2);

std::string format_double(double x);

// Columns of equal length; header names first.
std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// ---------------------------------------------------------------------------
// Plots

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

enum class PlotKind { profile, convergence, polytope_weight };

// Fixed-viewport SVG with no timestamps. Throws EmptySeries when there is no
// series or a series has no points. Convergence plots use log-log axes and
// add a 1/x guide through the first point of the first series.
std::string emit_plot(const std::vector<PlotSeries>& series, PlotKind kind,
                      const std::string& title);

// ---------------------------------------------------------------------------
// Schema validation (a subset of JSON Schema: type, properties, required,
// additionalProperties, enum, items, minItems, minimum, maximum,
// exclusiveMinimum, oneOf).

struct SchemaIssue {
  std::string path;
  std::string message;
};

std::vector<SchemaIssue> validate_schema(const nlohmann::json& instance,
                                         const nlohmann::json& schema);

// Built-in schema by name ("run_config"); throws ConfigError if unknown.
const nlohmann::json& builtin_schema(const std::string& name);

}  // namespace whe
