#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace histowas {

/// Static SVG renderers over plot-data JSON. Output is deterministic: all
/// coordinates are printed with fixed precision, so identical inputs yield
/// byte-identical files.

/// Scatter of -log10(p) by significance rank with a dashed threshold line.
/// Spatial-category features are drawn red, the rest blue.
std::string render_manhattan_svg(const nlohmann::json& data);

/// Horizontal 95% CI bars around beta, one row per significant feature,
/// with a zero reference line. An empty feature set yields a notice plot.
std::string render_effect_size_svg(const nlohmann::json& data);

/// One panel per function: envelope band, per-sample curves, dashed
/// theoretical curve.
std::string render_envelope_svg(const nlohmann::json& data);

void write_svg(const std::string& svg, const std::string& path);

}  // namespace histowas
