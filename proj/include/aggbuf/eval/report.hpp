#pragma once

#include <filesystem>
#include <span>

#include <json.hpp>

#include "aggbuf/eval/metrics.hpp"

namespace aggbuf {

nlohmann::json to_json(const MetricsReport& r);

// {runs: [...], aggregate: {metric: {mean, std}}}. Keys come out sorted, so
// equal inputs always give equal bytes.
nlohmann::json report_json(std::span<const MetricsReport> runs);

void emit_report(std::span<const MetricsReport> runs, const std::filesystem::path& path);

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace aggbuf
