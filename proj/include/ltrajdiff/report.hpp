#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltrajdiff/metrics.hpp"

namespace ltrajdiff {

// Line-delimited: a "summary" record followed by one "sample" record each.
void write_report(const EvalReport& report, const std::filesystem::path& path, const nlohmann::json& extra = {});
EvalReport read_report(const std::filesystem::path& path, nlohmann::json* summary = nullptr);

nlohmann::json report_summary(const EvalReport& report);
nlohmann::json layout_to_json(const LayoutSequence& layout);
LayoutSequence layout_from_json(const nlohmann::json& rows);

}  // namespace ltrajdiff
