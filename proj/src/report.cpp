#include "ltrajdiff/report.hpp"

#include <fstream>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

using nlohmann::json;

json layout_to_json(const LayoutSequence& layout) {
  json rows = json::array();
  for (const auto& f : layout.frames) rows.push_back(f.to_array());
  return rows;
}

LayoutSequence layout_from_json(const json& rows) {
  LayoutSequence out;
  for (const auto& r : rows) out.frames.push_back(LayoutFrame::from_array(r.get<std::array<double, kLayoutDim>>()));
  return out;
}

json report_summary(const EvalReport& r) {
  return {{"record", "summary"},
          {"mse_t", r.mse_t},
          {"iou_d", r.iou_d},
          {"iou_d_paper_literal", r.iou_d_paper_literal},
          {"iou_d_mode", to_string(r.iou_d_mode)},
          {"mask", r.mask_spec},
          {"samples", r.per_sample.size()},
          {"failures", r.failures}};
}

void write_report(const EvalReport& report, const std::filesystem::path& path, const json& extra) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open '" + path.string() + "' for writing");
  json summary = report_summary(report);
  if (extra.is_object()) {
    for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
  }
  f << summary.dump() << "\n";
  for (const auto& s : report.per_sample) {
    json rec = {{"record", "sample"}, {"agent_id", s.agent_id}};
    if (!s.error.empty()) {
      rec["error"] = s.error;
    } else {
      rec["mse_t"] = s.mse_t;
      rec["iou_d"] = s.iou_d;
      rec["iou_d_paper_literal"] = s.iou_d_paper_literal;
    }
    if (!s.truth.frames.empty()) {
      rec["mask"] = s.mask.flags;
      rec["truth"] = layout_to_json(s.truth);
      rec["pred"] = layout_to_json(s.pred);
    }
    f << rec.dump() << "\n";
  }
  if (!f) throw ParseError("failed writing '" + path.string() + "'");
}

EvalReport read_report(const std::filesystem::path& path, json* summary_out) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open report '" + path.string() + "'");
  EvalReport r;
  std::string line;
  std::size_t line_no = 0;
  bool have_summary = false;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
      const std::string kind = rec.at("record").get<std::string>();
      if (kind == "summary") {
        r.mse_t = rec.at("mse_t").get<double>();
        r.iou_d = rec.at("iou_d").get<double>();
        r.iou_d_paper_literal = rec.at("iou_d_paper_literal").get<double>();
        r.iou_d_mode = iou_depth_mode_from_string(rec.at("iou_d_mode").get<std::string>());
        r.mask_spec = rec.at("mask").get<std::string>();
        r.failures = rec.at("failures").get<std::size_t>();
        if (summary_out) *summary_out = rec;
        have_summary = true;
      } else if (kind == "sample") {
        SampleScore s;
        s.agent_id = rec.at("agent_id").get<std::string>();
        if (rec.contains("error")) {
          s.error = rec["error"].get<std::string>();
        } else {
          s.mse_t = rec.at("mse_t").get<double>();
          s.iou_d = rec.at("iou_d").get<double>();
          s.iou_d_paper_literal = rec.at("iou_d_paper_literal").get<double>();
        }
        if (rec.contains("truth")) {
          s.truth = layout_from_json(rec["truth"]);
          s.pred = layout_from_json(rec.at("pred"));
          s.mask.flags = rec.at("mask").get<std::vector<std::uint8_t>>();
        }
        r.per_sample.push_back(std::move(s));
      } else {
        throw ParseError("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_summary) throw ParseError(path.string() + ": no summary record");
  return r;
}

}  // namespace ltrajdiff
