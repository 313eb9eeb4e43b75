#include "enbcds/output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <utility>
#include <vector>

#include "enbcds/error.hpp"

namespace enbcds {

using Json = nlohmann::ordered_json;

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

namespace {

std::string money(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string emit_csv(const EnbcdsCurve& curve) {
  std::string out = "s,enbcds\r\n";
  for (const auto& p : curve.samples) {
    out += format_number(p.s);
    out += ',';
    out += format_number(p.value);
    out += "\r\n";
  }
  out += "# s_star," + format_number(curve.s_star) + "\r\n";
  return out;
}

std::string emit_svg(const EnbcdsCurve& curve) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 400.0;
  constexpr double kLeft = 70.0;
  constexpr double kRight = 20.0;
  constexpr double kTop = 30.0;
  constexpr double kBottom = 50.0;
  const double s_lo = curve.samples.front().s;
  const double s_hi = curve.samples.back().s;
  double v_lo = curve.samples.front().value;
  double v_hi = v_lo;
  for (const auto& p : curve.samples) {
    v_lo = std::min(v_lo, p.value);
    v_hi = std::max(v_hi, p.value);
  }
  v_lo = std::min({v_lo, curve.peak_value, 0.0});
  v_hi = std::max({v_hi, curve.peak_value, 0.0});
  if (v_hi - v_lo <= 0.0) {
    v_hi += 1.0;
    v_lo -= 1.0;
  }
  const double pad = 0.05 * (v_hi - v_lo);
  v_lo -= pad;
  v_hi += pad;
  auto px = [&](double s) { return kLeft + (s - s_lo) / (s_hi - s_lo) * (kWidth - kLeft - kRight); };
  auto py = [&](double v) { return kTop + (v_hi - v) / (v_hi - v_lo) * (kHeight - kTop - kBottom); };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "  <title>ENBCDS for " << xml_escape(curve.gdf_id) << "</title>\n"
      << "  <desc>ENBCDS(0) = " << format_number(curve.samples.front().value)
      << "; s* = " << format_number(curve.s_star) << "; peak = " << format_number(curve.peak_value)
      << "</desc>\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  // Axes and the zero line.
  out << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n"
      << "  <line id=\"zero\" x1=\"" << kLeft << "\" y1=\"" << fmt(py(0.0)) << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << fmt(py(0.0)) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  out << "  <text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">cyber-defense spend s</text>\n"
      << "  <text x=\"14\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 14 " << kHeight / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">ENBCDS(s)</text>\n"
      << "  <text x=\"" << kLeft << "\" y=\"" << kHeight - kBottom + 16
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(s_lo) << "</text>\n"
      << "  <text x=\"" << kWidth - kRight << "\" y=\"" << kHeight - kBottom + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(s_hi) << "</text>\n";

  out << "  <polyline id=\"curve\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.samples.size(); ++i) {
    if (i) out << ' ';
    out << fmt(px(curve.samples[i].s)) << ',' << fmt(py(curve.samples[i].value));
  }
  out << "\"/>\n";

  if (curve.actual_spend && *curve.actual_spend >= s_lo && *curve.actual_spend <= s_hi) {
    const double x = px(*curve.actual_spend);
    out << "  <line id=\"actual\" x1=\"" << fmt(x) << "\" y1=\"" << kTop << "\" x2=\"" << fmt(x) << "\" y2=\""
        << kHeight - kBottom << "\" stroke=\"darkorange\" stroke-dasharray=\"2 3\">"
        << "<title>s^A = " << format_number(*curve.actual_spend) << "</title></line>\n";
  }
  out << "  <circle id=\"peak\" cx=\"" << fmt(px(curve.s_star)) << "\" cy=\"" << fmt(py(curve.peak_value))
      << "\" r=\"5\" fill=\"firebrick\"><title>s* = " << format_number(curve.s_star)
      << ", ENBCDS = " << format_number(curve.peak_value) << "</title></circle>\n"
      << "  <text x=\"" << fmt(px(curve.s_star) + 8) << "\" y=\"" << fmt(py(curve.peak_value) - 8)
      << "\" font-family=\"sans-serif\" font-size=\"11\">s*</text>\n"
      << "</svg>\n";
  return out.str();
}

}  // namespace

std::string emit_curve(const EnbcdsCurve& curve, CurveFormat format) {
  if (curve.samples.size() < 2) throw Error(ErrorKind::kEmptyCurve, "a curve needs at least 2 samples");
  return format == CurveFormat::kCsv ? emit_csv(curve) : emit_svg(curve);
}

std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorKind::kSyntaxError, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

EnbcdsCurve parse_curve_csv(std::string_view text) {
  const auto records = parse_csv_records(text);
  if (records.empty() || records.front() != std::vector<std::string>{"s", "enbcds"}) {
    throw Error(ErrorKind::kSyntaxError, "curve CSV must start with the header 's,enbcds'");
  }
  auto number = [](const std::string& f, std::size_t row) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      throw Error(ErrorKind::kSyntaxError, "row " + std::to_string(row) + ": '" + f + "' is not a number");
    }
    return v;
  };
  EnbcdsCurve curve;
  bool have_peak = false;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != 2) {
      throw Error(ErrorKind::kSyntaxError, "row " + std::to_string(r) + ": expected 2 fields");
    }
    if (!rec[0].empty() && rec[0].front() == '#') {
      if (rec[0] == "# s_star") curve.s_star = number(rec[1], r);
      continue;
    }
    const CurveSample sample{number(rec[0], r), number(rec[1], r)};
    if (!have_peak || sample.value > curve.peak_value) curve.peak_value = sample.value;
    have_peak = true;
    curve.samples.push_back(sample);
  }
  return curve;
}

ComparisonReport build_report(const Portfolio& p, const AllocationOptions& options, std::string title) {
  ComparisonReport report;
  report.title = std::move(title);
  report.mode = options.mode;
  report.allocation = allocate(p, options);

  std::optional<DependencyContext> deps;
  if (!p.edges.empty()) deps.emplace(DependencyContext::at_actual_spend(p));
  const EvalContext ctx{deps ? &*deps : nullptr, options.mode};

  Money over = 0.0;
  Money under = 0.0;
  std::vector<std::string> over_ids;
  std::vector<std::string> under_ids;
  for (const auto& g : p.gdfs) {
    GdfComparison row;
    row.id = g.id;
    row.name = g.name;
    row.mandatory = g.mandatory;
    row.actual_spend = g.actual_spend;
    if (g.actual_spend) {
      row.value_at_actual = enbcds(g, *g.actual_spend, ctx);
      row.marginal_at_actual = enbcds_slope(g, *g.actual_spend, ctx);
    }
    const auto best = optimal_spend(g, ctx);
    row.s_star = best.s_star;
    row.value_at_star = best.value;
    row.allocated = report.allocation.spends.at(g.id);
    row.dropped = report.allocation.dropped.count(g.id) != 0;
    if (!row.dropped) row.value_at_allocated = report.allocation.value_at_solution.at(g.id);

    if (row.dropped) {
      row.status = "do not deploy";
    } else if (g.mandatory && best.value < 0.0) {
      row.status = "mandatory (minimise loss)";
    } else {
      row.status = "deploy";
    }

    const Money actual = g.actual_spend.value_or(0.0);
    const Money delta = row.allocated - actual;
    const Money eps = 1e-6 * std::max(1.0, std::max(actual, row.allocated));
    if (row.dropped) {
      row.recommendation = actual > 0.0 ? "stop funding; release " + money(actual) : "do not fund";
    } else if (!g.actual_spend) {
      row.recommendation = "fund at " + money(row.allocated);
    } else if (delta > eps) {
      row.recommendation = "under-funded: increase by " + money(delta);
    } else if (delta < -eps) {
      row.recommendation = "over-funded: reduce by " + money(-delta);
    } else {
      row.recommendation = "keep current spend";
    }
    if (g.actual_spend && delta < -eps) {
      over += -delta;
      over_ids.push_back(g.id);
    } else if (g.actual_spend && delta > eps) {
      under += delta;
      under_ids.push_back(g.id);
    }
    report.rows.push_back(std::move(row));
  }

  auto join = [](const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
    return s;
  };
  if (!over_ids.empty() && !under_ids.empty()) {
    report.advice.push_back("divert " + money(std::min(over, under)) + " from " + join(over_ids) + " to " +
                            join(under_ids));
  }
  for (const auto& row : report.rows) {
    if (row.dropped) {
      report.advice.push_back(row.id + ": ENBCDS stays negative at any affordable spend; do not deploy");
    }
  }
  return report;
}

std::string emit_report(const ComparisonReport& report) {
  std::ostringstream out;
  out << "ENBCDS comparison" << (report.title.empty() ? "" : ": " + report.title) << '\n';
  out << "mode " << to_string(report.mode) << ", budget " << money(report.allocation.budget) << ", allocated "
      << money(report.allocation.budget_used) << ", objective " << money(report.allocation.objective) << "\n\n";
  char line[512];
  std::snprintf(line, sizeof line, "%-16s %-26s %14s %16s %14s %16s %14s %16s  %s\n", "gdf", "status", "s^A",
                "ENBCDS(s^A)", "s*", "ENBCDS(s*)", "allocated", "ENBCDS(alloc)", "recommendation");
  out << line;
  auto opt = [](const std::optional<double>& v) { return v ? money(*v) : std::string("-"); };
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-16s %-26s %14s %16s %14s %16s %14s %16s  %s\n", r.id.c_str(),
                  r.status.c_str(), opt(r.actual_spend).c_str(), opt(r.value_at_actual).c_str(),
                  money(r.s_star).c_str(), money(r.value_at_star).c_str(), money(r.allocated).c_str(),
                  opt(r.value_at_allocated).c_str(), r.recommendation.c_str());
    out << line;
  }
  if (!report.advice.empty()) {
    out << '\n';
    for (const auto& a : report.advice) out << "* " << a << '\n';
  }
  return out.str();
}

namespace {

Json summary_json(const Summary& s) {
  return Json{{"mean", s.mean}, {"std", s.stddev}, {"p5", s.p5}, {"p50", s.p50}, {"p95", s.p95}};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const AllocationResult& r) {
  Json j;
  j["method"] = r.method;
  j["budget"] = r.budget;
  j["budget_used"] = r.budget_used;
  j["objective"] = r.objective;
  j["iterations"] = r.iterations;
  j["spends"] = Json::object();
  for (const auto& [id, s] : r.spends) j["spends"][id] = s;
  j["dropped"] = Json::array();
  for (const auto& id : r.dropped) j["dropped"].push_back(id);
  j["value_at_solution"] = Json::object();
  for (const auto& [id, v] : r.value_at_solution) j["value_at_solution"][id] = v;
  j["marginal_at_solution"] = Json::object();
  for (const auto& [id, m] : r.marginal_at_solution) j["marginal_at_solution"][id] = m;
  j["kkt"] = {{"lambda", r.kkt.lambda},
              {"budget_binding", r.kkt.budget_binding},
              {"interior_count", r.kkt.interior_count},
              {"max_interior_gap", r.kkt.max_interior_gap},
              {"max_violation", r.kkt.max_violation},
              {"tolerance", r.kkt.tolerance},
              {"satisfied", r.kkt.satisfied}};
  return j;
}

Json to_json(const ComparisonReport& report) {
  Json j;
  j["title"] = report.title;
  j["mode"] = to_string(report.mode);
  j["gdfs"] = Json::array();
  for (const auto& r : report.rows) {
    j["gdfs"].push_back({{"id", r.id},
                         {"name", r.name},
                         {"mandatory", r.mandatory},
                         {"status", r.status},
                         {"actual_spend", optional_json(r.actual_spend)},
                         {"enbcds_at_actual", optional_json(r.value_at_actual)},
                         {"marginal_at_actual", optional_json(r.marginal_at_actual)},
                         {"s_star", r.s_star},
                         {"enbcds_at_s_star", r.value_at_star},
                         {"allocated", r.allocated},
                         {"enbcds_at_allocated", optional_json(r.value_at_allocated)},
                         {"dropped", r.dropped},
                         {"recommendation", r.recommendation}});
  }
  j["allocation"] = to_json(report.allocation);
  j["advice"] = report.advice;
  return j;
}

Json to_json(const SensitivityReport& r) {
  Json j;
  j["draws"] = r.draws;
  j["seed"] = r.seed;
  j["clamp_count"] = r.clamp_count;
  j["params"] = Json::array();
  for (const auto& p : r.params) {
    j["params"].push_back({{"target", p.target}, {"sampled", summary_json(p.sampled)}, {"clamp_count", p.clamp_count}});
  }
  j["gdfs"] = Json::array();
  for (const auto& g : r.gdfs) {
    j["gdfs"].push_back({{"id", g.gdf_id},
                         {"evaluated_spend", g.evaluated_spend},
                         {"enbcds_at_spend", summary_json(g.enbcds_at_spend)},
                         {"s_star", summary_json(g.s_star)},
                         {"drop_frequency", g.drop_frequency}});
  }
  j["allocation_objective"] = summary_json(r.allocation_objective);
  return j;
}

Json to_json(const EnbcdsCurve& c) {
  Json j;
  j["gdf"] = c.gdf_id;
  j["s_star"] = c.s_star;
  j["peak_value"] = c.peak_value;
  j["actual_spend"] = optional_json(c.actual_spend);
  j["samples"] = Json::array();
  for (const auto& p : c.samples) j["samples"].push_back(Json::array({p.s, p.value}));
  return j;
}

Json to_json(const ValidationReport& report) {
  Json j;
  j["ok"] = report.ok();
  j["violations"] = Json::array();
  for (const auto& v : report.violations) {
    j["violations"].push_back({{"kind", to_string(v.kind)}, {"path", v.path}, {"message", v.message}});
  }
  return j;
}

std::string emit_allocation(const AllocationResult& r) {
  std::ostringstream out;
  out << "method " << r.method << ", iterations " << r.iterations << '\n';
  out << "budget " << money(r.budget) << ", used " << money(r.budget_used) << ", objective " << money(r.objective)
      << "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %14s %16s %12s  %s\n", "gdf", "spend", "ENBCDS", "marginal", "status");
  out << line;
  for (const auto& [id, s] : r.spends) {
    const bool dropped = r.dropped.count(id) != 0;
    const std::string value = dropped ? "-" : money(r.value_at_solution.at(id));
    char marginal[32] = "-";
    if (!dropped) std::snprintf(marginal, sizeof marginal, "%.6f", r.marginal_at_solution.at(id));
    std::snprintf(line, sizeof line, "%-16s %14s %16s %12s  %s\n", id.c_str(), money(s).c_str(), value.c_str(),
                  marginal, dropped ? "dropped" : "retained");
    out << line;
  }
  char kkt[256];
  std::snprintf(kkt, sizeof kkt,
                "\nKKT: lambda %.6g, budget %s, interior %zu, max gap %.3g, max violation %.3g (tol %.3g): %s\n",
                r.kkt.lambda, r.kkt.budget_binding ? "binding" : "slack", r.kkt.interior_count,
                r.kkt.max_interior_gap, r.kkt.max_violation, r.kkt.tolerance, r.kkt.satisfied ? "ok" : "VIOLATED");
  out << kkt;
  return out.str();
}

std::string emit_sensitivity(const SensitivityReport& r) {
  std::ostringstream out;
  out << "draws " << r.draws << ", seed " << r.seed << ", probability clamps " << r.clamp_count << "\n\n";
  std::vector<std::pair<std::string, const Summary*>> rows;
  for (const auto& p : r.params) rows.emplace_back("param " + p.target, &p.sampled);
  for (const auto& g : r.gdfs) {
    rows.emplace_back(g.gdf_id + " ENBCDS(" + money(g.evaluated_spend) + ")", &g.enbcds_at_spend);
    rows.emplace_back(g.gdf_id + " s*", &g.s_star);
  }
  rows.emplace_back("allocation objective", &r.allocation_objective);
  int width = 8;
  for (const auto& [name, s] : rows) width = std::max(width, static_cast<int>(name.size()));
  char line[128];
  out << std::left << std::setw(width) << "quantity";
  std::snprintf(line, sizeof line, " %16s %14s %16s %16s %16s\n", "mean", "std", "p5", "p50", "p95");
  out << line;
  for (const auto& [name, s] : rows) {
    out << std::left << std::setw(width) << name;
    std::snprintf(line, sizeof line, " %16.6g %14.6g %16.6g %16.6g %16.6g\n", s->mean, s->stddev, s->p5, s->p50, s->p95);
    out << line;
  }
  out << '\n';
  for (const auto& g : r.gdfs) {
    std::snprintf(line, sizeof line, "%-16s drop frequency %.4f\n", g.gdf_id.c_str(), g.drop_frequency);
    out << line;
  }
  return out.str();
}

}  // namespace enbcds
