#include "enbcds/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "enbcds/error.hpp"
#include "enbcds/net_benefit.hpp"
#include "enbcds/optimize.hpp"
#include "enbcds/output.hpp"
#include "enbcds/scenario.hpp"
#include "enbcds/sensitivity.hpp"

namespace enbcds::cli {

namespace {

namespace fs = std::filesystem;

// Writes through a sibling temp file so a failed run never leaves a partial
// output behind.
void write_atomically(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::kInvalidArgument, "cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw Error(ErrorKind::kInvalidArgument, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::kInvalidArgument, "cannot move output into '" + target.string() + "': " + ec.message());
  }
}

struct Globals {
  bool json = false;
  bool lenient = false;
  std::string mode = "additive";
  std::string output;
};

CybMode parse_mode(const std::string& mode) {
  return mode == "literal" ? CybMode::kLiteral : CybMode::kAdditive;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

EvalContext context_for(const std::optional<DependencyContext>& deps, CybMode mode) {
  return EvalContext{deps ? &*deps : nullptr, mode};
}

std::optional<DependencyContext> dependencies(const Portfolio& p) {
  if (p.edges.empty()) return std::nullopt;
  return DependencyContext::at_actual_spend(p);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expected net benefit of cyber-defense spending on grid digital functionalities", "enbcds"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json, "Emit machine-readable JSON");
  app.add_flag("--lenient", g.lenient, "Warn on unknown scenario fields instead of failing");
  app.add_option("--mode", g.mode, "Cost model: additive (default) or literal")
      ->check(CLI::IsMember({"additive", "literal"}));
  app.add_option("-o,--output", g.output, "Write output to this file instead of stdout");

  std::string file;
  std::string gdf_id;
  double spend = 0.0;
  std::optional<double> s_max;
  std::size_t samples = 200;
  std::string format = "csv";
  std::optional<double> budget;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  std::string plots;

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("file", file, "Scenario file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "ENBCDS of one GDF at a given spend");
  evaluate->add_option("file", file, "Scenario file")->required();
  evaluate->add_option("--gdf", gdf_id, "GDF id")->required();
  evaluate->add_option("--spend", spend, "Defense spend")->required()->check(CLI::NonNegativeNumber);

  auto* curve = app.add_subcommand("curve", "Sampled ENBCDS curve as CSV or SVG");
  curve->add_option("file", file, "Scenario file")->required();
  curve->add_option("--gdf", gdf_id, "GDF id")->required();
  curve->add_option("--s-max", s_max, "Upper end of the spend range (default f(0))")->check(CLI::PositiveNumber);
  curve->add_option("--samples", samples, "Number of samples")->check(CLI::Range(2, 1000000));
  curve->add_option("--format", format, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));

  auto* optimize = app.add_subcommand("optimize", "Optimal spend s* for one GDF");
  optimize->add_option("file", file, "Scenario file")->required();
  optimize->add_option("--gdf", gdf_id, "GDF id")->required();

  auto* alloc = app.add_subcommand("allocate", "Split the defense budget across GDFs");
  alloc->add_option("file", file, "Scenario file")->required();
  alloc->add_option("--budget", budget, "Override the scenario budget")->check(CLI::NonNegativeNumber);

  auto* sample_cmd = app.add_subcommand("sample", "Monte Carlo sensitivity to uncertain parameters");
  sample_cmd->add_option("file", file, "Scenario file")->required();
  sample_cmd->add_option("--draws", draws, "Number of draws")->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", seed, "Random seed")->required();
  sample_cmd->add_option("--budget", budget, "Override the scenario budget")->check(CLI::NonNegativeNumber);

  auto* report = app.add_subcommand("report", "Comparison report across all GDFs");
  report->add_option("file", file, "Scenario file")->required();
  report->add_option("--budget", budget, "Override the scenario budget")->check(CLI::NonNegativeNumber);
  report->add_option("--plots", plots, "Directory for per-GDF SVG curves");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const CybMode mode = parse_mode(g.mode);
  try {
    std::string text;
    ParseOptions parse_opts;
    parse_opts.lenient = g.lenient;

    if (validate->parsed()) {
      parse_opts.validate = false;
      const auto scenario = load_scenario(file, parse_opts);
      auto result = validate_portfolio(scenario.portfolio);
      if (result.ok()) {
        for (std::size_t i = 0; i < scenario.uncertainty.size(); ++i) {
          const std::string path = "/uncertainty/" + std::to_string(i);
          try {
            check_distribution(scenario.uncertainty[i].distribution, path + "/distribution");
            resolve_target(scenario.portfolio, scenario.uncertainty[i].target);
          } catch (const Error& e) {
            result.violations.push_back({ViolationKind::kUnknownReference, path, e.what()});
          }
        }
      }
      for (const auto& w : scenario.warnings) err << "warning: " << w << '\n';
      if (g.json) {
        text = dump(to_json(result));
      } else {
        text = result.ok() ? "OK\n" : result.to_string();
      }
      if (g.output.empty()) {
        out << text;
      } else {
        write_atomically(g.output, text);
      }
      return result.ok() ? kExitOk : kExitDomainError;
    }

    const auto scenario = load_scenario(file, parse_opts);
    for (const auto& w : scenario.warnings) err << "warning: " << w << '\n';
    const Portfolio& p = scenario.portfolio;
    const auto deps = dependencies(p);
    const EvalContext ctx = context_for(deps, mode);

    if (evaluate->parsed()) {
      const Gdf& x = p.gdf(gdf_id);
      const Money value = enbcds(x, spend, ctx);
      if (g.json) {
        nlohmann::ordered_json j;
        j["gdf"] = gdf_id;
        j["spend"] = spend;
        j["enbcds"] = value;
        j["expected_cyber_cost"] = expected_cyber_cost(x, spend, ctx);
        j["expected_noncyber_cost"] = expected_noncyber_cost(x);
        text = dump(j);
      } else {
        text = format_number(value) + "\n";
      }
    } else if (curve->parsed()) {
      const auto c = enbcds_curve(p.gdf(gdf_id), s_max, samples, ctx);
      if (g.json) {
        text = dump(to_json(c));
      } else {
        text = emit_curve(c, format == "svg" ? CurveFormat::kSvg : CurveFormat::kCsv);
      }
    } else if (optimize->parsed()) {
      const auto best = optimal_spend(p.gdf(gdf_id), ctx);
      if (g.json) {
        nlohmann::ordered_json j;
        j["gdf"] = gdf_id;
        j["s_star"] = best.s_star;
        j["peak_value"] = best.value;
        j["closed_form"] = best.closed_form ? nlohmann::ordered_json(*best.closed_form) : nullptr;
        text = dump(j);
      } else {
        text = "s* = " + format_number(best.s_star) + "\npeak = " + format_number(best.value) + "\n";
        if (best.closed_form) text += "closed form s* = " + format_number(*best.closed_form) + "\n";
      }
    } else if (alloc->parsed()) {
      AllocationOptions opts;
      opts.mode = mode;
      opts.budget = budget;
      const auto result = allocate(p, opts);
      text = g.json ? dump(to_json(result)) : emit_allocation(result);
    } else if (sample_cmd->parsed()) {
      SampleOptions opts;
      opts.mode = mode;
      opts.budget = budget;
      opts.threads = threads_from_env();
      const auto result = sample(p, scenario.uncertainty, draws, seed, opts);
      text = g.json ? dump(to_json(result)) : emit_sensitivity(result);
    } else if (report->parsed()) {
      AllocationOptions opts;
      opts.mode = mode;
      opts.budget = budget;
      const auto result = build_report(p, opts, scenario.metadata.title);
      text = g.json ? dump(to_json(result)) : emit_report(result);
      if (!plots.empty()) {
        fs::create_directories(plots);
        for (const auto& x : p.gdfs) {
          const auto c = enbcds_curve(x, std::nullopt, 200, ctx);
          write_atomically(fs::path(plots) / (x.id + ".svg"), emit_curve(c, CurveFormat::kSvg));
        }
      }
    }

    if (g.output.empty()) {
      out << text;
    } else {
      write_atomically(g.output, text);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]";
    if (!e.path().empty()) err << " at " << e.path();
    err << ": " << e.what() << '\n';
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
}

}  // namespace enbcds::cli
