#include <doctest.h>

#include <cmath>
#include <limits>

#include "enbcds/error.hpp"
#include "enbcds/output.hpp"
#include "enbcds/scenario.hpp"
#include "support/generators.hpp"

using namespace enbcds;

namespace {

ScenarioFile shipped(const std::string& name) {
  return load_scenario(std::string(ENBCDS_SCENARIO_DIR) + "/" + name + ".json");
}

EnbcdsCurve flat_curve() {
  EnbcdsCurve c;
  c.gdf_id = "x";
  c.samples = {{0, 4}, {1, 4}};
  c.s_star = 0;
  c.peak_value = 4;
  return c;
}

}  // namespace

TEST_SUITE("output") {
  TEST_CASE("shortest round-trip numbers") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-495000) == "-495000");
    CHECK(format_number(1e300) == "1e+300");
    testing::Gen gen(71);
    for (int i = 0; i < 10000; ++i) {
      const double v = gen.uniform(-1, 1) * std::pow(10.0, gen.integer(-300, 300));
      CHECK(std::stod(format_number(v)) == v);
    }
  }

  TEST_CASE("two-sample CSV") {
    const std::string csv = emit_curve(flat_curve(), CurveFormat::kCsv);
    CHECK(csv == "s,enbcds\r\n0,4\r\n1,4\r\n# s_star,0\r\n");
    const auto records = parse_csv_records(csv);
    CHECK(records.size() == 4);
  }

  TEST_CASE("empty curve") {
    EnbcdsCurve c = flat_curve();
    c.samples.pop_back();
    CHECK_THROWS_AS(emit_curve(c, CurveFormat::kCsv), Error);
    CHECK_THROWS_AS(emit_curve(c, CurveFormat::kSvg), Error);
  }

  TEST_CASE("RFC 4180 parsing") {
    const auto r = parse_csv_records("a,\"b,c\",\"say \"\"hi\"\"\"\r\n1,2,3\n\"multi\r\nline\",,\r\n");
    REQUIRE(r.size() == 3);
    CHECK(r[0] == std::vector<std::string>{"a", "b,c", "say \"hi\""});
    CHECK(r[1] == std::vector<std::string>{"1", "2", "3"});
    CHECK(r[2] == std::vector<std::string>{"multi\r\nline", "", ""});
    CHECK_THROWS_AS(parse_csv_records("\"unterminated"), Error);
  }

  TEST_CASE("random curves round-trip through CSV") {
    testing::Gen gen(72);
    for (int t = 0; t < 100; ++t) {
      const Gdf x = gen.gdf("x");
      const auto c = enbcds_curve(x, std::nullopt, static_cast<std::size_t>(gen.integer(2, 300)));
      const std::string csv = emit_curve(c, CurveFormat::kCsv);
      for (const auto& rec : parse_csv_records(csv)) CHECK((rec.size() == 2));
      const auto back = parse_curve_csv(csv);
      CHECK(back.samples == c.samples);
      CHECK(back.s_star == c.s_star);
    }
  }

  TEST_CASE("SVG for the remote SCADA curve") {
    const auto sc = shipped("remote-scada");
    const auto c = enbcds_curve(sc.portfolio.gdfs[0], std::nullopt, 200);
    const std::string svg = emit_curve(c, CurveFormat::kSvg);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("version=\"1.1\"") != std::string::npos);
    CHECK(svg.find("<circle id=\"peak\"") != std::string::npos);
    CHECK(svg.find("s* = " + format_number(c.s_star)) != std::string::npos);
    CHECK(svg.find("<line id=\"actual\"") != std::string::npos);
    CHECK(svg.find("ENBCDS(0) = -") != std::string::npos);
    CHECK(c.samples.front().value < 0);
  }

  TEST_CASE("empty portfolio report is header only") {
    Portfolio p;
    const auto r = build_report(p, {}, "empty");
    CHECK(r.rows.empty());
    CHECK(r.advice.empty());
    const std::string text = emit_report(r);
    CHECK(text.find("gdf") != std::string::npos);
    CHECK(text.find("deploy") == std::string::npos);
  }

  TEST_CASE("three-GDF report") {
    const auto sc = shipped("fig2-three-gdfs");
    const auto r = build_report(sc.portfolio, {}, sc.metadata.title);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[2].id == "z");
    CHECK(r.rows[2].status == "do not deploy");
    CHECK(r.rows[0].status == "deploy");
    CHECK(r.rows[0].recommendation.find("under-funded") == 0);
    bool divert = false;
    for (const auto& a : r.advice) divert = divert || a.find("divert") == 0;
    CHECK(divert);
    const std::string text = emit_report(r);
    CHECK(text == emit_report(build_report(sc.portfolio, {}, sc.metadata.title)));
    CHECK(to_json(r).dump() == to_json(build_report(sc.portfolio, {}, sc.metadata.title)).dump());
  }

  TEST_CASE("mandatory status in the report") {
    const auto sc = shipped("wifi-thermostats");
    const auto r = build_report(sc.portfolio);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].status == "mandatory (minimise loss)");
    CHECK_FALSE(r.rows[0].dropped);
  }

  TEST_CASE("json mirrors") {
    const auto sc = shipped("smart-meters-vs-relays");
    const auto a = allocate(sc.portfolio);
    const auto j = to_json(a);
    CHECK(j["spends"]["relays"].get<double>() == a.spends.at("relays"));
    CHECK(j.contains("kkt"));
    const auto c = to_json(enbcds_curve(sc.portfolio.gdfs[0], std::nullopt, 3));
    CHECK(c["samples"].size() == 3);
    CHECK(to_json(validate_portfolio(sc.portfolio))["ok"].get<bool>());
    CHECK(emit_allocation(a).find("KKT") != std::string::npos);
  }
}
