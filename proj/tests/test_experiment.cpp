#include "doctest.h"

#include "pfscale/experiment/config.hpp"
#include "pfscale/experiment/csv.hpp"
#include "pfscale/experiment/runner.hpp"
#include "pfscale/experiment/svg.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pfscale;
using namespace pfscale::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pfscale-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) ++n;
  return n;
}

const char* kMinimal = R"(
[experiment]
kind = ess-collapse
[sweep]
D = [10]
N = [1000]
)";

void expect_error(const std::string& text, const std::string& key, int line) {
  try {
    parse_config(text);
    FAIL("expected a config error for " << key);
  } catch (const ConfigError& e) {
    CHECK(e.key() == key);
    CHECK(e.line() == line);
    CHECK(std::string(e.what()).find(key) != std::string::npos);
  }
}

void expect_attributable(const CsvTable& t) {
  for (const char* col : {"experiment", "D", "N", "trial", "seed", "status"}) {
    CHECK_MESSAGE(t.column(col).has_value(), "missing column " << col);
  }
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("minimal config gets the defaults") {
  const ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.kind == Kind::EssCollapse);
  CHECK(c.dt == 0.01);
  CHECK(c.trials == 20);
  CHECK(c.policy.kind == ResamplingPolicy::Kind::EssThreshold);
  CHECK(c.policy.value == 0.1);
  CHECK(c.dims == std::vector<Index>{10});
  CHECK(c.particles == std::vector<Index>{1000});
  CHECK(c.t1 == default_horizon(Kind::EssCollapse));
  CHECK(static_cast<double>(c.num_steps()) * c.dt == doctest::Approx(c.t1));
}

TEST_CASE("range lists and comments") {
  const ExperimentConfig c = parse_config(R"(
# desk version of the dimension sweep
[experiment]
kind = ess-collapse   # trailing comment
trials = 100
[sweep]
D = [10..50 step 10]
N = [10000]
n = 10
)");
  CHECK(c.dims == std::vector<Index>{10, 20, 30, 40, 50});
  CHECK(c.trials == 100);
  CHECK(c.essLevels == std::vector<double>{10.0});
}

TEST_CASE("config errors name the key and the line") {
  expect_error("[experiment]\nkind = ess-collapse\ndt = -0.01\n[sweep]\nD = 10\nN = 10\n", "experiment.dt", 3);
  expect_error("[experiment]\nkind = ess-collapse\ntrials = ten\n[sweep]\nD = 10\nN = 10\n", "experiment.trials", 3);
  expect_error("[experiment]\nkind = ess-collapse\n[sweep]\nD = 10\n", "sweep.N", 0);
  expect_error("[sweep]\nD = 10\n", "experiment.kind", 0);
  expect_error("[experiment]\nkind = ess-collapse\ncolour = red\n", "experiment.colour", 3);
  expect_error("[experiment]\nkind = ess-collapse\n[sweep]\nD = []\nN = 10\n", "sweep.D", 4);
  expect_error("[experiment]\nkind = ess-collapse\n[sweep]\nD = 10\nD = 20\nN = 10\n", "sweep.D", 5);
  expect_error("[experiment]\nkind = ess-collapse\nt1 = 1.005\n[sweep]\nD = 10\nN = 10\n", "experiment.t1", 3);
  expect_error("[experiment]\nkind = required-n\n[sweep]\nD = 10\n", "sweep.epsilon", 0);
  expect_error("[experiment]\nkind = resampling-dip\n[sweep]\nD = 10\nN = 10\n[filter]\nresampling = never\n",
               "filter.resampling", 7);
  CHECK_THROWS_AS(parse_config("[nonsense]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("kind = ess-collapse\n"), ConfigError);
}

TEST_CASE("config serializes every field") {
  const ExperimentConfig c = parse_config(kMinimal);
  const nlohmann::json j = to_json(c);
  for (const char* section : {"experiment", "model", "sweep", "filter", "search", "output"}) {
    CHECK(j.contains(section));
  }
  CHECK(j["experiment"]["kind"] == "ess-collapse");
  CHECK(j["filter"]["resampling"] == "ess:0.1");
  CHECK(j["experiment"]["numSteps"] == c.num_steps());
}

TEST_CASE("number formatting and CSV round trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333");
  CHECK(format_number(123456789012.0) == "1.23456789e+11");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(format_number(NAN) == "nan");
  CHECK(format_optional(std::nullopt) == "na");

  const fs::path dir = scratch("csv");
  {
    CsvWriter w((dir / "t.csv").string(), {"a", "b"});
    w.row({"1", "x"});
    w.row({"2", "y"});
    CHECK_THROWS_AS(w.row({"3"}), InvalidInput);
    w.close();
    CHECK(w.rows() == 2);
  }
  const CsvTable t = read_csv((dir / "t.csv").string());
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.cell(1, "b") == "y");
  CHECK_FALSE(t.column("c").has_value());
  CHECK_THROWS_AS(t.cell(0, "c"), InvalidInput);
  {
    CsvWriter empty((dir / "h.csv").string(), {"only"});
  }
  CHECK(read_csv((dir / "h.csv").string()).header == std::vector<std::string>{"only"});
}

TEST_CASE("SVG emitter") {
  PlotAxes axes{"title", "x", "y"};
  SUBCASE("two points make one polyline") {
    const SvgDocument doc = emit_svg({{"a", {1.0, 2.0}, {3.0, 4.0}}}, axes);
    CHECK(count(doc.text, "<polyline") == 1);
    CHECK(doc.droppedPoints == 0);
    CHECK(doc.text.rfind("<svg", 0) != std::string::npos);
    CHECK(doc.text.find("</svg>") != std::string::npos);
    CHECK(doc.text.find(">title<") != std::string::npos);
  }
  SUBCASE("non-positive values are dropped on log axes") {
    axes.logY = true;
    const SvgDocument doc = emit_svg({{"a", {1.0, 2.0, 3.0}, {1.0, -1.0, 0.0}}}, axes);
    CHECK(doc.droppedPoints == 2);
    CHECK(count(doc.text, "<polyline") == 0);
    const SvgDocument nan = emit_svg({{"a", {1.0, 2.0, 3.0}, {1.0, NAN, 2.0}}}, PlotAxes{});
    CHECK(nan.droppedPoints == 1);
  }
  SUBCASE("data and a dashed guide both render") {
    axes.logX = axes.logY = true;
    PlotSeries data{"T", {10, 20, 40}, {0.4, 0.21, 0.1}, PlotSeries::Style::LinesAndMarkers};
    PlotSeries guide{"D^-1", {10, 40}, {0.4, 0.1}, PlotSeries::Style::Lines, true};
    const SvgDocument doc = emit_svg({data, guide}, axes);
    CHECK(count(doc.text, "<polyline") == 2);
    CHECK(doc.text.find("stroke-dasharray") != std::string::npos);
    CHECK(doc.text == emit_svg({data, guide}, axes).text);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(emit_svg({}, axes), InvalidInput);
    CHECK_THROWS_AS(emit_svg({{"a", {1.0}, {}}}, axes), InvalidInput);
  }
}

TEST_CASE("ess-collapse run is byte-deterministic and worker-independent") {
  ExperimentConfig c = parse_config(R"(
[experiment]
kind = ess-collapse
seed = 17
trials = 5
t1 = 0.5
[sweep]
D = [10]
N = [1000]
[filter]
resampling = never
)");
  c.outDir = scratch("ess-a").string();
  c.workers = 1;
  const RunReport a = run_experiment(c);
  c.outDir = scratch("ess-b").string();
  const RunReport b = run_experiment(c);
  c.outDir = scratch("ess-c").string();
  c.workers = 4;
  run_experiment(c);
  CHECK(a.trialsReported == 5);
  CHECK(a.divergedTrials == 0);
  for (const char* f : {"ess-collapse.csv", "ess-collapse-mean.csv", "ess-collapse.svg"}) {
    const std::string first = slurp(fs::temp_directory_path() / "pfscale-test-ess-a" / f);
    CHECK(!first.empty());
    CHECK(first == slurp(fs::temp_directory_path() / "pfscale-test-ess-b" / f));
    CHECK(first == slurp(fs::temp_directory_path() / "pfscale-test-ess-c" / f));
  }
  const CsvTable t = read_csv((fs::temp_directory_path() / "pfscale-test-ess-a" / "ess-collapse.csv").string());
  expect_attributable(t);
  CHECK(t.rows.size() == 5 * 50);
  CHECK(t.cell(0, "ess") == "1000");
  const auto meta = nlohmann::json::parse(slurp(fs::temp_directory_path() / "pfscale-test-ess-a" / "metadata.json"));
  CHECK(meta.contains("config"));
  CHECK(meta.contains("codeVersion"));
  CHECK(meta["config"]["experiment"]["seed"] == 17);
  CHECK(b.files == a.files);
}

TEST_CASE("stopping-scaling run emits grid and fits") {
  ExperimentConfig c = parse_config(R"(
[experiment]
kind = stopping-scaling
trials = 4
t1 = 3
[sweep]
D = [10, 20, 40]
N = [300]
n = 10
)");
  c.outDir = scratch("stop").string();
  const RunReport r = run_experiment(c);
  const fs::path dir = c.outDir;
  const CsvTable grid = read_csv((dir / "stopping-scaling.csv").string());
  expect_attributable(grid);
  CHECK(grid.rows.size() == 3);
  for (const char* col : {"n", "meanT", "stderrT", "trials", "censored"}) CHECK(grid.column(col).has_value());
  const CsvTable fits = read_csv((dir / "stopping-scaling-fits.csv").string());
  bool sawPower = false;
  for (std::size_t i = 0; i < fits.rows.size(); ++i) sawPower = sawPower || fits.cell(i, "kind") == "powerLaw";
  CHECK(sawPower);
  const std::string svg = slurp(dir / "stopping-scaling.svg");
  CHECK(count(svg, "<polyline") >= 2);
  CHECK(r.divergedTrials == 0);
}

TEST_CASE("resampling-dip run emits segments and tau") {
  ExperimentConfig c = parse_config(R"(
[experiment]
kind = resampling-dip
trials = 3
t1 = 2.5
[sweep]
D = [10]
N = [200]
n = 10
[filter]
resampling = interval:1.0
)");
  c.outDir = scratch("dip").string();
  run_experiment(c);
  const fs::path dir = c.outDir;
  const CsvTable seg = read_csv((dir / "resampling-dip.csv").string());
  expect_attributable(seg);
  for (const char* col : {"resampleIndex", "tOffset", "mseCentered", "tauMse"}) CHECK(seg.column(col).has_value());
  const CsvTable tau = read_csv((dir / "resampling-dip-tau.csv").string());
  expect_attributable(tau);
  CHECK(tau.column("tauMse").has_value());
  CHECK(fs::exists(dir / "resampling-dip.svg"));
}

TEST_CASE("required-n run emits sizes per filter") {
  ExperimentConfig c = parse_config(R"(
[experiment]
kind = required-n
t1 = 10
[sweep]
D = [2, 4, 6]
epsilon = 1.5
[filter]
filters = bpf, fpf
[search]
initial_trials = 2
max_trials = 4
max_particles = 64
)");
  c.outDir = scratch("reqn").string();
  run_experiment(c);
  const fs::path dir = c.outDir;
  const CsvTable t = read_csv((dir / "required-n.csv").string());
  expect_attributable(t);
  CHECK(t.rows.size() == 6);
  for (const char* col : {"filter", "epsilon", "Nrequired", "trialsUsed", "medianStepSeconds"}) {
    CHECK(t.column(col).has_value());
  }
  CHECK(t.cell(0, "medianStepSeconds") == "na");
  CHECK(fs::exists(dir / "required-n-fits.csv"));
  CHECK(fs::exists(dir / "required-n.svg"));
}

TEST_CASE("plot_table re-renders a written table") {
  ExperimentConfig c = parse_config(R"(
[experiment]
kind = ess-collapse
trials = 2
t1 = 0.2
[sweep]
D = [5, 10]
N = [100]
)");
  c.outDir = scratch("plot").string();
  run_experiment(c);
  const CsvTable t = read_csv((fs::path(c.outDir) / "ess-collapse-mean.csv").string());
  const SvgDocument doc = plot_table(t, Kind::EssCollapse);
  CHECK(doc.text == slurp(fs::path(c.outDir) / "ess-collapse.svg"));
  CHECK_THROWS_AS(plot_table(t, Kind::RequiredN), InvalidInput);
}

}
