#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lineens/runner.hpp"

using namespace lineens;

namespace {

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems)
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

RunConfig small_bbjump(std::uint64_t seed) {
  return parse_config("experiment = bbjump\nn = 5000\nseed = " + std::to_string(seed) + "\n");
}

const std::string kSeparationExample =
    "experiment = separation\nk = 2\nL = 1.0\nt = 100\nM = 1.5\nn_samples = 100000\nseed = 42";

}  // namespace

TEST_CASE("parse_config happy path") {
  const RunConfig rc = parse_config(kSeparationExample);
  CHECK(rc.experiment == "separation");
  CHECK(rc.seed == 42);
  CHECK(rc.threads == 1);
  CHECK(rc.output_format == OutputFormat::JsonLines);
  CHECK(rc.parameters.at("M") == "1.5");
  CHECK(rc.parameters.at("n_samples") == "100000");
  CHECK(rc.parameters.count("seed") == 0);
}

TEST_CASE("comments, blank lines and whitespace") {
  const RunConfig rc = parse_config(
      "# leading comment\n\n  experiment=ordering   # trailing\n"
      "t_list = 1, 8 ,64\r\nseed = 3\nformat = csv\n");
  CHECK(rc.experiment == "ordering");
  CHECK(rc.parameters.at("t_list") == "1, 8 ,64");
  CHECK(rc.output_format == OutputFormat::Csv);
}

TEST_CASE("validation errors") {
  CHECK(problems_of("experiment = separation\nk = 2") == std::vector<std::string>{"seed required"});
  CHECK(mentions(problems_of("experiment = separation\nM = 0.5\nL = 1.0\nseed = 1"), "M >= sqrt(L)"));
  const auto many = problems_of("experiment = separation\nk = two\nfoo = 1\nthreads = 0");
  CHECK(many.size() == 4);
  CHECK(mentions(many, "seed required"));
  CHECK(mentions(many, "k: expected an integer"));
  CHECK(mentions(many, "unknown parameter 'foo'"));
  CHECK(mentions(many, "threads"));
  CHECK(mentions(problems_of("seed = 1"), "experiment required"));
  CHECK(mentions(problems_of("experiment = nope\nseed = 1"), "unknown experiment 'nope'"));
  CHECK(mentions(problems_of("experiment = ordering\nt_list = 1,,2\nseed = 1"), "t_list"));
  CHECK(mentions(problems_of("experiment = fluctuation\nd = 2\nn = 1\nseed = 1"), "d must lie"));
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_config("experiment = separation\nseed = 1\nthis line has no equals\nk = 1\nk = 2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    const std::string what = e.what();
    CHECK(what.find("line 3") != std::string::npos);
    CHECK(what.find("line 5: duplicate key 'k'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("= 3\n"), ParseError);
  CHECK_THROWS_AS(parse_config("k =\n"), ParseError);
}

TEST_CASE("overrides") {
  ConfigOverrides ov;
  ov.seed = 99;
  ov.threads = 4;
  ov.output_path = "x.csv";
  ov.format = OutputFormat::Csv;
  const RunConfig rc = parse_config("experiment = bbjump\n", ov);
  CHECK(rc.seed == 99);
  CHECK(rc.threads == 4);
  CHECK(rc.output_path == "x.csv");
  CHECK(rc.output_format == OutputFormat::Csv);
}

TEST_CASE("emit_default_config round trip") {
  for (const auto& info : list_experiments()) {
    CAPTURE(info.name);
    const RunConfig rc = parse_config(emit_default_config(info.name));
    CHECK(rc.experiment == info.name);
    CHECK(rc.parameters == default_parameters(info.name));
  }
  CHECK(list_experiments().size() == 5);
  CHECK_THROWS_AS(emit_default_config("nope"), ValidationError);
}

TEST_CASE("reports are byte-identical for identical config and seed") {
  RunConfig rc = small_bbjump(7);
  rc.record_wall_time = false;
  std::ostringstream a, b, c;
  write_report(a, run_experiment(rc), rc);
  write_report(b, run_experiment(rc), rc);
  CHECK(a.str() == b.str());
  rc.seed = 8;
  write_report(c, run_experiment(rc), rc);
  CHECK(a.str() != c.str());
  // With timing on, only the final timing record differs.
  rc = small_bbjump(7);
  std::ostringstream timed;
  write_report(timed, run_experiment(rc), rc);
  const std::string t = timed.str();
  const auto cut = t.rfind("{\"record\":\"timing\"");
  REQUIRE(cut != std::string::npos);
  CHECK(t.substr(0, cut) == a.str());
}

TEST_CASE("csv and json-lines encode the same records") {
  RunConfig rc = small_bbjump(3);
  const ExperimentReport report = run_experiment(rc);
  rc.output_format = OutputFormat::Csv;
  std::ostringstream csv;
  write_report(csv, report, rc);
  rc.output_format = OutputFormat::JsonLines;
  std::ostringstream jsonl;
  write_report(jsonl, report, rc);

  std::istringstream cs(csv.str());
  std::istringstream js(jsonl.str());
  std::string header_line;
  std::getline(cs, header_line);
  const auto header = split_csv(header_line);
  std::string cline, jline;
  int estimates = 0;
  while (std::getline(cs, cline)) {
    REQUIRE(std::getline(js, jline));
    const auto fields = split_csv(cline);
    REQUIRE(fields.size() == header.size());
    const auto j = nlohmann::json::parse(jline);
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& col = header[i];
      CAPTURE(col);
      if (!j.contains(col)) {
        CHECK(fields[i].empty());
      } else if (j[col].is_boolean()) {
        CHECK(fields[i] == (j[col].get<bool>() ? "true" : "false"));
      } else if (j[col].is_number()) {
        CHECK(std::stod(fields[i]) == j[col].get<double>());
      } else {
        CHECK(fields[i] == j[col].get<std::string>());
      }
    }
    estimates += j["record"] == "estimate";
  }
  CHECK_FALSE(std::getline(js, jline));
  CHECK(estimates == static_cast<int>(report.estimates.size()));
}

TEST_CASE("run exit codes and output location") {
  const auto dir = std::filesystem::temp_directory_path() / "lineens_runner_test";
  std::filesystem::remove_all(dir);
  ::setenv(kOutputDirEnv, dir.string().c_str(), 1);
  std::ostringstream err;

  RunConfig ok = small_bbjump(1);
  CHECK(output_file(ok) == (dir / "bbjump-seed1.jsonl").string());
  CHECK(run(ok, err) == 0);
  CHECK(std::filesystem::exists(dir / "bbjump-seed1.jsonl"));
  const std::string first = read_file(dir / "bbjump-seed1.jsonl");
  CHECK(first.find("\"label\":\"artifact\",\"value\":\"lineens 0.1.0\"") != std::string::npos);
  CHECK(first.find("wall_time_seconds") != std::string::npos);

  ok.record_wall_time = false;
  ok.output_path = (dir / "a.csv").string();
  ok.output_format = OutputFormat::Csv;
  CHECK(run(ok, err) == 0);
  const std::string a = read_file(dir / "a.csv");
  CHECK(run(ok, err) == 0);
  CHECK(read_file(dir / "a.csv") == a);

  // Free proposals never reach E at M = 2, so "P(E) > 0" fails.
  RunConfig failing =
      parse_config("experiment = separation\nM = 2\nproposal_mix = 0\nn_samples = 2000\nseed = 1\n");
  failing.output_path = (dir / "fail.jsonl").string();
  CHECK(run(failing, err) == 1);
  CHECK(err.str().find("check failed: P(E) > 0") != std::string::npos);

  RunConfig unknown = ok;
  unknown.experiment = "nope";
  CHECK(run(unknown, err) == 2);

  RunConfig broken = ok;
  broken.parameters["n"] = "0";
  CHECK(run(broken, err) == 2);

  ::unsetenv(kOutputDirEnv);
  CHECK(output_file(small_bbjump(2)) == (std::filesystem::path("results") / "bbjump-seed2.jsonl").string());
  std::filesystem::remove_all(dir);
}
