#include "lineens/runner.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace lineens {

namespace {

// ---------------------------------------------------------------------------
// Typed parameter conversion
// ---------------------------------------------------------------------------

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_value(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

template <class Int>
bool parse_value(const std::string& s, Int& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  if (ec == std::errc() && p == end) return true;
  // Integral reals such as 1e5 are accepted.
  double d = 0.0;
  if (!parse_value(s, d) || d != std::floor(d)) return false;
  if (d < static_cast<double>(std::numeric_limits<Int>::min()) ||
      d >= static_cast<double>(std::numeric_limits<Int>::max()))
    return false;
  out = static_cast<Int>(d);
  return true;
}

bool parse_value(const std::string& s, bool& out) {
  if (s == "true" || s == "1") return out = true, true;
  if (s == "false" || s == "0") return out = false, true;
  return false;
}

bool parse_value(const std::string& s, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const std::string item = trim(std::string_view(s).substr(pos, comma - pos));
    double v = 0.0;
    if (!parse_value(item, v)) return false;
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return !out.empty();
}

std::string type_name(const double&) { return "a real number"; }
std::string type_name(const int&) { return "an integer"; }
std::string type_name(const std::int64_t&) { return "an integer"; }
std::string type_name(const bool&) { return "true or false"; }
std::string type_name(const std::vector<double>&) { return "a comma-separated list of reals"; }

std::string format_value(double v) { return format_real(v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::int64_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ", ") + format_real(x);
  return s;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

struct Entry {
  ExperimentInfo info;
  std::function<std::vector<std::pair<std::string, std::string>>()> defaults;
  /// Builds and validates the config; appends problems instead of throwing.
  std::function<void(const std::map<std::string, std::string>&, std::vector<std::string>&)> check;
  std::function<ExperimentReport(const RunConfig&)> run;
};

template <class Cfg, class Visit, class Fn>
Entry make_entry(std::string name, std::string description, Visit visit, Fn fn) {
  auto build = [visit](const std::map<std::string, std::string>& params,
                       std::vector<std::string>& problems) {
    Cfg cfg;
    std::map<std::string, bool> known;
    visit(cfg, [&](const char* key, auto& field) {
      known[key] = true;
      const auto it = params.find(key);
      if (it == params.end()) return;
      if (!parse_value(it->second, field))
        problems.push_back(std::string(key) + ": expected " + type_name(field) + ", got '" +
                           it->second + "'");
    });
    for (const auto& [key, value] : params)
      if (!known.count(key)) problems.push_back("unknown parameter '" + key + "'");
    return cfg;
  };
  Entry e;
  e.info = {std::move(name), std::move(description)};
  e.defaults = [visit] {
    Cfg cfg;
    std::vector<std::pair<std::string, std::string>> out;
    visit(cfg, [&](const char* key, auto& field) { out.emplace_back(key, format_value(field)); });
    return out;
  };
  e.check = [build](const std::map<std::string, std::string>& params,
                    std::vector<std::string>& problems) {
    const std::size_t before = problems.size();
    Cfg cfg = build(params, problems);
    if (problems.size() != before) return;
    try {
      cfg.validate();
    } catch (const ValidationError& v) {
      problems.insert(problems.end(), v.problems().begin(), v.problems().end());
    }
  };
  e.run = [build, fn](const RunConfig& rc) {
    std::vector<std::string> problems;
    Cfg cfg = build(rc.parameters, problems);
    if (!problems.empty()) throw ValidationError(problems);
    cfg.seed = rc.seed;
    cfg.threads = rc.threads;
    return fn(cfg);
  };
  return e;
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> v;
    auto separation_fields = [](SeparationConfig& c, auto&& f) {
      f("k", c.k);
      f("L", c.L);
      f("t", c.t);
      f("M", c.M);
      f("n_samples", c.n_samples);
      f("points_per_unit", c.points_per_unit);
      f("proposal_mix", c.proposal_mix);
      f("min_ess", c.min_ess);
    };
    v.push_back(make_entry<SeparationConfig>(
        "separation", "importance-sampled separation probabilities on nested intervals",
        separation_fields, run_separation_experiment));
    v.push_back(make_entry<SeparationConfig>(
        "z_lowerbound", "normalizing constants on (-L, L) given well-separated endpoints",
        [separation_fields](SeparationConfig& c, auto&& f) {
          separation_fields(c, f);
          f("z_boundaries", c.z_boundaries);
          f("z_samples", c.z_samples);
        },
        run_z_lowerbound_experiment));
    v.push_back(make_entry<OrderingConfig>(
        "ordering", "probability that curves k and k+1 come within rho, across t",
        [](OrderingConfig& c, auto&& f) {
          f("k", c.k);
          f("t_list", c.t_list);
          f("gap", c.gap);
          f("rho", c.rho);
          f("n", c.n);
          f("grid_points", c.grid_points);
          f("burn_in", c.burn_in);
        },
        run_ordering_experiment));
    v.push_back(make_entry<FluctuationConfig>(
        "fluctuation", "three-curve big-fluctuation bound through good boundary data",
        [](FluctuationConfig& c, auto&& f) {
          f("d", c.d);
          f("K_list", c.K_list);
          f("boundary_box", c.boundary_box);
          f("boundary_spacing", c.boundary_spacing);
          f("t", c.t);
          f("n", c.n);
          f("z_samples", c.z_samples);
          f("grid_points", c.grid_points);
        },
        run_fluctuation_experiment));
    v.push_back(make_entry<BBJumpConfig>(
        "bbjump", "probability that a bridge is lifted into [lambda M, (lambda + 4) M]",
        [](BBJumpConfig& c, auto&& f) {
          f("L", c.L);
          f("M", c.M);
          f("lambda", c.lambda);
          f("x", c.x);
          f("y", c.y);
          f("ell", c.ell);
          f("r", c.r);
          f("k", c.k);
          f("n", c.n);
          f("points_per_unit", c.points_per_unit);
          f("proposal_mix", c.proposal_mix);
          f("check_preconditions", c.check_preconditions);
        },
        run_bbjump_check));
    return v;
  }();
  return entries;
}

const Entry* find_entry(std::string_view name) {
  for (const auto& e : registry())
    if (e.info.name == name) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Report encoding: both formats carry the same records and fields.
// ---------------------------------------------------------------------------

struct Record {
  std::string record;
  std::vector<std::pair<std::string, std::string>> text;     // string fields
  std::vector<std::pair<std::string, std::string>> numbers;  // numeric fields, preformatted
  std::optional<bool> pass;
};

const char* kCsvColumns[] = {"record", "label",   "value", "mean",  "std_error",
                             "n_samples", "seed", "pass",  "detail"};

std::vector<Record> records(const ExperimentReport& r, const RunConfig& c) {
  std::vector<Record> out;
  out.push_back({"meta", {{"label", "artifact"}, {"value", "lineens " + std::string(kArtifactVersion)}}, {}, {}});
  out.push_back({"meta", {{"label", "experiment"}, {"value", r.name}}, {}, {}});
  out.push_back({"meta", {{"label", "seed"}, {"value", std::to_string(c.seed)}}, {}, {}});
  out.push_back({"meta", {{"label", "threads"}, {"value", std::to_string(c.threads)}}, {}, {}});
  out.push_back({"meta", {{"label", "mode"}, {"value", "chunked streams, thread-count independent"}}, {}, {}});
  for (const auto& [k, v] : r.config) out.push_back({"config", {{"label", k}, {"value", v}}, {}, {}});
  for (const auto& e : r.estimates) {
    out.push_back({"estimate",
                   {{"label", e.label}},
                   {{"mean", format_real(e.estimate.mean)},
                    {"std_error", format_real(e.estimate.std_error)},
                    {"n_samples", std::to_string(e.estimate.n_samples)},
                    {"seed", std::to_string(e.estimate.seed)}},
                   {}});
  }
  for (const auto& ch : r.checks)
    out.push_back({"check", {{"label", ch.label}, {"detail", ch.detail}}, {}, ch.pass});
  if (c.record_wall_time)
    out.push_back({"timing", {{"label", "wall_time_seconds"}}, {{"value", format_real(r.runtime_seconds)}}, {}});
  return out;
}

// JSON has no inf/nan; those are written as strings.
std::string json_number(const std::string& s) {
  double d = 0.0;
  if (parse_value(s, d) && !std::isfinite(d)) return nlohmann::json(s).dump();
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<ExperimentInfo> list_experiments() {
  std::vector<ExperimentInfo> out;
  for (const auto& e : registry()) out.push_back(e.info);
  return out;
}

std::map<std::string, std::string> default_parameters(std::string_view experiment) {
  const Entry* e = find_entry(experiment);
  if (!e) throw ValidationError({"unknown experiment '" + std::string(experiment) + "'"});
  const auto d = e->defaults();
  return {d.begin(), d.end()};
}

std::string emit_default_config(std::string_view experiment) {
  const Entry* e = find_entry(experiment);
  if (!e) throw ValidationError({"unknown experiment '" + std::string(experiment) + "'"});
  std::string out = "# " + e->info.description + "\n";
  out += "experiment = " + e->info.name + "\n";
  out += "seed = 1\n";
  out += "format = jsonl\n";
  out += "threads = 1\n";
  for (const auto& [k, v] : e->defaults()) out += k + " = " + v + "\n";
  return out;
}

RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  std::map<std::string, std::string> kv;
  std::vector<std::string> syntax;
  int first_bad = 0;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    auto bad = [&](const std::string& msg) {
      if (!first_bad) first_bad = line_no;
      syntax.push_back("line " + std::to_string(line_no) + ": " + msg);
    };
    if (!body.empty()) {
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        bad("expected 'key = value', got '" + body + "'");
      } else {
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
          bad("invalid key '" + key + "'");
        } else if (value.empty()) {
          bad("missing value for '" + key + "'");
        } else if (!kv.emplace(key, value).second) {
          bad("duplicate key '" + key + "'");
        }
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!syntax.empty()) {
    std::string msg = syntax.front().substr(syntax.front().find(": ") + 2);
    for (std::size_t i = 1; i < syntax.size(); ++i) msg += "; " + syntax[i];
    throw ParseError(first_bad, msg);
  }

  RunConfig rc;
  std::vector<std::string> problems;
  auto take = [&](const char* key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  const auto experiment = take("experiment");
  if (!experiment) problems.push_back("experiment required");
  else rc.experiment = *experiment;

  if (overrides.seed) {
    take("seed");
    rc.seed = *overrides.seed;
  } else if (const auto s = take("seed")) {
    if (!parse_value(*s, rc.seed)) problems.push_back("seed: expected a nonnegative integer, got '" + *s + "'");
  } else {
    problems.push_back("seed required");
  }

  if (const auto t = take("threads"); t && !parse_value(*t, rc.threads))
    problems.push_back("threads: expected an integer, got '" + *t + "'");
  if (overrides.threads) rc.threads = *overrides.threads;
  if (rc.threads < 1) problems.push_back("threads must be >= 1");

  if (const auto f = take("format")) {
    if (*f == "csv") rc.output_format = OutputFormat::Csv;
    else if (*f == "jsonl" || *f == "json-lines") rc.output_format = OutputFormat::JsonLines;
    else problems.push_back("format: expected csv or jsonl, got '" + *f + "'");
  }
  if (overrides.format) rc.output_format = *overrides.format;
  if (const auto o = take("output")) rc.output_path = *o;
  if (overrides.output_path) rc.output_path = *overrides.output_path;
  if (const auto w = take("record_wall_time"); w && !parse_value(*w, rc.record_wall_time))
    problems.push_back("record_wall_time: expected true or false, got '" + *w + "'");

  rc.parameters = kv;
  if (experiment) {
    if (const Entry* e = find_entry(*experiment)) e->check(kv, problems);
    else problems.push_back("unknown experiment '" + *experiment + "'");
  }
  if (!problems.empty()) throw ValidationError(problems);
  return rc;
}

ExperimentReport run_experiment(const RunConfig& config) {
  const Entry* e = find_entry(config.experiment);
  if (!e) throw ValidationError({"unknown experiment '" + config.experiment + "'"});
  return e->run(config);
}

void write_report(std::ostream& out, const ExperimentReport& report, const RunConfig& config) {
  const auto recs = records(report, config);
  if (config.output_format == OutputFormat::JsonLines) {
    for (const auto& r : recs) {
      std::string line = "{\"record\":" + nlohmann::json(r.record).dump();
      for (const auto& [k, v] : r.text) line += "," + nlohmann::json(k).dump() + ":" + nlohmann::json(v).dump();
      for (const auto& [k, v] : r.numbers) line += "," + nlohmann::json(k).dump() + ":" + json_number(v);
      if (r.pass) line += std::string(",\"pass\":") + (*r.pass ? "true" : "false");
      out << line << "}\n";
    }
    return;
  }
  std::string header;
  for (const char* col : kCsvColumns) header += (header.empty() ? "" : ",") + std::string(col);
  out << header << "\n";
  for (const auto& r : recs) {
    std::string line;
    for (const char* col : kCsvColumns) {
      std::string v;
      if (std::string_view(col) == "record") v = r.record;
      else if (std::string_view(col) == "pass") v = r.pass ? (*r.pass ? "true" : "false") : "";
      for (const auto& [k, t] : r.text)
        if (k == col) v = t;
      for (const auto& [k, t] : r.numbers)
        if (k == col) v = t;
      line += (std::string_view(col) == "record" ? "" : ",") + csv_field(v);
    }
    out << line << "\n";
  }
}

std::string output_file(const RunConfig& config) {
  if (!config.output_path.empty()) return config.output_path;
  const char* dir = std::getenv(kOutputDirEnv);
  const std::filesystem::path base = dir && *dir ? dir : "results";
  const char* ext = config.output_format == OutputFormat::Csv ? ".csv" : ".jsonl";
  return (base / (config.experiment + "-seed" + std::to_string(config.seed) + ext)).string();
}

int run(const RunConfig& config, std::ostream& err) {
  try {
    const ExperimentReport report = run_experiment(config);
    const std::string path = output_file(config);
    if (path == "-") {
      std::ostringstream buf;
      write_report(buf, report, config);
      std::fwrite(buf.str().data(), 1, buf.str().size(), stdout);
    } else {
      const std::filesystem::path p(path);
      if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
      std::ofstream out(p, std::ios::binary);
      if (!out) throw Error("cannot open output file " + path);
      write_report(out, report, config);
      if (!out) throw Error("failed writing " + path);
    }
    for (const auto& c : report.checks)
      if (!c.pass) err << "check failed: " << c.label << " (" << c.detail << ")\n";
    return report.all_passed() ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace lineens
