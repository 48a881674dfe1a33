#include "pfscale/experiment/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace pfscale::experiment {

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::EssCollapse: return "ess-collapse";
    case Kind::StoppingScaling: return "stopping-scaling";
    case Kind::ResamplingDip: return "resampling-dip";
    case Kind::RequiredN: return "required-n";
  }
  return "ess-collapse";
}

Kind parse_kind(const std::string& text) {
  for (Kind k : {Kind::EssCollapse, Kind::StoppingScaling, Kind::ResamplingDip, Kind::RequiredN}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidInput("unknown experiment kind '" + text + "'");
}

namespace {

std::string where(const std::string& key, int line) {
  return line > 0 ? "line " + std::to_string(line) + ", key '" + key + "'" : "key '" + key + "'";
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::string key, int line)
    : std::runtime_error("config error (" + where(key, line) + "): " + message),
      key_(std::move(key)),
      line_(line) {}

std::size_t ExperimentConfig::num_steps() const { return TimeGrid::from_horizon(dt, t1).numSteps; }

double default_horizon(Kind kind) {
  switch (kind) {
    case Kind::EssCollapse: return 5.0;
    case Kind::StoppingScaling: return 20.0;
    case Kind::ResamplingDip: return 10.0;
    case Kind::RequiredN: return 500.0;
  }
  return 5.0;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct Field {
  std::string key;
  int line;
  std::string value;

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(message, key, line); }

  double number(const std::string& text) const {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [end, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || end != last || !std::isfinite(v)) {
      fail("malformed number '" + text + "'");
    }
    return v;
  }

  double number() const { return number(value); }

  long long integer(const std::string& text) const {
    const double v = number(text);
    if (v != std::floor(v) || std::abs(v) > 9e15) fail("expected an integer, got '" + text + "'");
    return static_cast<long long>(v);
  }

  long long integer() const { return integer(value); }

  std::uint64_t unsigned64() const {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc() || end != value.data() + value.size()) {
      fail("malformed unsigned integer '" + value + "'");
    }
    return v;
  }

  bool boolean() const {
    if (value == "true" || value == "yes" || value == "on" || value == "1") return true;
    if (value == "false" || value == "no" || value == "off" || value == "0") return false;
    fail("expected true or false, got '" + value + "'");
  }

  std::vector<std::string> items() const {
    std::string body = value;
    if (!body.empty() && body.front() == '[') {
      if (body.back() != ']') fail("unterminated list");
      body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> out;
    std::stringstream in(body);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (item.empty()) fail("empty list element");
      out.push_back(item);
    }
    if (out.empty()) fail("empty list");
    return out;
  }

  // "a..b step s" or "a..b" (step 1).
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& item : items()) {
      const auto dots = item.find("..");
      if (dots == std::string::npos) {
        out.push_back(number(item));
        continue;
      }
      const double lo = number(trim(item.substr(0, dots)));
      std::string rest = trim(item.substr(dots + 2));
      double step = 1.0;
      const auto stepPos = rest.find("step");
      if (stepPos != std::string::npos) {
        step = number(trim(rest.substr(stepPos + 4)));
        rest = trim(rest.substr(0, stepPos));
      }
      const double hi = number(rest);
      if (step <= 0.0) fail("range step must be positive");
      if (hi < lo) fail("range end precedes its start");
      const double slack = 1e-9 * std::max(1.0, std::abs(step));
      for (int i = 0;; ++i) {
        const double v = lo + step * i;
        if (v > hi + slack) break;
        out.push_back(v);
        if (out.size() > 100000) fail("range too long");
      }
    }
    return out;
  }

  std::vector<Index> sizes() const {
    std::vector<Index> out;
    for (const double v : numbers()) {
      if (v != std::floor(v)) fail("expected integers");
      if (v < 1.0) fail("values must be at least 1");
      out.push_back(static_cast<Index>(v));
    }
    return out;
  }
};

using Handler = std::function<void(const Field&, ExperimentConfig&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = {
      {"experiment.kind",
       [](const Field& f, ExperimentConfig& c) {
         try {
           c.kind = parse_kind(f.value);
         } catch (const InvalidInput&) {
           f.fail("unknown experiment '" + f.value + "'");
         }
       }},
      {"experiment.seed", [](const Field& f, ExperimentConfig& c) { c.seed = f.unsigned64(); }},
      {"experiment.trials",
       [](const Field& f, ExperimentConfig& c) {
         const auto v = f.integer();
         if (v < 1) f.fail("trials must be at least 1");
         c.trials = static_cast<int>(v);
       }},
      {"experiment.dt",
       [](const Field& f, ExperimentConfig& c) {
         c.dt = f.number();
         if (c.dt <= 0.0) f.fail("dt must be positive");
       }},
      {"experiment.t1",
       [](const Field& f, ExperimentConfig& c) {
         c.t1 = f.number();
         if (c.t1 <= 0.0) f.fail("t1 must be positive");
       }},
      {"experiment.workers",
       [](const Field& f, ExperimentConfig& c) {
         const auto v = f.integer();
         if (v < 0) f.fail("workers must be non-negative");
         c.workers = static_cast<int>(v);
       }},
      {"model.drift", [](const Field& f, ExperimentConfig& c) { c.coeffs.drift = f.number(); }},
      {"model.diffusion", [](const Field& f, ExperimentConfig& c) { c.coeffs.diffusion = f.number(); }},
      {"model.observation",
       [](const Field& f, ExperimentConfig& c) { c.coeffs.observation = f.number(); }},
      {"sweep.D", [](const Field& f, ExperimentConfig& c) { c.dims = f.sizes(); }},
      {"sweep.N", [](const Field& f, ExperimentConfig& c) { c.particles = f.sizes(); }},
      {"sweep.n",
       [](const Field& f, ExperimentConfig& c) {
         c.essLevels = f.numbers();
         for (const double v : c.essLevels) {
           if (v < 1.0) f.fail("ESS levels must be at least 1");
         }
       }},
      {"sweep.epsilon",
       [](const Field& f, ExperimentConfig& c) {
         c.epsilons = f.numbers();
         for (const double v : c.epsilons) {
           if (v <= 0.0) f.fail("epsilon must be positive");
         }
       }},
      {"filter.resampling",
       [](const Field& f, ExperimentConfig& c) {
         try {
           c.policy = ResamplingPolicy::parse(f.value);
         } catch (const InvalidInput& e) {
           f.fail(e.what());
         }
       }},
      {"filter.filters",
       [](const Field& f, ExperimentConfig& c) {
         c.filters.clear();
         for (const auto& item : f.items()) {
           if (item == "kalman") f.fail("the Kalman filter has no ensemble size");
           try {
             c.filters.push_back(parse_filter_kind(item));
           } catch (const InvalidInput&) {
             f.fail("unknown filter '" + item + "'");
           }
         }
       }},
      {"filter.tau_window",
       [](const Field& f, ExperimentConfig& c) {
         c.tauWindow = f.number();
         if (c.tauWindow <= 0.0) f.fail("tau_window must be positive");
       }},
      {"search.initial_trials",
       [](const Field& f, ExperimentConfig& c) {
         const auto v = f.integer();
         if (v < 2) f.fail("initial_trials must be at least 2");
         c.initialTrials = static_cast<int>(v);
       }},
      {"search.max_trials",
       [](const Field& f, ExperimentConfig& c) {
         const auto v = f.integer();
         if (v < 2) f.fail("max_trials must be at least 2");
         c.maxTrials = static_cast<int>(v);
       }},
      {"search.max_particles",
       [](const Field& f, ExperimentConfig& c) {
         const auto v = f.integer();
         if (v < 1) f.fail("max_particles must be at least 1");
         c.maxParticles = static_cast<Index>(v);
       }},
      {"search.margin",
       [](const Field& f, ExperimentConfig& c) {
         c.margin = f.number();
         if (c.margin < 0.0) f.fail("margin must be non-negative");
       }},
      {"search.collapse_target",
       [](const Field& f, ExperimentConfig& c) {
         c.collapseTarget = f.number();
         if (*c.collapseTarget <= 0.0) f.fail("collapse_target must be positive");
       }},
      {"output.dir",
       [](const Field& f, ExperimentConfig& c) {
         if (f.value.empty()) f.fail("empty output directory");
         c.outDir = f.value;
       }},
      {"output.record_every",
       [](const Field& f, ExperimentConfig& c) {
         const auto v = f.integer();
         if (v < 1) f.fail("record_every must be at least 1");
         c.recordEvery = static_cast<int>(v);
       }},
      {"output.timing", [](const Field& f, ExperimentConfig& c) { c.timing = f.boolean(); }},
  };
  return table;
}

const std::set<std::string>& sections() {
  static const std::set<std::string> names = {"experiment", "model", "sweep", "filter", "search",
                                              "output"};
  return names;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::map<std::string, int> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineNo = 0;
  while (std::getline(in, raw)) {
    ++lineNo;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line, lineNo);
      section = trim(line.substr(1, line.size() - 2));
      if (!sections().count(section)) {
        throw ConfigError("unknown section '" + section + "'", section, lineNo);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line, lineNo);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError("key outside any section", key, lineNo);
    const std::string qualified = section + "." + key;
    const auto it = handlers().find(qualified);
    if (it == handlers().end()) throw ConfigError("unknown key", qualified, lineNo);
    if (seen.count(qualified)) {
      throw ConfigError("duplicate key (first set on line " + std::to_string(seen[qualified]) + ")",
                        qualified, lineNo);
    }
    if (value.empty()) throw ConfigError("missing value", qualified, lineNo);
    seen[qualified] = lineNo;
    it->second(Field{qualified, lineNo, value}, config);
  }

  auto lineOf = [&](const std::string& key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  };
  if (!seen.count("experiment.kind")) throw ConfigError("missing required key", "experiment.kind", 0);
  if (!seen.count("experiment.t1")) config.t1 = default_horizon(config.kind);

  std::vector<std::string> required = {"sweep.D"};
  switch (config.kind) {
    case Kind::EssCollapse:
    case Kind::ResamplingDip: required.push_back("sweep.N"); break;
    case Kind::StoppingScaling:
      required.push_back("sweep.N");
      required.push_back("sweep.n");
      break;
    case Kind::RequiredN: required.push_back("sweep.epsilon"); break;
  }
  for (const auto& key : required) {
    if (!seen.count(key)) {
      throw ConfigError("missing required key for " + to_string(config.kind), key, 0);
    }
  }

  const double steps = config.t1 / config.dt;
  if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps) || std::round(steps) < 1.0) {
    const std::string key = seen.count("experiment.t1") ? "experiment.t1" : "experiment.dt";
    throw ConfigError("t1 must be a positive whole number of dt steps", key, lineOf(key));
  }
  if (config.maxTrials < config.initialTrials) {
    throw ConfigError("max_trials below initial_trials", "search.max_trials",
                      lineOf("search.max_trials"));
  }
  if (config.kind == Kind::StoppingScaling && config.collapseTarget &&
      *config.collapseTarget >= config.t1) {
    throw ConfigError("collapse_target must be below t1", "search.collapse_target",
                      lineOf("search.collapse_target"));
  }
  if (config.kind == Kind::ResamplingDip && config.policy.kind == ResamplingPolicy::Kind::Never) {
    throw ConfigError("resampling-dip needs a resampling policy", "filter.resampling",
                      lineOf("filter.resampling"));
  }
  if (config.kind == Kind::RequiredN && config.filters.empty()) {
    throw ConfigError("no filters", "filter.filters", lineOf("filter.filters"));
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", "file", 0);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = {{"kind", to_string(c.kind)}, {"seed", c.seed},   {"trials", c.trials},
                     {"dt", c.dt},                {"t1", c.t1},       {"numSteps", c.num_steps()},
                     {"workers", c.workers}};
  j["model"] = {{"drift", c.coeffs.drift},
                {"diffusion", c.coeffs.diffusion},
                {"observation", c.coeffs.observation}};
  j["sweep"] = {{"D", c.dims}, {"N", c.particles}, {"n", c.essLevels}, {"epsilon", c.epsilons}};
  std::vector<std::string> filters;
  for (const auto f : c.filters) filters.push_back(to_string(f));
  j["filter"] = {{"resampling", c.policy.describe()}, {"filters", filters}, {"tau_window", c.tauWindow}};
  j["search"] = {{"initial_trials", c.initialTrials},
                 {"max_trials", c.maxTrials},
                 {"max_particles", c.maxParticles},
                 {"margin", c.margin},
                 {"collapse_target", c.collapseTarget ? nlohmann::json(*c.collapseTarget) : nlohmann::json()}};
  j["output"] = {{"dir", c.outDir}, {"record_every", c.recordEvery}, {"timing", c.timing}};
  return j;
}

}  // namespace pfscale::experiment
