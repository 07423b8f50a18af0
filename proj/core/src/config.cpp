#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <toml.hpp>

#include "csv.hpp"
#include "woc/crowd_sim.hpp"
#include "woc/errors.hpp"
#include "woc/pipeline.hpp"

namespace woc {
namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, what);
}

json parse_document(std::string_view text, bool toml_format) {
  try {
    if (toml_format) {
      const auto table = toml::parse(text);
      std::ostringstream as_json;
      as_json << toml::json_formatter{table};
      return json::parse(as_json.str());
    }
    return json::parse(text);
  } catch (const toml::parse_error& e) {
    bad_config(std::string("TOML parse error: ") + std::string(e.description()));
  } catch (const json::exception& e) {
    bad_config(std::string("JSON parse error: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_toml_path(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".toml") == 0;
}

double number(const json& j, const char* key) {
  if (!j.is_number()) bad_config(std::string("'") + key + "' must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, const char* key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    bad_config(std::string("'") + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

SwDistribution parse_sw(const json& j) {
  if (j.is_number()) return SwDistribution::constant(j.get<double>());
  if (!j.is_object()) bad_config("sw_distribution must be a number or a table");
  const auto kind = j.value("kind", std::string("constant"));
  if (kind == "constant") return SwDistribution::constant(number(j.at("value"), "value"));
  if (kind == "uniform") {
    return SwDistribution::uniform(number(j.at("low"), "low"), number(j.at("high"), "high"));
  }
  if (kind == "two_point") {
    const auto& values = j.at("values");
    if (!values.is_array() || values.size() != 2) bad_config("two_point needs two values");
    return SwDistribution::two_point(number(values[0], "values"), number(values[1], "values"),
                                     j.contains("weight") ? number(j["weight"], "weight") : 0.5);
  }
  bad_config("unknown sw_distribution kind '" + kind + "'");
}

CrowdMode parse_crowd(const json& j) {
  const std::string kind = j.is_string() ? j.get<std::string>() : j.value("kind", std::string());
  if (kind == "accurate") return CrowdMode::accurate();
  if (kind == "biased") {
    return CrowdMode::biased(j.is_object() && j.contains("offset") ? number(j["offset"], "offset")
                                                                   : 0.0);
  }
  if (kind == "bimodal") {
    if (!j.is_object()) bad_config("bimodal crowd_mode needs a separation");
    return CrowdMode::bimodal(number(j.at("separation"), "separation"),
                              j.contains("weight") ? number(j["weight"], "weight") : 0.5);
  }
  bad_config("unknown crowd_mode '" + kind + "'");
}

// `explicit_seed` reports whether the table carried its own seed.
ScenarioSpec parse_scenario(const json& j, bool* explicit_seed) {
  if (!j.is_object()) bad_config("a scenario must be a table");
  ScenarioSpec spec;
  try {
    spec.name = j.value("name", std::string());
    if (j.contains("n_rounds")) spec.n_rounds = count(j["n_rounds"], "n_rounds");
    if (j.contains("truth_per_round")) {
      const auto& t = j["truth_per_round"];
      if (t.is_number()) {
        spec.truth_per_round.assign(spec.n_rounds, t.get<double>());
      } else if (t.is_array()) {
        spec.truth_per_round.clear();
        for (const auto& v : t) spec.truth_per_round.push_back(number(v, "truth_per_round"));
      } else {
        bad_config("truth_per_round must be a number or an array");
      }
    } else {
      spec.truth_per_round.assign(spec.n_rounds, 100.0);
    }
    if (j.contains("n_agents")) spec.n_agents = count(j["n_agents"], "n_agents");
    if (j.contains("sw_distribution")) spec.sw_distribution = parse_sw(j["sw_distribution"]);
    if (j.contains("pre_bias")) spec.pre_bias = number(j["pre_bias"], "pre_bias");
    if (j.contains("pre_sigma")) spec.pre_sigma = number(j["pre_sigma"], "pre_sigma");
    if (j.contains("crowd_mode")) spec.crowd_mode = parse_crowd(j["crowd_mode"]);
    if (j.contains("noise_sigma")) spec.noise_sigma = number(j["noise_sigma"], "noise_sigma");
    if (j.contains("cold_start")) spec.cold_start = count(j["cold_start"], "cold_start");
    *explicit_seed = j.contains("seed");
    if (*explicit_seed) spec.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    bad_config(std::string("scenario: ") + e.what());
  }
  return spec;
}

const char* const kScenarioKeys[] = {"n_rounds", "truth_per_round", "n_agents",
                                     "sw_distribution", "crowd_mode", "pre_sigma"};

std::vector<std::pair<ScenarioSpec, bool>> scenarios_from(const json& doc) {
  std::vector<std::pair<ScenarioSpec, bool>> out;
  auto add = [&](const json& j) {
    bool explicit_seed = false;
    auto spec = parse_scenario(j, &explicit_seed);
    out.emplace_back(std::move(spec), explicit_seed);
  };
  if (doc.contains("scenarios")) {
    if (!doc["scenarios"].is_array()) bad_config("'scenarios' must be an array of tables");
    for (const auto& j : doc["scenarios"]) add(j);
  } else if (doc.contains("scenario")) {
    add(doc["scenario"]);
  } else if (std::any_of(std::begin(kScenarioKeys), std::end(kScenarioKeys),
                         [&](const char* k) { return doc.contains(k); })) {
    add(doc);
  }
  return out;
}

}  // namespace

std::vector<ScenarioSpec> parse_scenarios(std::string_view text, bool toml_format) {
  const auto doc = parse_document(text, toml_format);
  const std::uint64_t base_seed = doc.contains("seed") && doc["seed"].is_number_unsigned()
                                      ? doc["seed"].get<std::uint64_t>()
                                      : 0;
  std::vector<ScenarioSpec> specs;
  std::size_t i = 0;
  for (auto& [spec, explicit_seed] : scenarios_from(doc)) {
    if (!explicit_seed) spec.seed = base_seed + i;
    validate(spec);
    specs.push_back(std::move(spec));
    ++i;
  }
  if (specs.empty()) bad_config("document contains no scenario");
  return specs;
}

std::vector<ScenarioSpec> load_scenarios(const std::string& path) {
  return parse_scenarios(read_file(path), is_toml_path(path));
}

std::vector<double> parse_alpha_grid(std::string_view spec) {
  const auto trimmed = csv::trim(spec);
  if (trimmed.empty()) bad_config("empty alpha grid");
  std::vector<double> grid;
  if (trimmed.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = trimmed.find(':', start);
      parts.push_back(trimmed.substr(start, colon - start));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) bad_config("alpha grid range must be start:stop:count");
    const auto lo = csv::parse_double(parts[0]);
    const auto hi = csv::parse_double(parts[1]);
    const auto n = csv::parse_double(parts[2]);
    if (!lo || !hi || !n || *n < 1 || std::floor(*n) != *n) bad_config("bad alpha grid range");
    const auto points = static_cast<std::size_t>(*n);
    if (points == 1) return {*lo};
    for (std::size_t i = 0; i < points; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(points - 1);
      grid.push_back(i + 1 == points ? *hi : *lo + (*hi - *lo) * t);
    }
  } else if (trimmed.find(',') != std::string_view::npos) {
    const auto fields = csv::split(trimmed);
    for (const auto& f : *fields) {
      const auto v = csv::parse_double(f);
      if (!v) bad_config("bad alpha value '" + f + "'");
      grid.push_back(*v);
    }
  } else {
    // An integer >= 2 is a point count; any other number is a single alpha.
    const auto n = csv::parse_double(trimmed);
    if (!n) bad_config("alpha grid must be a point count, a range, or a list");
    if (*n >= 2 && std::floor(*n) == *n) {
      grid = default_alpha_grid(static_cast<std::size_t>(*n));
    } else {
      grid.push_back(*n);
    }
  }
  for (double a : grid) {
    if (!(a >= -1.0 && a <= 1.0)) {
      throw Error(ErrorCode::AlphaOutOfRange, "alpha grid value outside [-1, 1]");
    }
  }
  return grid;
}

void merge_config_file(RunConfig& config, const std::string& path,
                       const std::function<bool(std::string_view)>& set_explicitly) {
  const auto doc = parse_document(read_file(path), is_toml_path(path));
  if (!doc.is_object()) bad_config("config root must be a table");
  auto take = [&](const char* key) { return doc.contains(key) && !set_explicitly(key); };

  try {
    if (take("command")) {
      const auto c = parse_command(doc["command"].get<std::string>());
      if (!c) bad_config("unknown command in config");
      config.command = *c;
    }
    // input paths in a config file are relative to the file itself
    auto beside = [&](const std::string& p) {
      const std::filesystem::path fp(p);
      if (fp.is_absolute()) return p;
      return (std::filesystem::path(path).parent_path() / fp).lexically_normal().string();
    };
    if (take("records")) config.records_path = beside(doc["records"].get<std::string>());
    if (take("truths")) config.truths_path = beside(doc["truths"].get<std::string>());
    if (take("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();
    if (take("min_prior")) config.min_prior = count(doc["min_prior"], "min_prior");
    if (take("alpha_grid")) {
      const auto& g = doc["alpha_grid"];
      if (g.is_array()) {
        config.alpha_grid.clear();
        for (const auto& v : g) {
          const double a = number(v, "alpha_grid");
          if (!(a >= -1.0 && a <= 1.0)) {
            throw Error(ErrorCode::AlphaOutOfRange, "alpha grid value outside [-1, 1]");
          }
          config.alpha_grid.push_back(a);
        }
      } else if (g.is_number_integer()) {
        config.alpha_grid = parse_alpha_grid(std::to_string(g.get<long long>()));
      } else {
        config.alpha_grid = parse_alpha_grid(g.get<std::string>());
      }
    }
    if (take("B")) config.bootstrap_replicates = count(doc["B"], "B");
    if (take("M")) config.dip_replicates = count(doc["M"], "M");
    if (take("n_min")) config.n_min = count(doc["n_min"], "n_min");
    if (take("error_mode")) {
      const auto m = parse_error_mode(doc["error_mode"].get<std::string>());
      if (!m) bad_config("error_mode must be 'absolute' or 'percent'");
      config.error_mode = *m;
    }
    if (take("resample_mode")) {
      const auto m = parse_resample_mode(doc["resample_mode"].get<std::string>());
      if (!m) bad_config("resample_mode must be 'pooled' or 'stratified'");
      config.resample_mode = *m;
    }
    if (take("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (take("threads")) config.threads = count(doc["threads"], "threads");
    if (take("dip_cache")) config.dip_cache_path = doc["dip_cache"].get<std::string>();
  } catch (const json::exception& e) {
    bad_config(path + ": " + e.what());
  }

  // Scenario seeds: an explicit per-scenario seed wins unless the run seed
  // was given on the command line; otherwise scenario i uses run seed + i.
  std::size_t i = 0;
  config.scenarios.clear();
  for (auto& [spec, explicit_seed] : scenarios_from(doc)) {
    if (!explicit_seed || set_explicitly("seed")) spec.seed = config.seed + i;
    validate(spec);
    config.scenarios.push_back(std::move(spec));
    ++i;
  }
  config.config_path = path;
}

}  // namespace woc
