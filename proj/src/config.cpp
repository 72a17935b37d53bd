#include "lpmbrw/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "lpmbrw/error.hpp"
#include "lpmbrw/simulator.hpp"

namespace lpmbrw {

using nlohmann::json;

namespace {

// Reads an object and remembers which keys were consumed, so leftovers can
// be reported as unknown.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& need(const std::string& key) {
    const json* v = get(key);
    if (!v) throw ConfigError(at(key), "is required");
    return *v;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.contains(key)) throw ConfigError(at(key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

double as_double(const json& v, const std::string& path) {
  if (v.is_string() && (v == "inf" || v == "infinity")) return infinity;
  if (!v.is_number()) throw ConfigError(path, "must be a number");
  const double x = v.get<double>();
  if (std::isnan(x)) throw ConfigError(path, "must not be NaN");
  return x;
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x < 1.8e19 && std::floor(x) == x) return static_cast<std::uint64_t>(x);
  }
  throw ConfigError(path, "must be a non-negative integer");
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "must be a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "must be an array");
  return v;
}

std::vector<double> doubles(const json& v, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < as_array(v, path).size(); ++i)
    out.push_back(as_double(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::uint64_t> counts(const json& v, const std::string& path) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < as_array(v, path).size(); ++i)
    out.push_back(as_u64(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

OffspringLaw parse_offspring(const json& j, const std::string& path) {
  Fields f(j, path);
  OffspringLaw law;
  if (const json* fixed = f.get("fixed")) {
    const auto n = as_u64(*fixed, f.at("fixed"));
    if (n > 0xffffffffu) throw ConfigError(f.at("fixed"), "offspring count too large");
    law = OffspringLaw::fixed(static_cast<std::uint32_t>(n));
  } else {
    for (auto c : counts(f.need("counts"), f.at("counts"))) {
      if (c > 0xffffffffu) throw ConfigError(f.at("counts"), "offspring count too large");
      law.counts.push_back(static_cast<std::uint32_t>(c));
    }
    law.probabilities = doubles(f.need("probabilities"), f.at("probabilities"));
    if (law.counts.size() != law.probabilities.size())
      throw ConfigError(f.at("probabilities"), "needs one probability per count");
  }
  f.finish();
  return law;
}

StepLaw parse_step(const json& j, const std::string& path) {
  Fields f(j, path);
  const auto law = as_string(f.need("law"), f.at("law"));
  StepLaw step;
  if (law == "constant") {
    step = ConstantStep{as_double(f.need("value"), f.at("value"))};
  } else if (law == "normal") {
    step = NormalStep{as_double(f.need("mean"), f.at("mean")), as_double(f.need("sd"), f.at("sd"))};
  } else if (law == "uniform") {
    step = UniformStep{as_double(f.need("lo"), f.at("lo")), as_double(f.need("hi"), f.at("hi"))};
  } else {
    throw ConfigError(f.at("law"), "unknown step law '" + law + "' (constant, normal, uniform)");
  }
  f.finish();
  return step;
}

std::vector<DisplacementModel> parse_models(const json& j, const std::string& path, bool allow_empty) {
  std::vector<DisplacementModel> out;
  if (!as_array(j, path).size() && !allow_empty) throw ConfigError(path, "needs at least one model");
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_model(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ScheduleSpec parse_schedule(const json& j, const std::string& path) {
  Fields f(j, path);
  const auto type = as_string(f.need("type"), f.at("type"));
  ScheduleSpec spec;
  if (type == "explicit") {
    spec.kind = ScheduleSpec::Kind::explicit_blocks;
    const json& q = as_array(f.need("q"), f.at("q"));
    if (q.empty()) throw ConfigError(f.at("q"), "needs at least one schedule");
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto p = f.at("q") + "[" + std::to_string(i) + "]";
      spec.blocks.push_back(counts(q[i], p));
      if (spec.blocks.back().empty()) throw ConfigError(p, "needs at least one block");
    }
  } else if (type == "proportional" || type == "slow_first") {
    spec.kind = type == "proportional" ? ScheduleSpec::Kind::proportional : ScheduleSpec::Kind::slow_first;
    spec.alpha = doubles(f.need("alpha"), f.at("alpha"));
    spec.ladder = counts(f.need("n"), f.at("n"));
    if (spec.ladder.empty()) throw ConfigError(f.at("n"), "needs at least one generation count");
    for (std::size_t i = 0; i < spec.ladder.size(); ++i) {
      try {
        resolve_schedule(spec, spec.ladder[i]);
      } catch (const ConfigError& e) {
        throw ConfigError(f.at(e.path() == "alpha" ? "alpha" : "n[" + std::to_string(i) + "]"), e.what());
      }
    }
  } else {
    throw ConfigError(f.at("type"), "unknown schedule type '" + type + "' (explicit, proportional, slow_first)");
  }
  f.finish();
  return spec;
}

using ThresholdField = std::pair<const char*, double Thresholds::*>;
constexpr std::array<ThresholdField, 16> threshold_fields{{
    {"coupling_ks", &Thresholds::coupling_ks},
    {"mean_sigmas", &Thresholds::mean_sigmas},
    {"lln_eps", &Thresholds::lln_eps},
    {"lln_allowance", &Thresholds::lln_allowance},
    {"stability_ks", &Thresholds::stability_ks},
    {"z1_ks", &Thresholds::z1_ks},
    {"critical_ks", &Thresholds::critical_ks},
    {"gap_ks", &Thresholds::gap_ks},
    {"gap_self_alpha", &Thresholds::gap_self_alpha},
    {"ratio_eps", &Thresholds::ratio_eps},
    {"ratio_max_fraction", &Thresholds::ratio_max_fraction},
    {"rde_iterate_ks", &Thresholds::rde_iterate_ks},
    {"rde_match_ks", &Thresholds::rde_match_ks},
    {"sheave_ks", &Thresholds::sheave_ks},
    {"tilt_tolerance", &Thresholds::tilt_tolerance},
    {"sigma1_rel", &Thresholds::sigma1_rel},
}};

json model_json(double sigma) { return {{"kind", "gaussian_binary"}, {"sigma", sigma}}; }

json proportional(std::vector<std::uint64_t> ladder) {
  return {{"type", "proportional"}, {"alpha", {0.5, 0.5}}, {"n", ladder}};
}

json base_defaults() {
  json thresholds = json::object();
  const Thresholds t;
  for (const auto& [name, member] : threshold_fields) thresholds[name] = t.*member;
  return {
      {"preset", "custom"},
      {"models", {model_json(1.0)}},
      {"compare_models", json::array()},
      {"schedule", {{"type", "explicit"}, {"q", {{8}}}}},
      {"compare_schedule", nullptr},
      {"theta", 0.5},
      {"reps", 1000},
      {"seed", 20240601},
      {"workers", 1},
      {"topk", 8},
      {"particle_budget", default_particle_budget},
      {"mc_draws", 1000000},
      {"output", {{"dir", ""}, {"format", "csv"}}},
      {"thresholds", thresholds},
      {"population", {{"size", 100000}, {"steps", 50}, {"compare_step", 40}}},
      {"waive_assumptions", false},
  };
}

}  // namespace

Schedule resolve_schedule(const ScheduleSpec& spec, std::uint64_t n) {
  switch (spec.kind) {
    case ScheduleSpec::Kind::explicit_blocks:
      for (const auto& q : spec.blocks) {
        Schedule s(q);
        if (s.n() == n) return s;
      }
      throw ConfigError("schedule", "no explicit schedule with n = " + std::to_string(n));
    case ScheduleSpec::Kind::proportional:
      return proportional_schedule(spec.alpha, n);
    case ScheduleSpec::Kind::slow_first:
      return slow_first_schedule(spec.alpha, n);
  }
  throw ConfigError("schedule", "unknown schedule kind");
}

std::vector<Schedule> resolve_schedules(const ScheduleSpec& spec) {
  std::vector<Schedule> out;
  if (spec.kind == ScheduleSpec::Kind::explicit_blocks) {
    for (const auto& q : spec.blocks) out.emplace_back(q);
  } else {
    for (auto n : spec.ladder) out.push_back(resolve_schedule(spec, n));
  }
  return out;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "theta-star", "coupling", "mean-one",    "lln",   "limit-stability", "critical-stability",
      "rde-match",  "gap",      "ratio",       "fz-example", "sheave",
  };
  return names;
}

json preset_defaults(std::string_view preset) {
  json j = base_defaults();
  const json pair = {model_json(2.0), model_json(1.0)};
  const std::string name(preset);
  j["preset"] = name.empty() ? "custom" : name;
  if (name.empty() || name == "custom") {
    j["preset"] = "custom";
  } else if (name == "theta-star") {
    j["models"] = {model_json(1.0)};
  } else if (name == "coupling") {
    j["models"] = {model_json(1.0)};
    j["schedule"] = {{"type", "explicit"}, {"q", {{8}}}};
    j["reps"] = 5000;
  } else if (name == "mean-one" || name == "gap") {
    j["models"] = pair;
    j["schedule"] = {{"type", "explicit"}, {"q", {{8, 8}}}};
    j["reps"] = 5000;
  } else if (name == "lln") {
    j["models"] = pair;
    j["schedule"] = proportional({8, 12, 16, 20});
    j["reps"] = 2000;
  } else if (name == "ratio") {
    j["models"] = pair;
    j["compare_models"] = {{{"kind", "deterministic_two_point"}, {"a", 1.0}, {"b", -1.0}},
                           {{"kind", "deterministic_two_point"}, {"a", 0.5}, {"b", -0.25}}};
    j["schedule"] = proportional({8, 12, 16, 20});
    j["reps"] = 2000;
  } else if (name == "limit-stability") {
    j["models"] = pair;
    j["compare_models"] = {model_json(2.0), model_json(0.5)};
    j["schedule"] = proportional({12, 20});
    // Inside the L2 region of the first block (4 theta^2 < log 2).
    j["theta"] = 0.3;
    j["reps"] = 5000;
  } else if (name == "critical-stability") {
    j["models"] = pair;
    j["schedule"] = proportional({16, 20});
    j["theta"] = "critical";
    j["reps"] = 5000;
  } else if (name == "rde-match") {
    j["models"] = pair;
    j["schedule"] = proportional({20});
    j["reps"] = 5000;
  } else if (name == "fz-example") {
    j["models"] = pair;
    j["schedule"] = proportional({8, 12, 16, 20});
    j["theta"] = "critical";
  } else if (name == "sheave") {
    j["models"] = pair;
    j["schedule"] = {{"type", "slow_first"}, {"alpha", {1.0}}, {"n", {20}}};
    j["compare_schedule"] = proportional({20});
    j["theta"] = 0.3;
    j["reps"] = 5000;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  return j;
}

DisplacementModel parse_model(const json& spec, const std::string& path) {
  Fields f(spec, path);
  const auto kind = as_string(f.need("kind"), f.at("kind"));
  try {
    if (kind == "gaussian_binary") {
      const double sigma = as_double(f.need("sigma"), f.at("sigma"));
      f.finish();
      return DisplacementModel::gaussian_binary(sigma);
    }
    if (kind == "deterministic_two_point") {
      const double a = as_double(f.need("a"), f.at("a"));
      const double b = as_double(f.need("b"), f.at("b"));
      f.finish();
      return DisplacementModel::two_point(a, b);
    }
    if (kind == "generic_iid") {
      GenericIid law{parse_offspring(f.need("offspring"), f.at("offspring")),
                     parse_step(f.need("step"), f.at("step"))};
      if (const json* v = f.get("domain_bound")) law.domain_bound = as_double(*v, f.at("domain_bound"));
      if (const json* v = f.get("mc_draws")) law.mc_draws = as_u64(*v, f.at("mc_draws"));
      if (const json* v = f.get("mc_seed")) law.mc_seed = as_u64(*v, f.at("mc_seed"));
      f.finish();
      return DisplacementModel::generic(std::move(law));
    }
  } catch (const InvalidModelError& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(f.at("kind"), "unknown model kind '" + kind +
                                      "' (gaussian_binary, deterministic_two_point, generic_iid)");
}

DisplacementModel parse_model_shorthand(std::string_view text) {
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ConfigError("model", "cannot parse number '" + std::string(s) + "'");
    return v;
  };
  if (!text.empty() && text.front() == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("model", e.what());
    }
    return parse_model(j);
  }
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("model", "expected gaussian:SIGMA, two-point:A,B or JSON");
  const auto kind = text.substr(0, colon);
  const auto args = text.substr(colon + 1);
  try {
    if (kind == "gaussian") return DisplacementModel::gaussian_binary(number(args));
    if (kind == "two-point") {
      const auto comma = args.find(',');
      if (comma == std::string_view::npos) throw ConfigError("model", "two-point needs A,B");
      return DisplacementModel::two_point(number(args.substr(0, comma)), number(args.substr(comma + 1)));
    }
  } catch (const InvalidModelError& e) {
    throw ConfigError("model", e.what());
  }
  throw ConfigError("model", "unknown model kind '" + std::string(kind) + "'");
}

ExperimentConfig parse_config(const json& user, std::optional<std::string_view> preset) {
  if (!user.is_null() && !user.is_object()) throw ConfigError("", "configuration must be an object");
  std::string name = "custom";
  if (preset) {
    name = std::string(*preset);
  } else if (user.is_object() && user.contains("preset")) {
    name = as_string(user["preset"], "preset");
  }
  json merged = preset_defaults(name);
  if (user.is_object()) {
    for (const auto& [key, value] : user.items()) {
      if (key == "preset") continue;
      if (!merged.contains(key)) throw ConfigError(key, "unknown key");
      if ((key == "thresholds" || key == "output" || key == "population") && value.is_object()) {
        for (const auto& [sub, v] : value.items()) {
          if (!merged[key].contains(sub)) throw ConfigError(key + "." + sub, "unknown key");
          merged[key][sub] = v;
        }
      } else {
        merged[key] = value;
      }
    }
  }

  ExperimentConfig c;
  Fields f(merged, "");
  c.preset = as_string(f.need("preset"), "preset");
  c.models = parse_models(f.need("models"), "models", false);
  c.compare_models = parse_models(f.need("compare_models"), "compare_models", true);
  c.schedule = parse_schedule(f.need("schedule"), "schedule");
  if (const json* cs = f.get("compare_schedule"); cs && !cs->is_null())
    c.compare_schedule = parse_schedule(*cs, "compare_schedule");

  const json& theta = f.need("theta");
  if (theta.is_string()) {
    if (theta != "critical") throw ConfigError("theta", "must be a number or \"critical\"");
    c.theta.critical = true;
  } else {
    c.theta.value = as_double(theta, "theta");
    if (!(c.theta.value > 0.0) || !std::isfinite(c.theta.value)) throw ConfigError("theta", "must be positive");
  }

  c.reps = as_u64(f.need("reps"), "reps");
  if (c.reps < 1) throw ConfigError("reps", "must be at least 1");
  c.seed = as_u64(f.need("seed"), "seed");
  const auto workers = as_u64(f.need("workers"), "workers");
  if (workers < 1 || workers > 1024) throw ConfigError("workers", "must lie in [1, 1024]");
  c.workers = static_cast<unsigned>(workers);
  c.topk = as_u64(f.need("topk"), "topk");
  c.particle_budget = as_u64(f.need("particle_budget"), "particle_budget");
  c.mc_draws = as_u64(f.need("mc_draws"), "mc_draws");
  c.waive_assumptions = as_bool(f.need("waive_assumptions"), "waive_assumptions");

  {
    Fields o(f.need("output"), "output");
    c.out_dir = as_string(o.need("dir"), "output.dir");
    const auto format = as_string(o.need("format"), "output.format");
    if (format == "csv")
      c.format = OutputFormat::csv;
    else if (format == "json-lines")
      c.format = OutputFormat::json_lines;
    else
      throw ConfigError("output.format", "must be csv or json-lines");
    o.finish();
  }
  {
    Fields t(f.need("thresholds"), "thresholds");
    for (const auto& [key, member] : threshold_fields) c.thresholds.*member = as_double(t.need(key), t.at(key));
    t.finish();
  }
  {
    Fields p(f.need("population"), "population");
    c.population.size = as_u64(p.need("size"), "population.size");
    c.population.steps = as_u64(p.need("steps"), "population.steps");
    c.population.compare_step = as_u64(p.need("compare_step"), "population.compare_step");
    if (c.population.size < 1) throw ConfigError("population.size", "must be at least 1");
    if (c.population.compare_step > c.population.steps)
      throw ConfigError("population.compare_step", "must not exceed population.steps");
    p.finish();
  }
  f.finish();

  if (!c.waive_assumptions) {
    auto check = [](const std::vector<DisplacementModel>& models, const std::string& path) {
      for (std::size_t i = 0; i < models.size(); ++i) {
        const auto report = validate(models[i]);
        if (report.all_ok()) continue;
        std::string why;
        for (const auto& m : report.messages) why += (why.empty() ? "" : "; ") + m;
        throw ConfigError(path + "[" + std::to_string(i) + "]",
                          "fails the standing assumptions (" + why + "); set waive_assumptions to run anyway");
      }
    };
    check(c.models, "models");
    check(c.compare_models, "compare_models");
  }

  c.effective = nlohmann::ordered_json::parse(merged.dump());
  return c;
}

std::string ExperimentConfig::hash() const {
  auto j = effective;
  j.erase("workers");
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lpmbrw
