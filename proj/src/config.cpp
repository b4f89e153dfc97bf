#include "mobnet/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace mobnet {

using nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::Simulate, "simulate"},
    {ExperimentKind::Kelly, "kelly"},
    {ExperimentKind::Hitting, "hitting"},
    {ExperimentKind::Fluid, "fluid"},
    {ExperimentKind::Drift, "drift"},
    {ExperimentKind::Trapping, "trapping"},
    {ExperimentKind::SubcriticalExit, "subcritical-exit"},
    {ExperimentKind::Ergodicity, "ergodicity"},
    {ExperimentKind::MartingaleCheck, "martingale-check"},
    {ExperimentKind::DeviationBound, "deviation-bound"},
    {ExperimentKind::IdentitySuite, "identity-suite"},
};

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw ConfigError(ConfigErrc::ConfigInvalid, field + ": " + why);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) invalid(where.empty() ? "config" : where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) invalid(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const std::string field = where.empty() ? key : where + "." + key;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid(field, std::string("wrong type (") + e.what() + ")");
  }
}

Regime regime_from(const std::string& s) {
  if (s == "subcritical") return Regime::Subcritical;
  if (s == "critical") return Regime::Critical;
  if (s == "supercritical") return Regime::Supercritical;
  invalid("regime", "expected subcritical, critical or supercritical");
}

StartRecipe start_from(const std::string& s) {
  if (s == "proportional") return StartRecipe::Proportional;
  if (s == "corner") return StartRecipe::Corner;
  if (s == "custom") return StartRecipe::Custom;
  invalid("plan.start", "expected proportional, corner or custom");
}

void validate_config(const ExperimentConfig& c) {
  const int n = static_cast<int>(c.rates.size());
  if (n < 2) invalid("rates", "need an n x n matrix with n >= 2");
  for (const auto& row : c.rates)
    if (static_cast<int>(row.size()) != n) invalid("rates", "matrix must be square");
  if (static_cast<int>(c.arrival.size()) != n) invalid("arrival", "length must equal n");
  if (static_cast<int>(c.capacity.size()) != n) invalid("capacity", "length must equal n");
  for (double v : c.arrival)
    if (!(v >= 0) || !std::isfinite(v)) invalid("arrival", "rates must be finite and >= 0");
  for (double v : c.capacity)
    if (!(v >= 0) || !std::isfinite(v)) invalid("capacity", "rates must be finite and >= 0");

  // Spectral validation runs before anything that depends on pi.
  const SpectralData s = spectral_of(c);
  const NetworkParams p = params_of(c);
  const Regime regime = regime_of(p);
  try {
    c.plan.check(n);
  } catch (const ScalingError& e) {
    invalid("plan", e.what());
  }
  if (!c.initial.empty()) {
    if (static_cast<int>(c.initial.size()) != n) invalid("initial", "length must equal n");
    for (auto v : c.initial)
      if (v < 0) invalid("initial", "counts must be >= 0");
  }
  if (c.output.empty()) invalid("output", "must be a directory path");
  if (!(c.t_max > 0)) invalid("t_max", "must be positive");
  if (c.paths < 1) invalid("paths", "must be >= 1");
  if (c.workers < 0) invalid("workers", "must be >= 0");

  const double eps0 = entropy_constants(s.stationary()).eps0_entropy;
  auto need_thresholds = [&](bool with_delta) {
    if (!(c.eps > 0) || !(c.eps < eps0))
      invalid("eps", "need 0 < eps < eps0_entropy = " + std::to_string(eps0));
    if (with_delta && (!(c.delta > 0) || !(c.delta < c.eps))) invalid("delta", "need 0 < delta < eps");
  };
  auto need = [&](bool ok, const char* what) {
    if (!ok) invalid("regime", std::string("parameters are ") + to_string(regime) + ", experiment needs " + what);
  };

  switch (c.kind) {
    case ExperimentKind::Fluid:
      if (!c.regime) invalid("regime", "required for fluid runs");
      if (*c.regime != regime)
        invalid("regime", std::string("declared ") + to_string(*c.regime) + " but parameters are " + to_string(regime));
      break;
    case ExperimentKind::Drift: need(regime == Regime::Supercritical, "lambda > mu"); break;
    case ExperimentKind::Trapping:
      need(regime == Regime::Supercritical, "lambda > mu");
      need_thresholds(true);
      break;
    case ExperimentKind::SubcriticalExit:
      need(regime == Regime::Subcritical, "lambda < mu");
      need_thresholds(false);
      if (!(c.plan.horizon < c.plan.scale / (p.total_capacity() - p.total_arrival())))
        invalid("plan.horizon", "need t < a / (mu - lambda)");
      break;
    case ExperimentKind::Ergodicity: need(regime == Regime::Subcritical, "lambda < mu"); break;
    case ExperimentKind::MartingaleCheck:
      if (c.alphas.empty()) invalid("alphas", "must not be empty");
      for (double a : c.alphas)
        if (!(a > 0)) invalid("alphas", "must be positive");
      if (c.times.empty()) invalid("times", "must not be empty");
      for (double t : c.times)
        if (!(t >= 0)) invalid("times", "must be >= 0");
      if (c.paths < 2) invalid("paths", "need at least two paths");
      break;
    case ExperimentKind::DeviationBound:
      need_thresholds(true);
      if (c.alphas.empty()) invalid("alphas", "must not be empty");
      for (double a : c.alphas)
        if (!(a > 0 && a < 1)) invalid("alphas", "must lie in (0, 1)");
      for (double l : c.ells)
        if (!(l >= 0)) invalid("ells", "must be >= 0");
      break;
    default: break;
  }
}

}  // namespace

const char* to_string(ExperimentKind k) {
  for (const auto& e : kKinds)
    if (e.kind == k) return e.name;
  return "?";
}

SpectralData spectral_of(const ExperimentConfig& c) {
  try {
    return validate(RateMatrix::from_rows(c.rates));
  } catch (const SpectralError& e) {
    throw ConfigError(ConfigErrc::SpectralRejection, std::string(to_string(e.kind())) + ": " + e.what());
  }
}

NetworkParams params_of(const ExperimentConfig& c) { return NetworkParams{c.arrival, c.capacity}; }

State initial_of(const ExperimentConfig& c) {
  if (!c.initial.empty()) return State(c.initial);
  return State(std::vector<std::int64_t>(c.rates.size(), 5));
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigErrc::ConfigInvalid, std::string("syntax: ") + e.what());
  }
  reject_unknown(j,
                 {"kind", "rates", "arrival", "capacity", "plan", "regime", "alphas", "ells", "times", "eps", "delta",
                  "initial", "t_max", "paths", "seed", "workers", "output"},
                 "");
  ExperimentConfig c;
  if (!j.contains("kind")) invalid("kind", "required");
  std::string kind;
  read(j, "kind", kind, "");
  bool found = false;
  for (const auto& e : kKinds)
    if (kind == e.name) c.kind = e.kind, found = true;
  if (!found) invalid("kind", "unknown experiment kind '" + kind + "'");

  if (!j.contains("rates")) invalid("rates", "required");
  {
    const json& r = j.at("rates");
    if (!r.is_array()) invalid("rates", "expected an array of rows");
    for (const auto& row : r) {
      if (!row.is_array()) invalid("rates", "expected an array of rows");
      auto& out = c.rates.emplace_back();
      for (const auto& v : row) {
        if (v.is_null())
          out.emplace_back();
        else if (v.is_number())
          out.emplace_back(v.get<double>());
        else
          invalid("rates", "entries must be numbers or null");
      }
    }
  }
  if (!j.contains("arrival")) invalid("arrival", "required");
  if (!j.contains("capacity")) invalid("capacity", "required");
  read(j, "arrival", c.arrival, "");
  read(j, "capacity", c.capacity, "");
  if (j.contains("regime")) {
    std::string r;
    read(j, "regime", r, "");
    c.regime = regime_from(r);
  }
  read(j, "alphas", c.alphas, "");
  read(j, "ells", c.ells, "");
  read(j, "times", c.times, "");
  read(j, "eps", c.eps, "");
  read(j, "delta", c.delta, "");
  read(j, "initial", c.initial, "");
  read(j, "t_max", c.t_max, "");
  read(j, "paths", c.paths, "");
  read(j, "seed", c.seed, "");
  read(j, "workers", c.workers, "");
  read(j, "output", c.output, "");

  if (j.contains("plan")) {
    const json& pj = j.at("plan");
    reject_unknown(pj,
                   {"ladder", "replicas", "horizon", "window_start", "start", "rho", "scale", "delta",
                    "delta_exponent", "tolerance", "pass_fraction"},
                   "plan");
    ScalingPlan& pl = c.plan;
    read(pj, "ladder", pl.ladder, "plan");
    read(pj, "replicas", pl.replicas, "plan");
    read(pj, "horizon", pl.horizon, "plan");
    read(pj, "window_start", pl.window_start, "plan");
    if (pj.contains("start")) {
      std::string s;
      read(pj, "start", s, "plan");
      pl.start = start_from(s);
    }
    if (pj.contains("rho")) {
      std::vector<double> rho;
      read(pj, "rho", rho, "plan");
      pl.rho = Eigen::Map<Eigen::VectorXd>(rho.data(), static_cast<Eigen::Index>(rho.size()));
    }
    read(pj, "scale", pl.scale, "plan");
    read(pj, "delta", pl.delta, "plan");
    read(pj, "delta_exponent", pl.delta_exponent, "plan");
    read(pj, "tolerance", pl.tolerance, "plan");
    read(pj, "pass_fraction", pl.pass_fraction, "plan");
  }
  c.plan.seed = c.seed;
  c.plan.workers = c.workers;
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(ConfigErrc::Io, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json_text(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  json rows = json::array();
  for (const auto& row : c.rates) {
    json r = json::array();
    for (const auto& v : row) r.push_back(v ? json(*v) : json(nullptr));
    rows.push_back(r);
  }
  j["rates"] = rows;
  j["arrival"] = c.arrival;
  j["capacity"] = c.capacity;
  json pj;
  pj["ladder"] = c.plan.ladder;
  pj["replicas"] = c.plan.replicas;
  pj["horizon"] = c.plan.horizon;
  pj["window_start"] = c.plan.window_start;
  pj["start"] = to_string(c.plan.start);
  if (c.plan.rho.size()) pj["rho"] = std::vector<double>(c.plan.rho.data(), c.plan.rho.data() + c.plan.rho.size());
  pj["scale"] = c.plan.scale;
  pj["delta"] = c.plan.delta;
  pj["delta_exponent"] = c.plan.delta_exponent;
  pj["tolerance"] = c.plan.tolerance;
  pj["pass_fraction"] = c.plan.pass_fraction;
  j["plan"] = pj;
  if (c.regime) {
    j["regime"] = to_string(*c.regime);
  }
  j["alphas"] = c.alphas;
  j["ells"] = c.ells;
  j["times"] = c.times;
  j["eps"] = c.eps;
  j["delta"] = c.delta;
  if (!c.initial.empty()) j["initial"] = c.initial;
  j["t_max"] = c.t_max;
  j["paths"] = c.paths;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output"] = c.output;
  return j.dump(2);
}

bool equivalent(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json_text(a) == to_json_text(b);
}

}  // namespace mobnet
