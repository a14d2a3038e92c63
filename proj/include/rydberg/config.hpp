#pragma once

// Declarative experiment configs (JSON) with mandatory unit tags. Parsing
// collects every problem with its key path before failing.

#include "rydberg/objectives.hpp"

#include <json.hpp>

#include <set>
#include <sstream>

namespace rydberg {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errs) : std::runtime_error(join(errs)), errors_(std::move(errs)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& x : e) s += (s.empty() ? "" : "\n") + x;
    return s;
  }
  std::vector<std::string> errors_;
};

enum class Dim { frequency, length, time, rate, angle };

namespace cfg {

inline std::optional<double> unit_scale(Dim d, std::string_view u) {
  switch (d) {
    case Dim::frequency:
      if (u == "rad_per_us") return 1.0;
      if (u == "MHz_2pi") return kTwoPi;
      break;
    case Dim::length:
      if (u == "um") return 1.0;
      break;
    case Dim::time:
      if (u == "us") return 1.0;
      if (u == "ns") return 1e-3;
      if (u == "ms") return 1e3;
      if (u == "s") return 1e6;
      break;
    case Dim::rate:
      if (u == "per_us") return 1.0;
      if (u == "per_s") return 1e-6;
      break;
    case Dim::angle:
      if (u == "rad") return 1.0;
      if (u == "pi_rad") return kPi;
      break;
  }
  return std::nullopt;
}

inline std::string_view canonical_unit(Dim d) {
  switch (d) {
    case Dim::frequency: return "rad_per_us";
    case Dim::length: return "um";
    case Dim::time: return "us";
    case Dim::rate: return "per_us";
    case Dim::angle: return "rad";
  }
  return "";
}

inline std::string_view unit_choices(Dim d) {
  switch (d) {
    case Dim::frequency: return "MHz_2pi | rad_per_us";
    case Dim::length: return "um";
    case Dim::time: return "us | ns | ms | s";
    case Dim::rate: return "per_us | per_s";
    case Dim::angle: return "rad | pi_rad";
  }
  return "";
}

/// Typed view of one JSON object that records consumed keys and errors.
class Node {
 public:
  Node(const json* j, std::string path, std::vector<std::string>* errs) : j_(j), path_(std::move(path)), errs_(errs) {
    if (j_ && !j_->is_object()) {
      error("", "expected an object");
      j_ = nullptr;
    }
  }

  bool has(const std::string& k) const { return j_ && j_->contains(k); }
  std::string key_path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  void error(const std::string& k, const std::string& msg) const {
    errs_->push_back((k.empty() ? (path_.empty() ? std::string("<root>") : path_) : key_path(k)) + ": " + msg);
  }

  const json* raw(const std::string& k) {
    seen_.insert(k);
    if (!has(k)) return nullptr;
    return &j_->at(k);
  }

  Node child(const std::string& k) {
    const json* c = raw(k);
    return Node(c, key_path(k), errs_);
  }

  bool present() const { return j_ != nullptr; }

  std::optional<double> number(const std::string& k, std::optional<double> def = std::nullopt, bool required = false) {
    const json* v = raw(k);
    if (!v) {
      if (required) error(k, "missing required value");
      return def;
    }
    if (!v->is_number()) {
      error(k, "expected a number");
      return def;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x)) error(k, "must be finite");
    return x;
  }

  std::optional<long long> integer(const std::string& k, std::optional<long long> def = std::nullopt, bool required = false) {
    const json* v = raw(k);
    if (!v) {
      if (required) error(k, "missing required value");
      return def;
    }
    if (!v->is_number_integer()) {
      error(k, "expected an integer");
      return def;
    }
    return v->get<long long>();
  }

  std::optional<bool> boolean(const std::string& k, std::optional<bool> def = std::nullopt) {
    const json* v = raw(k);
    if (!v) return def;
    if (!v->is_boolean()) {
      error(k, "expected true or false");
      return def;
    }
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& k, std::optional<std::string> def = std::nullopt, bool required = false) {
    const json* v = raw(k);
    if (!v) {
      if (required) error(k, "missing required value");
      return def;
    }
    if (!v->is_string()) {
      error(k, "expected a string");
      return def;
    }
    return v->get<std::string>();
  }

  /// {"value": x, "unit": "..."} converted to canonical units.
  std::optional<double> quantity(const std::string& k, Dim d, std::optional<double> def = std::nullopt, bool required = false) {
    const json* v = raw(k);
    if (!v) {
      if (required) error(k, "missing required value");
      return def;
    }
    if (v->is_number()) {
      error(k, "missing unit tag; write {\"value\": ..., \"unit\": \"" + std::string(unit_choices(d)) + "\"}");
      return def;
    }
    if (!v->is_object()) {
      error(k, "expected {\"value\", \"unit\"}");
      return def;
    }
    for (auto it = v->begin(); it != v->end(); ++it)
      if (it.key() != "value" && it.key() != "unit") error(k + "." + it.key(), "unknown key");
    if (!v->contains("unit")) {
      error(k, "missing unit tag (" + std::string(unit_choices(d)) + ")");
      return def;
    }
    if (!v->contains("value") || !v->at("value").is_number()) {
      error(k + ".value", "expected a number");
      return def;
    }
    const auto& u = v->at("unit");
    const auto scale = u.is_string() ? unit_scale(d, u.get<std::string>()) : std::nullopt;
    if (!scale) {
      error(k + ".unit", "unknown unit; expected " + std::string(unit_choices(d)));
      return def;
    }
    const double x = v->at("value").get<double>() * *scale;
    if (!std::isfinite(x)) error(k, "must be finite");
    return x;
  }

  /// {"values": [...], "unit": "..."} converted to canonical units.
  std::optional<std::vector<double>> quantity_list(const std::string& k, Dim d, bool required = false) {
    const json* v = raw(k);
    if (!v) {
      if (required) error(k, "missing required value");
      return std::nullopt;
    }
    if (!v->is_object() || !v->contains("values") || !v->at("values").is_array()) {
      error(k, "expected {\"values\": [...], \"unit\": \"" + std::string(unit_choices(d)) + "\"}");
      return std::nullopt;
    }
    for (auto it = v->begin(); it != v->end(); ++it)
      if (it.key() != "values" && it.key() != "unit") error(k + "." + it.key(), "unknown key");
    if (!v->contains("unit")) {
      error(k, "missing unit tag (" + std::string(unit_choices(d)) + ")");
      return std::nullopt;
    }
    const auto& u = v->at("unit");
    const auto scale = u.is_string() ? unit_scale(d, u.get<std::string>()) : std::nullopt;
    if (!scale) {
      error(k + ".unit", "unknown unit; expected " + std::string(unit_choices(d)));
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& e : v->at("values")) {
      if (!e.is_number()) {
        error(k + ".values", "expected numbers");
        return std::nullopt;
      }
      out.push_back(e.get<double>() * *scale);
    }
    return out;
  }

  /// Reports keys that were never read.
  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!seen_.count(it.key())) error(it.key(), "unknown key");
  }

 private:
  const json* j_;
  std::string path_;
  std::vector<std::string>* errs_;
  std::set<std::string> seen_;
};

inline json q(double v, Dim d) { return json{{"value", v}, {"unit", std::string(canonical_unit(d))}}; }

inline json ql(const std::vector<double>& v, Dim d) { return json{{"values", v}, {"unit", std::string(canonical_unit(d))}}; }

}  // namespace cfg

// ---------------------------------------------------------------------------

struct GeometryConfig {
  LatticeKind kind = LatticeKind::chain;
  std::vector<int> counts{2};
  double spacing = 5.0;
  double dimerization_offset = 0.0;
  double perpendicular_offset = 0.0;
  double tilt = 0.0;

  Register build() const {
    LatticeExtra e;
    e.dimerization_offset = dimerization_offset;
    e.perpendicular_offset = perpendicular_offset;
    e.tilt = tilt;
    return build_lattice(kind, counts, spacing, e);
  }
  bool periodic() const { return kind == LatticeKind::ring; }
};

struct InteractionConfig {
  ModelKind model = ModelKind::ising;
  double v_nn = kTwoPi * 10.0;  ///< strength at the nearest-neighbour distance
  int power = 6;
  double anisotropy = 0.0;
  std::optional<double> blockade_radius;  ///< pxp graph; default 1.5 x spacing
};

struct GateTask {
  std::string protocol = "CZ_B";
  GateParams params;
  long shots = 0;
};

struct SweepTask {
  RampSchedule ramp;
  int samples_per_segment = 10;
  long shots = 0;
};

struct SpectrumTask {
  double omega = 0.0;
  std::vector<double> delta;
};

struct QuenchTask {
  std::string pattern;
  double omega = 0.0;
  double delta = 0.0;
  double duration = 1.0;
  int samples = 100;
};

struct BenchEntry {
  DepthSource source = DepthSource::digital;
  double a = 0.0, b = 0.0, c = 0.0;  ///< (F) | (V_max, T_coh) | (tau, T1) | (N, tau_g, T_trap)
};

struct BenchTask {
  std::vector<BenchEntry> entries;
};

struct OptimizeTask {
  std::string objective = "pcz";
  int budget = 500;
  int restarts = 0;
  std::optional<double> target_cost;
  std::optional<std::vector<double>> initial;
  double v_over_omega = 500.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output = "out";
  std::optional<GeometryConfig> geometry;
  std::optional<InteractionConfig> interactions;
  std::optional<Encoding> encoding;
  std::optional<NoiseModel> noise;
  std::string task;
  GateTask gate;
  SweepTask sweep;
  SpectrumTask spectrum;
  QuenchTask quench;
  BenchTask bench;
  OptimizeTask optimize;
};

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> t{"gate", "sweep", "spectrum", "quench", "bench", "optimize"};
  return t;
}

namespace cfg {

inline std::optional<Encoding> parse_encoding(std::string_view s) {
  if (s == "gr") return Encoding::gr;
  if (s == "gg") return Encoding::gg;
  if (s == "rr") return Encoding::rr;
  return std::nullopt;
}

inline std::optional<DepthSource> parse_depth_source(std::string_view s) {
  if (s == "digital") return DepthSource::digital;
  if (s == "analog") return DepthSource::analog;
  if (s == "lifetime") return DepthSource::lifetime;
  if (s == "loss") return DepthSource::loss;
  return std::nullopt;
}

inline std::string_view model_name(ModelKind k) {
  switch (k) {
    case ModelKind::ising: return "ising";
    case ModelKind::pxp: return "pxp";
    case ModelKind::xy: return "xy";
    case ModelKind::xxz: return "xxz";
  }
  return "";
}

inline std::string_view lattice_name(LatticeKind k) {
  switch (k) {
    case LatticeKind::chain: return "chain";
    case LatticeKind::ring: return "ring";
    case LatticeKind::square: return "square";
    case LatticeKind::triangular: return "triangular";
    case LatticeKind::staggered_chain: return "staggered_chain";
  }
  return "";
}

inline void parse_geometry(Node n, ExperimentConfig& c) {
  GeometryConfig g;
  if (auto s = n.string("lattice", std::nullopt, true)) {
    if (auto k = parse_lattice_kind(*s)) g.kind = *k;
    else n.error("lattice", "unknown lattice '" + *s + "'");
  }
  if (const json* cnt = n.raw("counts")) {
    g.counts.clear();
    if (!cnt->is_array() || cnt->empty()) n.error("counts", "expected a non-empty integer array");
    else
      for (const auto& e : *cnt) {
        if (!e.is_number_integer() || e.get<long long>() < 1) {
          n.error("counts", "entries must be positive integers");
          break;
        }
        g.counts.push_back(e.get<int>());
      }
  } else {
    n.error("counts", "missing required value");
  }
  g.spacing = n.quantity("spacing", Dim::length, 5.0, true).value_or(5.0);
  g.dimerization_offset = n.quantity("dimerization_offset", Dim::length, 0.0).value_or(0.0);
  g.perpendicular_offset = n.quantity("perpendicular_offset", Dim::length, 0.0).value_or(0.0);
  g.tilt = n.quantity("tilt", Dim::angle, 0.0).value_or(0.0);
  if (!(g.spacing > 0.0)) n.error("spacing", "must be positive");
  n.finish();
  c.geometry = g;
}

inline void parse_interactions(Node n, ExperimentConfig& c) {
  InteractionConfig ic;
  if (auto s = n.string("model", std::nullopt, true)) {
    if (auto k = parse_model_kind(*s)) ic.model = *k;
    else n.error("model", "unknown model '" + *s + "' (ising | pxp | xy | xxz)");
  }
  ic.v_nn = n.quantity("v_nn", Dim::frequency, ic.v_nn, true).value_or(ic.v_nn);
  ic.power = static_cast<int>(n.integer("power", 6).value_or(6));
  if (ic.power != 3 && ic.power != 6) n.error("power", "must be 3 or 6");
  ic.anisotropy = n.number("anisotropy", 0.0).value_or(0.0);
  ic.blockade_radius = n.quantity("blockade_radius", Dim::length);
  n.finish();
  c.interactions = ic;
}

inline void parse_noise(Node n, ExperimentConfig& c) {
  NoiseModel m;
  if (auto t1 = n.quantity("t1", Dim::time)) {
    if (*t1 > 0.0) m.decay_rate = 1.0 / *t1;
    else n.error("t1", "must be positive");
  }
  if (auto t2 = n.quantity("t2", Dim::time)) {
    if (*t2 > 0.0) m.dephasing = 2.0 / *t2;
    else n.error("t2", "must be positive");
  }
  m.branching_to_zero = n.number("branching_to_zero", 1.0).value_or(1.0);
  m.scatter_lower = n.quantity("scatter_lower", Dim::rate, 0.0).value_or(0.0);
  m.scatter_upper = n.quantity("scatter_upper", Dim::rate, 0.0).value_or(0.0);
  m.sigma_doppler = n.quantity("sigma_doppler", Dim::frequency, 0.0).value_or(0.0);
  try {
    m.validate();
  } catch (const Error& e) {
    n.error("", e.what());
  }
  n.finish();
  c.noise = m;
}

inline void parse_gate(Node n, ExperimentConfig& c) {
  GateTask& t = c.gate;
  t.protocol = n.string("protocol", std::nullopt, true).value_or("CZ_B");
  const auto names = protocol_names();
  if (std::find(names.begin(), names.end(), t.protocol) == names.end()) n.error("protocol", "unknown protocol '" + t.protocol + "'");
  GateParams& p = t.params;
  p.omega = n.quantity("omega", Dim::frequency, p.omega, true).value_or(p.omega);
  p.v_over_omega = n.number("v_over_omega", p.v_over_omega).value_or(p.v_over_omega);
  p.spacing = n.quantity("spacing", Dim::length, p.spacing).value_or(p.spacing);
  p.theta = n.quantity("theta", Dim::angle, p.theta).value_or(p.theta);
  p.phi = n.quantity("phi", Dim::angle, p.phi).value_or(p.phi);
  p.phase_compensation = n.boolean("phase_compensation", p.phase_compensation).value_or(true);
  p.m = static_cast<int>(n.integer("m", p.m).value_or(0));
  p.tau2 = n.quantity("tau2", Dim::time, p.tau2).value_or(p.tau2);
  p.ideal_transfer = n.boolean("ideal_transfer", p.ideal_transfer).value_or(true);
  p.pcz_delta = n.number("pcz_delta_over_omega", p.pcz_delta).value_or(p.pcz_delta);
  p.pcz_phi = n.quantity("pcz_phi", Dim::angle, p.pcz_phi).value_or(p.pcz_phi);
  p.pcz_time = n.number("pcz_time_omega", p.pcz_time).value_or(p.pcz_time);
  p.xy_theta = n.quantity("xy_theta", Dim::angle, p.xy_theta).value_or(p.xy_theta);
  if (auto v = n.string("xy_variant", "generalized")) {
    if (*v == "generalized") p.xy_variant = XYVariant::generalized;
    else if (*v == "bare") p.xy_variant = XYVariant::bare;
    else n.error("xy_variant", "expected generalized | bare");
  }
  p.target_omega = n.quantity("target_omega", Dim::frequency, 0.0).value_or(0.0);
  p.controls = static_cast<int>(n.integer("controls", p.controls).value_or(2));
  p.blockade_min = n.number("blockade_min", p.blockade_min).value_or(p.blockade_min);
  t.shots = static_cast<long>(n.integer("shots", 0).value_or(0));
  if (!(p.omega > 0.0)) n.error("omega", "must be positive");
  if (!(p.v_over_omega > 0.0)) n.error("v_over_omega", "must be positive");
  if (t.shots < 0) n.error("shots", "must be >= 0");
  if (p.controls < 1 || p.controls > 4) n.error("controls", "must lie in 1..4");
  n.finish();
}

inline void parse_sweep(Node n, ExperimentConfig& c) {
  SweepTask& t = c.sweep;
  Node r = n.child("ramp");
  if (!r.present()) n.error("ramp", "missing required value");
  auto tt = r.quantity_list("t", Dim::time, r.present());
  auto om = r.quantity_list("omega", Dim::frequency, r.present());
  auto de = r.quantity_list("delta", Dim::frequency, r.present());
  r.finish();
  if (tt && om && de) {
    t.ramp = RampSchedule{*tt, *om, *de};
    try {
      t.ramp.validate();
    } catch (const Error& e) {
      n.error("ramp", e.what());
    }
  }
  t.samples_per_segment = static_cast<int>(n.integer("samples_per_segment", 10).value_or(10));
  t.shots = static_cast<long>(n.integer("shots", 0).value_or(0));
  if (t.samples_per_segment < 1) n.error("samples_per_segment", "must be >= 1");
  if (t.shots < 0) n.error("shots", "must be >= 0");
  n.finish();
}

inline void parse_spectrum(Node n, ExperimentConfig& c) {
  c.spectrum.omega = n.quantity("omega", Dim::frequency, 0.0, true).value_or(0.0);
  c.spectrum.delta = n.quantity_list("delta", Dim::frequency, true).value_or(std::vector<double>{});
  if (c.spectrum.delta.empty() && n.has("delta")) n.error("delta", "needs at least one value");
  n.finish();
}

inline void parse_quench(Node n, ExperimentConfig& c) {
  QuenchTask& t = c.quench;
  t.pattern = n.string("pattern", std::nullopt, true).value_or("");
  for (char ch : t.pattern)
    if (ch != '0' && ch != '1') {
      n.error("pattern", "use only '0' and '1'");
      break;
    }
  t.omega = n.quantity("omega", Dim::frequency, 0.0, true).value_or(0.0);
  t.delta = n.quantity("delta", Dim::frequency, 0.0).value_or(0.0);
  t.duration = n.quantity("duration", Dim::time, 1.0, true).value_or(1.0);
  t.samples = static_cast<int>(n.integer("samples", 100).value_or(100));
  if (t.duration < 0.0) n.error("duration", "must be >= 0");
  if (t.samples < 1) n.error("samples", "must be >= 1");
  n.finish();
}


inline void parse_bench_entries(const json& arr, const std::string& path, std::vector<std::string>& errs, BenchTask& out) {
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Node en(&arr[i], path + "[" + std::to_string(i) + "]", &errs);
    BenchEntry b;
    const auto src = en.string("source", std::nullopt, true);
    if (src) {
      if (auto s = parse_depth_source(*src)) b.source = *s;
      else en.error("source", "expected digital | analog | lifetime | loss");
    }
    switch (b.source) {
      case DepthSource::digital: b.a = en.number("fidelity", 0.0, true).value_or(0.0); break;
      case DepthSource::analog:
        b.a = en.quantity("v_max", Dim::frequency, 0.0, true).value_or(0.0);
        b.b = en.quantity("t_coh", Dim::time, 0.0, true).value_or(0.0);
        break;
      case DepthSource::lifetime:
        b.a = en.quantity("tau", Dim::time, 0.0, true).value_or(0.0);
        b.b = en.quantity("t1", Dim::time, 0.0, true).value_or(0.0);
        break;
      case DepthSource::loss:
        b.a = en.number("n_atoms", 0.0, true).value_or(0.0);
        b.b = en.quantity("tau_g", Dim::time, 0.0, true).value_or(0.0);
        b.c = en.quantity("t_trap", Dim::time, 0.0, true).value_or(0.0);
        break;
    }
    en.finish();
    out.entries.push_back(b);
  }
}

inline void parse_optimize(Node n, ExperimentConfig& c) {
  OptimizeTask& t = c.optimize;
  t.objective = n.string("objective", std::nullopt, true).value_or("pcz");
  if (t.objective != "pcz" && t.objective != "ghz4") n.error("objective", "expected pcz | ghz4");
  t.budget = static_cast<int>(n.integer("budget", 500).value_or(500));
  t.restarts = static_cast<int>(n.integer("restarts", 0).value_or(0));
  t.target_cost = n.number("target_cost");
  t.v_over_omega = n.number("v_over_omega", 500.0).value_or(500.0);
  if (const json* init = n.raw("initial")) {
    if (!init->is_array()) n.error("initial", "expected an array of numbers in the objective's native units");
    else {
      std::vector<double> x;
      for (const auto& e : *init) {
        if (!e.is_number()) {
          n.error("initial", "expected numbers");
          break;
        }
        x.push_back(e.get<double>());
      }
      const std::size_t want = t.objective == "pcz" ? 3 : 6;
      if (x.size() != want) n.error("initial", "needs " + std::to_string(want) + " entries");
      t.initial = x;
    }
  }
  if (t.budget < 8) n.error("budget", "must be >= 8");
  if (t.restarts < 0) n.error("restarts", "must be >= 0");
  n.finish();
}

}  // namespace cfg

/// Parses and validates a config; throws ConfigError listing every problem.
inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("<root>: malformed JSON: ") + e.what()});
  }
  std::vector<std::string> errs;
  ExperimentConfig c;
  cfg::Node root(&j, "", &errs);
  if (!root.present()) throw ConfigError(errs);
  if (auto s = root.integer("seed", 0)) {
    if (*s < 0) root.error("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(std::max<long long>(*s, 0));
  }
  c.output = root.string("output", "out").value_or("out");
  if (root.has("geometry")) cfg::parse_geometry(root.child("geometry"), c);
  if (root.has("interactions")) cfg::parse_interactions(root.child("interactions"), c);
  if (root.has("noise")) cfg::parse_noise(root.child("noise"), c);
  if (root.has("levels")) {
    cfg::Node lv = root.child("levels");
    if (auto e = lv.string("encoding", std::nullopt, true)) {
      if (auto en = cfg::parse_encoding(*e)) c.encoding = en;
      else lv.error("encoding", "expected gr | gg | rr");
    }
    lv.finish();
  }
  std::vector<std::string> tasks;
  for (const auto& t : task_names())
    if (root.has(t)) tasks.push_back(t);
  if (tasks.size() != 1) {
    root.error("", "exactly one task block required (gate | sweep | spectrum | quench | bench | optimize), found " +
                       std::to_string(tasks.size()));
  } else {
    c.task = tasks[0];
    if (c.task == "gate") cfg::parse_gate(root.child("gate"), c);
    if (c.task == "sweep") cfg::parse_sweep(root.child("sweep"), c);
    if (c.task == "spectrum") cfg::parse_spectrum(root.child("spectrum"), c);
    if (c.task == "quench") cfg::parse_quench(root.child("quench"), c);
    if (c.task == "bench") {
      cfg::Node b = root.child("bench");
      const json* e = b.raw("entries");
      if (!e || !e->is_array() || e->empty()) b.error("entries", "expected a non-empty array");
      else cfg::parse_bench_entries(*e, b.key_path("entries"), errs, c.bench);
      b.finish();
    }
    if (c.task == "optimize") cfg::parse_optimize(root.child("optimize"), c);
  }
  for (const auto& t : tasks)
    if (t != c.task) root.raw(t);
  root.finish();

  // cross-block references
  const bool many_body = c.task == "sweep" || c.task == "spectrum" || c.task == "quench";
  if (many_body && !c.geometry) errs.push_back("geometry: required by the " + c.task + " task");
  if (many_body && !c.interactions) errs.push_back("interactions: required by the " + c.task + " task");
  if (c.task == "quench" && c.geometry && !c.quench.pattern.empty()) {
    try {
      if (c.quench.pattern.size() != c.geometry->build().size())
        errs.push_back("quench.pattern: length differs from the number of sites");
    } catch (const Error& e) {
      errs.push_back(std::string("geometry: ") + e.what());
    }
  }
  if (c.task == "gate" && c.encoding) {
    const Encoding need = (c.gate.protocol == "CUxy" || c.gate.protocol == "pCUxy") ? Encoding::gr : Encoding::gg;
    if (*c.encoding != need) errs.push_back("levels.encoding: protocol " + c.gate.protocol + " uses " + std::string(to_string(need)));
  }
  if (!errs.empty()) throw ConfigError(errs);
  return c;
}

/// Resolved config in canonical units; parse_config(dump) reproduces it.
inline json to_json(const ExperimentConfig& c) {
  using cfg::q;
  using cfg::ql;
  json j;
  j["seed"] = c.seed;
  j["output"] = c.output;
  if (c.geometry) {
    const auto& g = *c.geometry;
    j["geometry"] = {{"lattice", std::string(cfg::lattice_name(g.kind))},
                     {"counts", g.counts},
                     {"spacing", q(g.spacing, Dim::length)},
                     {"dimerization_offset", q(g.dimerization_offset, Dim::length)},
                     {"perpendicular_offset", q(g.perpendicular_offset, Dim::length)},
                     {"tilt", q(g.tilt, Dim::angle)}};
  }
  if (c.interactions) {
    const auto& i = *c.interactions;
    j["interactions"] = {{"model", std::string(cfg::model_name(i.model))},
                         {"v_nn", q(i.v_nn, Dim::frequency)},
                         {"power", i.power},
                         {"anisotropy", i.anisotropy}};
    if (i.blockade_radius) j["interactions"]["blockade_radius"] = q(*i.blockade_radius, Dim::length);
  }
  if (c.encoding) j["levels"] = {{"encoding", std::string(to_string(*c.encoding))}};
  if (c.noise) {
    const auto& n = *c.noise;
    json nj = {{"branching_to_zero", n.branching_to_zero},
               {"scatter_lower", q(n.scatter_lower, Dim::rate)},
               {"scatter_upper", q(n.scatter_upper, Dim::rate)},
               {"sigma_doppler", q(n.sigma_doppler, Dim::frequency)}};
    if (n.decay_rate > 0.0) nj["t1"] = q(1.0 / n.decay_rate, Dim::time);
    if (n.dephasing > 0.0) nj["t2"] = q(2.0 / n.dephasing, Dim::time);
    j["noise"] = nj;
  }
  if (c.task == "gate") {
    const auto& p = c.gate.params;
    j["gate"] = {{"protocol", c.gate.protocol},
                 {"omega", q(p.omega, Dim::frequency)},
                 {"v_over_omega", p.v_over_omega},
                 {"spacing", q(p.spacing, Dim::length)},
                 {"theta", q(p.theta, Dim::angle)},
                 {"phi", q(p.phi, Dim::angle)},
                 {"phase_compensation", p.phase_compensation},
                 {"m", p.m},
                 {"tau2", q(p.tau2, Dim::time)},
                 {"ideal_transfer", p.ideal_transfer},
                 {"pcz_delta_over_omega", p.pcz_delta},
                 {"pcz_phi", q(p.pcz_phi, Dim::angle)},
                 {"pcz_time_omega", p.pcz_time},
                 {"xy_theta", q(p.xy_theta, Dim::angle)},
                 {"xy_variant", p.xy_variant == XYVariant::generalized ? "generalized" : "bare"},
                 {"target_omega", q(p.target_omega, Dim::frequency)},
                 {"controls", p.controls},
                 {"blockade_min", p.blockade_min},
                 {"shots", c.gate.shots}};
  } else if (c.task == "sweep") {
    j["sweep"] = {{"ramp",
                   {{"t", ql(c.sweep.ramp.t, Dim::time)},
                    {"omega", ql(c.sweep.ramp.omega, Dim::frequency)},
                    {"delta", ql(c.sweep.ramp.delta, Dim::frequency)}}},
                  {"samples_per_segment", c.sweep.samples_per_segment},
                  {"shots", c.sweep.shots}};
  } else if (c.task == "spectrum") {
    j["spectrum"] = {{"omega", q(c.spectrum.omega, Dim::frequency)}, {"delta", ql(c.spectrum.delta, Dim::frequency)}};
  } else if (c.task == "quench") {
    j["quench"] = {{"pattern", c.quench.pattern},
                   {"omega", q(c.quench.omega, Dim::frequency)},
                   {"delta", q(c.quench.delta, Dim::frequency)},
                   {"duration", q(c.quench.duration, Dim::time)},
                   {"samples", c.quench.samples}};
  } else if (c.task == "bench") {
    json arr = json::array();
    for (const auto& b : c.bench.entries) {
      json e = {{"source", std::string(to_string(b.source))}};
      switch (b.source) {
        case DepthSource::digital: e["fidelity"] = b.a; break;
        case DepthSource::analog:
          e["v_max"] = q(b.a, Dim::frequency);
          e["t_coh"] = q(b.b, Dim::time);
          break;
        case DepthSource::lifetime:
          e["tau"] = q(b.a, Dim::time);
          e["t1"] = q(b.b, Dim::time);
          break;
        case DepthSource::loss:
          e["n_atoms"] = b.a;
          e["tau_g"] = q(b.b, Dim::time);
          e["t_trap"] = q(b.c, Dim::time);
          break;
      }
      arr.push_back(e);
    }
    j["bench"] = {{"entries", arr}};
  } else if (c.task == "optimize") {
    const auto& o = c.optimize;
    j["optimize"] = {{"objective", o.objective}, {"budget", o.budget}, {"restarts", o.restarts}, {"v_over_omega", o.v_over_omega}};
    if (o.target_cost) j["optimize"]["target_cost"] = *o.target_cost;
    if (o.initial) j["optimize"]["initial"] = *o.initial;
  }
  return j;
}

inline std::string canonical_dump(const ExperimentConfig& c) { return to_json(c).dump(); }

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(canonical_dump(c));
  return os.str();
}

}  // namespace rydberg
