#include "rydberg/config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace rydberg;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNumerical = 3 };

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", std::abs(x) < 1e-300 ? 0.0 : x);
  return buf;
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error("cli", "cannot write " + (dir_ / name).string());
    return f;
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Run {
  const ExperimentConfig& cfg;
  Outputs& out;
  bool quiet;
  json results = json::object();
};

Register task_register(const ExperimentConfig& c) { return c.geometry->build(); }

SweepSystem task_system(const ExperimentConfig& c) {
  const Register reg = task_register(c);
  const auto& ic = *c.interactions;
  const Eigen::MatrixXd v = power_law_couplings(reg, ic.v_nn, ic.power);
  if (ic.model == ModelKind::pxp) {
    const auto graph = blockade_graph(reg, ic.blockade_radius.value_or(1.5 * c.geometry->spacing));
    return make_sweep_system(ic.model, v, ic.anisotropy, &graph);
  }
  return make_sweep_system(ic.model, v, ic.anisotropy);
}

void run_gate(Run& r) {
  const auto& c = r.cfg;
  const auto g = build_protocol(c.gate.protocol, c.gate.params);
  const NoiseModel* noise = c.noise ? &*c.noise : nullptr;
  const auto rep = extract_process(g, noise);
  const int n = rep.qubits;
  const auto d = static_cast<Eigen::Index>(1) << n;

  {
    auto f = r.out.open("schedule.csv");
    write_schedule_csv(f, g.schedule);
  }
  {
    // time-resolved level populations for every computational input
    const SystemModel sys = g.system(noise && noise->needs_sink());
    auto f = r.out.open("populations.csv");
    f << "input,t_us";
    for (Eigen::Index i = 0; i < sys.basis.size(); ++i) {
      f << ",P_";
      const auto dg = sys.basis.digits(i);
      for (std::size_t j = 0; j < dg.size(); ++j)
        f << (j ? "_" : "") << to_string(sys.basis.schemes()[j].labels()[static_cast<std::size_t>(dg[j])]);
    }
    f << '\n';
    PropagateOptions opt;
    opt.sample_dt = g.gate_time() / 100.0;
    std::vector<QuantumState> inputs;
    std::vector<std::ostringstream> rows(static_cast<std::size_t>(d));
    auto row = [&](std::size_t k, double t, const QuantumState& s) {
      auto& o = rows[k];
      o << bit_string(k, n) << ',' << num(t);
      const Eigen::VectorXd p = s.populations();
      for (Eigen::Index i = 0; i < p.size(); ++i) o << ',' << num(p(i));
      o << '\n';
    };
    for (Eigen::Index j = 0; j < d; ++j) {
      inputs.push_back(QuantumState::pure(sys.basis, computational_state(sys.basis, bit_string(static_cast<std::size_t>(j), n))));
      row(static_cast<std::size_t>(j), 0.0, inputs.back());
    }
    propagate_batch(inputs, g.schedule, sys, noise, opt, row);
    for (const auto& o : rows) f << o.str();
  }
  if (rep.has_operator) {
    auto f = r.out.open("operator.csv");
    f << "row,col,re,im\n";
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        f << bit_string(static_cast<std::size_t>(i), n) << ',' << bit_string(static_cast<std::size_t>(j), n) << ','
          << num(rep.op(i, j).real()) << ',' << num(rep.op(i, j).imag()) << '\n';
  }
  {
    auto f = r.out.open("phases.csv");
    f << "input,phase_rad\n";
    for (std::size_t i = 0; i < rep.phases.size(); ++i) f << bit_string(i, n) << ',' << num(rep.phases[i]) << '\n';
  }
  {
    auto f = r.out.open("truth_table.csv");
    f << "input,output,probability\n";
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i)
        f << bit_string(static_cast<std::size_t>(j), n) << ',' << bit_string(static_cast<std::size_t>(i), n) << ','
          << num(rep.truth_table(i, j)) << '\n';
  }
  if (c.gate.shots > 0) {
    auto f = r.out.open("shots.csv");
    f << "input,output,count\n";
    for (Eigen::Index j = 0; j < d; ++j) {
      std::vector<long> hits(static_cast<std::size_t>(d), 0);
      const Eigen::VectorXd p = rep.truth_table.col(j).cwiseMax(0.0);
      const double total = p.sum();
      for (long s = 0; s < c.gate.shots; ++s) {
        CounterRng rng(c.seed, derive_stream("gate_shot", static_cast<std::uint64_t>(j) * 1000003ULL + static_cast<std::uint64_t>(s)));
        double u = rng.uniform() * total;
        Eigen::Index k = 0;
        while (k + 1 < d && u >= p(k)) u -= p(k++);
        ++hits[static_cast<std::size_t>(k)];
      }
      for (Eigen::Index i = 0; i < d; ++i)
        if (hits[static_cast<std::size_t>(i)])
          f << bit_string(static_cast<std::size_t>(j), n) << ',' << bit_string(static_cast<std::size_t>(i), n) << ','
            << hits[static_cast<std::size_t>(i)] << '\n';
    }
  }
  const auto tt = truth_table_fidelity(rep.truth_table, g.ideal);
  r.results = {{"protocol", g.name},      {"qubits", n},
               {"gate_time_us", rep.gate_time}, {"fidelity", rep.fidelity},
               {"fidelity_raw", rep.fidelity_raw}, {"leakage", rep.leakage},
               {"truth_table_fidelity", tt.fidelity}, {"interaction_rad_per_us", g.v},
               {"phases_rad", rep.phases}};
  if (!r.quiet) write_report(std::cout, rep);
}

void run_sweep(Run& r) {
  const auto& c = r.cfg;
  const auto sys = task_system(c);
  std::optional<SweepNoise> noise;
  if (c.noise && c.noise->dissipative()) noise = SweepNoise{c.noise->dephasing, c.noise->decay_rate};
  const auto res = adiabatic_sweep(sys, c.sweep.ramp, noise ? &*noise : nullptr, c.sweep.samples_per_segment);
  {
    auto f = r.out.open("sweep.csv");
    f << "t_us,omega_rad_per_us,delta_rad_per_us,z2_probability,rydberg_density\n";
    for (const auto& s : res.samples)
      f << num(s.t) << ',' << num(s.omega) << ',' << num(s.delta) << ',' << num(s.z2_probability) << ','
        << num(s.rydberg_density) << '\n';
  }
  {
    auto f = r.out.open("correlations.csv");
    f << "i,j,g_ij\n";
    for (Eigen::Index i = 0; i < res.correlations.rows(); ++i)
      for (Eigen::Index j = 0; j < res.correlations.cols(); ++j) f << i << ',' << j << ',' << num(res.correlations(i, j)) << '\n';
  }
  {
    auto f = r.out.open("correlations_by_distance.csv");
    f << "distance_sites,g\n";
    const auto g = correlation_by_distance(res.correlations, c.geometry->periodic());
    for (std::size_t k = 0; k < g.size(); ++k) f << k << ',' << num(g[k]) << '\n';
  }
  {
    auto f = r.out.open("populations.csv");
    f << "pattern,probability\n";
    const Eigen::VectorXd p = res.state.populations();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(p.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p(a) > p(b); });
    for (std::size_t k = 0; k < std::min<std::size_t>(idx.size(), 32); ++k)
      f << basis_label(sys.basis, idx[k]) << ',' << num(p(idx[k])) << '\n';
  }
  if (c.sweep.shots > 0) {
    auto f = r.out.open("shots.csv");
    f << "pattern,count\n";
    for (const auto& [k, v] : sample_measurements(res.state, c.sweep.shots, c.seed)) f << k << ',' << v << '\n';
  }
  const double density = res.samples.empty() ? 0.0 : res.samples.back().rydberg_density;
  r.results = {{"z2_probability", res.z2_probability}, {"ground_overlap", res.ground_overlap},
               {"final_density", density}, {"sites", sys.sites()}, {"hilbert_dim", sys.basis.size()}};
  if (!r.quiet)
    std::cout << "sites: " << sys.sites() << "\nz2_probability: " << num(res.z2_probability)
              << "\nground_overlap: " << num(res.ground_overlap) << '\n';
}

void run_spectrum(Run& r) {
  const auto& c = r.cfg;
  const auto sys = task_system(c);
  auto f = r.out.open("spectrum.csv");
  f << "delta_rad_per_us,energy_rad_per_us,gap_rad_per_us,density,m2,m3,m4,detected_q,dominant_config\n";
  json rows = json::array();
  for (double d : c.spectrum.delta) {
    const auto g = ground_state(sys, c.spectrum.omega, d, c.seed);
    std::string cfgs;
    for (int x : g.dominant_config) cfgs += static_cast<char>('0' + x);
    f << num(d) << ',' << num(g.energy) << ',' << num(g.gap) << ',' << num(g.density) << ',' << num(g.order.at(2)) << ','
      << num(g.order.at(3)) << ',' << num(g.order.at(4)) << ',' << g.detected_q << ',' << cfgs << '\n';
    rows.push_back({{"delta_rad_per_us", d}, {"detected_q", g.detected_q}});
    if (!r.quiet) std::cout << "delta " << num(d) << "  E0 " << num(g.energy) << "  q " << g.detected_q << "  " << cfgs << '\n';
  }
  r.results = {{"points", rows}};
}

void run_quench(Run& r) {
  const auto& c = r.cfg;
  const auto sys = task_system(c);
  const auto& q = c.quench;
  const auto series = quench_dynamics(sys, q.pattern, q.omega, q.delta, q.duration, q.samples, c.geometry->periodic());
  auto f = r.out.open("quench.csv");
  f << "t_us,p_initial,p_partner,domain_walls\n";
  std::vector<double> pi;
  for (const auto& s : series) {
    f << num(s.t) << ',' << num(s.p_initial) << ',' << num(s.p_partner) << ',' << num(s.domain_walls) << '\n';
    pi.push_back(s.p_initial);
  }
  const double contrast = first_revival_contrast(pi);
  r.results = {{"revival_contrast", contrast}};
  if (!r.quiet) std::cout << "revival_contrast: " << num(contrast) << '\n';
}

void run_bench(Run& r) {
  auto f = r.out.open("bench.csv");
  const std::string header = "source,epsilon,dsquare,ngates\n";
  f << header;
  if (!r.quiet) std::cout << header;
  json rows = json::array();
  for (const auto& b : r.cfg.bench.entries) {
    DepthEstimate e;
    switch (b.source) {
      case DepthSource::digital: e = dsquare_digital(b.a); break;
      case DepthSource::analog: e = dsquare_analog(b.a, b.b); break;
      case DepthSource::lifetime: e = dsquare_lifetime(b.a, b.b); break;
      case DepthSource::loss: e = dsquare_loss(b.a, b.b, b.c); break;
    }
    const std::string row = std::string(to_string(e.source)) + ',' + num(e.epsilon) + ',' +
                            (e.unbounded ? std::string("inf") : std::to_string(e.dsquare)) + ',' +
                            (e.unbounded ? std::string("inf") : num(e.ngates)) + '\n';
    f << row;
    if (!r.quiet) std::cout << row;
    rows.push_back({{"source", to_string(e.source)}, {"epsilon", e.epsilon}, {"unbounded", e.unbounded}, {"dsquare", e.dsquare}});
  }
  r.results = {{"entries", rows}};
}

void run_optimize(Run& r) {
  const auto& o = r.cfg.optimize;
  OptimizationProblem pb;
  pb.budget = o.budget;
  pb.restarts = o.restarts;
  pb.seed = r.cfg.seed;
  pb.target_cost = o.target_cost;
  std::function<void(const Eigen::VectorXd&)> describe;
  if (o.objective == "pcz") {
    PczObjective obj;
    obj.v_over_omega = o.v_over_omega;
    pb.params = PczObjective::params();
    pb.objective = obj;
    pb.initial = PczObjective::published();
  } else {
    pb.params = Ghz4Objective::params();
    pb.objective = Ghz4Objective{};
  }
  if (o.initial) pb.initial = Eigen::Map<const Eigen::VectorXd>(o.initial->data(), static_cast<Eigen::Index>(o.initial->size()));
  const auto res = minimize(pb);
  {
    auto f = r.out.open("trace.csv");
    write_trace_csv(f, pb, res);
  }
  {
    auto f = r.out.open("best.csv");
    f << "parameter,value\n";
    for (std::size_t i = 0; i < pb.params.size(); ++i) f << pb.params[i].name << ',' << num(res.best(static_cast<Eigen::Index>(i))) << '\n';
  }
  std::vector<double> best(res.best.data(), res.best.data() + res.best.size());
  r.results = {{"objective", o.objective},        {"best_cost", res.best_cost}, {"best", best},
               {"status", to_string(res.status)}, {"evaluations", res.evaluations}};
  if (!r.quiet)
    std::cout << "objective: " << o.objective << "\nbest_cost: " << num(res.best_cost) << "\nevaluations: " << res.evaluations
              << "\nstatus: " << to_string(res.status) << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError({"<file>: cannot read " + path});
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neutral-atom Rydberg simulator"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  for (const char* name : {"gate", "sweep", "spectrum", "quench", "bench", "optimize", "validate"}) {
    auto* sc = app.add_subcommand(name);
    sc->add_option("--config,-c", config_path, "experiment config (JSON)")->required();
    sc->add_option("--seed", seed, "overrides the config seed");
    sc->add_option("--out,-o", out_dir, "output directory (overrides the config)");
    sc->add_flag("--quiet,-q", quiet);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string task = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = parse_config(read_file(config_path));
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    if (task != "validate" && task != cfg.task)
      throw ConfigError({"<root>: config describes a '" + cfg.task + "' task but the subcommand is '" + task + "'"});
  } catch (const ConfigError& e) {
    for (const auto& m : e.errors()) std::cerr << "config error: " << m << '\n';
    return kValidation;
  }

  if (task == "validate") {
    std::cout << "valid " << cfg.task << " config, hash " << config_hash(cfg) << '\n';
    if (!quiet) std::cout << to_json(cfg).dump(2) << '\n';
    return kOk;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int code = kOk;
  std::string status = "ok", message;
  std::optional<Outputs> out;
  json results;
  try {
    out.emplace(cfg.output);
    {
      auto f = out->open("config.resolved.json");
      f << to_json(cfg).dump(2) << '\n';
    }
    Run run{cfg, *out, quiet};
    if (task == "gate") run_gate(run);
    if (task == "sweep") run_sweep(run);
    if (task == "spectrum") run_spectrum(run);
    if (task == "quench") run_quench(run);
    if (task == "bench") run_bench(run);
    if (task == "optimize") run_optimize(run);
    results = run.results;
  } catch (const NumericalError& e) {
    code = kNumerical;
    status = "numerical_failure";
    message = e.what();
  } catch (const Error& e) {
    code = kValidation;
    status = "validation_error";
    message = e.what();
  } catch (const std::exception& e) {
    code = kNumerical;
    status = "numerical_failure";
    message = e.what();
  }
  if (code != kOk) std::cerr << "error: " << message << '\n';
  if (!out) return code;

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json report = {{"schema_version", kSchemaVersion},
                 {"tool_version", std::string(kToolVersion)},
                 {"config_hash", config_hash(cfg)},
                 {"task", cfg.task},
                 {"seed", cfg.seed},
                 {"status", status},
                 {"outputs", out->files()},
                 {"wall_clock_s", wall},
                 {"results", results}};
  if (!message.empty()) report["message"] = message;
  std::ofstream(out->dir() / "report.json") << report.dump(2) << '\n';
  return code;
}
