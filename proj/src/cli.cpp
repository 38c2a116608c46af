#include "otbarrier/cli.hpp"

#include "otbarrier/barrier.hpp"
#include "otbarrier/classical.hpp"
#include "otbarrier/errors.hpp"
#include "otbarrier/instance_io.hpp"
#include "otbarrier/quantum.hpp"
#include "otbarrier/transport_ipm.hpp"

#include <CLI11.hpp>
#include <unsupported/Eigen/KroneckerProduct>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace otb {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Dims parse_list(const std::string& text) {
  Dims out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      throw InputError("cannot parse \"" + item + "\" as a positive integer");
    }
    if (pos != item.size() || v == 0) throw InputError("cannot parse \"" + item + "\" as a positive integer");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty integer list");
  return out;
}

class CsvSink {
 public:
  explicit CsvSink(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw InputError("cannot open trace file " + path);
  }
  bool active() const { return file_.is_open(); }
  void line(const std::string& text) {
    if (active()) file_ << text << '\n';
  }

 private:
  std::ofstream file_;
};

void write_ipm_trace(CsvSink& sink, const SolveReport& rep) {
  sink.line("phase,iteration,eta,newton_steps,decrement,dual_value,gap,flops");
  for (const auto& r : rep.trace)
    sink.line(r.phase + "," + std::to_string(r.iteration) + "," + fmt(r.eta) + "," +
              std::to_string(r.newton_steps) + "," + fmt(r.decrement) + "," + fmt(r.dual_value) + "," +
              fmt(r.gap) + "," + fmt(r.flops));
}

int certified_code(bool certified) { return certified ? kExitOk : kExitNotCertified; }

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string method = "ipm";
  double delta = 1e-6;
  double epsilon = 0.0;
  double tol = 1e-9;
  std::string mode = "long";
  std::string in;
  std::string trace;
  std::string out;
};

IpmConfig ipm_config(const SolveArgs& a) {
  IpmConfig cfg;
  cfg.delta = a.delta;
  if (a.mode == "short")
    cfg.mode = StepMode::short_step;
  else if (a.mode == "long")
    cfg.mode = StepMode::long_step;
  else
    throw InputError("--mode must be short or long");
  return cfg;
}

json solve_classical(const ClassicalInstance& inst, const SolveArgs& a, CsvSink& sink, int* code) {
  json r;
  r["method"] = a.method;
  r["parameters"]["delta"] = a.delta;
  const double n = static_cast<double>(inst.cost.size());

  if (a.method == "lp") {
    const LpResult lp = lp_reference(inst);
    r["value"] = lp.value;
    r["gap"] = 0.0;
    r["residuals"] = marginal_residual(inst, lp.coupling);
    r["iterations"] = lp.pivots;
    r["certified"] = true;
    sink.line("pivots,value");
    sink.line(std::to_string(lp.pivots) + "," + fmt(lp.value));
    *code = kExitOk;
  } else if (a.method == "entropic") {
    const double eps = a.epsilon > 0.0 ? a.epsilon : a.delta / std::log(n);
    const EntropicResult e = entropic_sinkhorn(inst, eps, a.tol, 100000);
    r["parameters"]["epsilon"] = eps;
    r["parameters"]["epsilon_rule"] = a.epsilon > 0.0 ? "given" : "delta/log(N)";
    r["parameters"]["tol"] = a.tol;
    r["value"] = e.value;
    r["dual_value"] = e.dual_value;
    r["entropy"] = e.entropy;
    r["gap"] = e.value - e.dual_value;
    r["residuals"] = e.max_residual;
    r["iterations"] = e.iterations;
    r["certified"] = e.max_residual <= a.tol;
    sink.line("iterations,max_residual,value");
    sink.line(std::to_string(e.iterations) + "," + fmt(e.max_residual) + "," + fmt(e.value));
    *code = certified_code(e.max_residual <= a.tol);
  } else if (a.method == "barrier-sinkhorn") {
    const double eps = a.epsilon > 0.0 ? a.epsilon : 1e-2;
    const BarrierSinkhornResult b = barrier_sinkhorn(inst, eps, a.tol, 1000000);
    r["parameters"]["epsilon"] = eps;
    r["parameters"]["tol"] = a.tol;
    {
      std::vector<double> start;
      for (const auto& block : classical_start_point(inst)) start.push_back(block.front());
      r["parameters"]["start"] = start;
    }
    r["value"] = b.value;
    r["phi"] = b.phi;
    r["gap"] = b.value - b.phi;
    r["residuals"] = b.max_residual;
    r["iterations"] = b.sweeps;
    r["certified"] = b.converged;
    sink.line("sweep,phi,max_residual");
    for (const auto& row : b.trace)
      sink.line(std::to_string(row.sweep) + "," + fmt(row.phi) + "," + fmt(row.max_residual));
    *code = certified_code(b.converged);
  } else if (a.method == "ipm") {
    const IpmConfig cfg = ipm_config(a);
    r["parameters"]["mode"] = a.mode;
    r["parameters"]["radius"] = classical_radius(inst);
    r["parameters"]["start_shift"] = (inst.c_min - 1.0);
    if (a.epsilon > 0.0) {
      const ClassicalBarrierPoint p = classical_barrier_relaxation(inst, a.epsilon, cfg);
      r["parameters"]["epsilon"] = a.epsilon;
      r["value"] = p.value;
      r["phi"] = p.phi;
      r["gap"] = p.report.certificate.gap;
      r["residuals"] = p.max_residual;
      r["iterations"] = p.report.phase1_newton + p.report.phase2_newton;
      r["flop_estimate"] = p.report.state.flop_estimate;
      const bool ok = p.max_residual <= cfg.feas_tol * (1.0 + inst.marginals.common_mass());
      r["certified"] = ok;
      write_ipm_trace(sink, p.report);
      *code = certified_code(ok);
    } else {
      const ClassicalIpmResult s = solve_classical_ipm(inst, cfg);
      r["value"] = s.value;
      r["primal_value"] = s.primal_value;
      r["gap"] = s.gap;
      r["residuals"] = s.report.certificate.primal_residuals;
      r["iterations"] = s.report.phase1_newton + s.report.phase2_newton;
      r["flop_estimate"] = s.report.state.flop_estimate;
      r["certified"] = s.certified;
      write_ipm_trace(sink, s.report);
      *code = certified_code(s.certified);
    }
  } else {
    throw InputError("unknown method \"" + a.method + "\" (lp, entropic, barrier-sinkhorn, ipm)");
  }
  return r;
}

json solve_quantum(const QuantumInstance& inst, const SolveArgs& a, CsvSink& sink, int* code) {
  if (a.method != "ipm") throw InputError("quantum instances support only --method ipm");
  json r;
  r["method"] = a.method;
  const IpmConfig cfg = ipm_config(a);
  r["parameters"]["delta"] = a.delta;
  r["parameters"]["mode"] = a.mode;
  r["parameters"]["radius"] = quantum_radius(inst);
  r["parameters"]["start_shift"] = inst.lambda_min - 1.0;
  if (a.epsilon > 0.0) {
    const QuantumBarrierPoint p = quantum_barrier_relaxation(inst, a.epsilon, cfg);
    r["parameters"]["epsilon"] = a.epsilon;
    r["value"] = p.value;
    r["phi"] = p.phi;
    r["gap"] = p.report.certificate.gap;
    r["residuals"] = p.max_residual;
    r["iterations"] = p.report.phase1_newton + p.report.phase2_newton;
    r["flop_estimate"] = p.report.state.flop_estimate;
    const bool ok = p.max_residual <= cfg.feas_tol * (1.0 + inst.densities.common_trace());
    r["certified"] = ok;
    write_ipm_trace(sink, p.report);
    *code = certified_code(ok);
  } else {
    const QuantumIpmResult s = solve_quantum_ipm(inst, cfg);
    r["value"] = s.value;
    r["primal_value"] = s.primal_value;
    r["gap"] = s.gap;
    r["residuals"] = s.residual.per_mode;
    r["iterations"] = s.report.phase1_newton + s.report.phase2_newton;
    r["flop_estimate"] = s.report.state.flop_estimate;
    r["certified"] = s.certified;
    write_ipm_trace(sink, s.report);
    *code = certified_code(s.certified);
  }
  return r;
}

int do_solve(const SolveArgs& a, std::ostream& out) {
  if (!(a.delta > 0.0)) throw InputError("--delta must be positive");
  if (a.epsilon < 0.0) throw InputError("--epsilon must be positive");
  if (!(a.tol > 0.0)) throw InputError("--tol must be positive");
  const Instance inst = load_instance(a.in);
  CsvSink sink(a.trace);
  int code = kExitOk;
  const auto t0 = std::chrono::steady_clock::now();
  json r = std::holds_alternative<ClassicalInstance>(inst)
               ? solve_classical(std::get<ClassicalInstance>(inst), a, sink, &code)
               : solve_quantum(std::get<QuantumInstance>(inst), a, sink, &code);
  r["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r["instance"] = a.in;
  const std::string text = r.dump(1);
  out << text << '\n';
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw InputError("cannot write report " + a.out);
    f << text << '\n';
  }
  return code;
}

// ---------------------------------------------------------------------------

class Checks {
 public:
  explicit Checks(std::ostream& out) : out_(out) {}
  void add(const std::string& name, bool ok, const std::string& detail) {
    out_ << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    all_ = all_ && ok;
  }
  bool all() const { return all_; }

 private:
  std::ostream& out_;
  bool all_ = true;
};

double product_coupling_value_classical(const ClassicalInstance& inst) {
  const double m = inst.marginals.common_mass();
  return inner(inst.cost, outer_product(inst.marginals.vectors())) /
         std::pow(m, static_cast<double>(inst.parties() - 1));
}

void validate_classical(const ClassicalInstance& inst, Checks& checks) {
  const double m = inst.marginals.common_mass();
  const LpResult lp = lp_reference(inst);
  const double upper = product_coupling_value_classical(inst);
  checks.add("lp-sandwich", inst.c_min * m <= lp.value + 1e-9 && lp.value <= upper + 1e-9,
             "tau=" + fmt(lp.value));

  IpmConfig cfg;
  cfg.delta = 1e-6;
  const ClassicalIpmResult ipm = solve_classical_ipm(inst, cfg);
  checks.add("ipm-certified", ipm.certified, "gap=" + fmt(ipm.gap));
  checks.add("ipm-matches-lp", std::abs(ipm.value - lp.value) <= 1e-6 * (1.0 + std::abs(lp.value)),
             "ipm=" + fmt(ipm.value));
  const double dist = (flatten(ipm.z) - ipm.region.center).norm();
  checks.add("optimizer-in-ball", dist < ipm.region.radius, "distance=" + fmt(dist));

  if (inst.parties() == 2 && std::abs(m - 1.0) <= 1e-12) {
    const double delta = 1e-3;
    const double eps = delta / std::log(static_cast<double>(inst.cost.size()));
    const EntropicResult e = entropic_sinkhorn(inst, eps, 1e-10, 100000);
    checks.add("entropic-chain", e.value <= lp.value + 1e-12 && lp.value <= e.value + delta + 1e-12,
               "tau_eps=" + fmt(e.value));
  }

  const double eps = 0.1;
  const BarrierSinkhornResult bs = barrier_sinkhorn(inst, eps, 1e-9, 1000000);
  const ClassicalBarrierPoint path = classical_barrier_relaxation(inst, eps, cfg);
  checks.add("barrier-sinkhorn-converged", bs.converged, "residual=" + fmt(bs.max_residual));
  checks.add("barrier-sinkhorn-matches-ipm", std::abs(bs.value - path.value) <= 1e-6,
             "sinkhorn=" + fmt(bs.value) + " ipm=" + fmt(path.value));
  if (inst.parties() == 2) {
    const BoundChainReport chain = bound_chain_classical(inst, eps, lp.value, path.value);
    checks.add("bound-chain", chain.holds,
               "margins=" + fmt(chain.lower_margin) + "," + fmt(chain.upper_margin));
  }
}

void validate_quantum(const QuantumInstance& inst, Checks& checks) {
  const double m = inst.densities.common_trace();
  IpmConfig cfg;
  cfg.delta = 1e-6;
  const QuantumIpmResult ipm = solve_quantum_ipm(inst, cfg);
  checks.add("ipm-certified", ipm.certified, "gap=" + fmt(ipm.gap));
  checks.add("lower-bound", ipm.value >= inst.lambda_min * m - 1e-9, "kappa=" + fmt(ipm.value));
  Eigen::MatrixXcd k = inst.densities[0].matrix();
  for (std::size_t i = 1; i < inst.parties(); ++i) {
    const Eigen::MatrixXcd next = Eigen::kroneckerProduct(k, inst.densities[i].matrix());
    k = next;
  }
  const double upper = trace_product(inst.cost.matrix, HermitianMatrix(k)) /
                       std::pow(m, static_cast<double>(inst.parties() - 1));
  checks.add("upper-bound", ipm.value <= upper + 1e-9, "product=" + fmt(upper));
  checks.add("gamma-residual", ipm.residual.max_residual <= 5e-6, "residual=" + fmt(ipm.residual.max_residual));

  const double eps = 0.1;
  const QuantumBarrierPoint path = quantum_barrier_relaxation(inst, eps, cfg);
  if (inst.parties() == 2) {
    const BoundChainReport chain = bound_chain_quantum(inst, eps, ipm.value, path.value);
    checks.add("bound-chain", chain.holds,
               "margins=" + fmt(chain.lower_margin) + "," + fmt(chain.upper_margin));
  }
  if (const auto classical = diagonal_reduction(inst)) {
    const LpResult lp = lp_reference(*classical);
    checks.add("diagonal-reduction-value", std::abs(ipm.value - lp.value) <= 1e-6,
               "classical=" + fmt(lp.value));
    const ClassicalBarrierPoint cp = classical_barrier_relaxation(*classical, eps, cfg);
    checks.add("diagonal-reduction-barrier", std::abs(path.value - cp.value) <= 1e-6,
               "classical=" + fmt(cp.value) + " quantum=" + fmt(path.value));
  }
}

int do_validate(const std::string& in, std::ostream& out) {
  const Instance inst = load_instance(in);
  Checks checks(out);
  if (std::holds_alternative<ClassicalInstance>(inst))
    validate_classical(std::get<ClassicalInstance>(inst), checks);
  else
    validate_quantum(std::get<QuantumInstance>(inst), checks);
  return checks.all() ? kExitOk : kExitInternalError;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string kind = "classical";
  std::string dims = "2,2";
  std::uint64_t seed = 1;
  double floor = 0.1;
  bool diagonal = false;
  std::string out;
};

int do_generate(const GenerateArgs& a, std::ostream& out) {
  GenerateOptions opt;
  if (a.kind == "classical")
    opt.kind = InstanceKind::classical;
  else if (a.kind == "quantum")
    opt.kind = InstanceKind::quantum;
  else
    throw InputError("--kind must be classical or quantum");
  opt.dims = parse_list(a.dims);
  opt.seed = a.seed;
  opt.floor = a.floor;
  opt.diagonal = a.diagonal;
  const InstanceFile f = generate(opt);
  if (a.out.empty())
    out << to_json(f);
  else
    write_instance_file(a.out, f);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string kind = "classical";
  std::string sizes = "2,3,4";
  std::size_t repeats = 1;
  std::size_t parties = 2;
  std::string mode = "long";
  double delta = 1e-6;
  std::string out;
};

std::size_t bench_threads() {
  const char* env = std::getenv("OT_BARRIER_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0') throw InputError("OT_BARRIER_THREADS must be a non-negative integer");
  return v;
}

int do_bench(const BenchArgs& a, std::ostream& out) {
  if (a.repeats == 0) throw InputError("--repeats must be positive");
  if (a.parties < 2) throw InputError("--parties must be at least 2");
  const Dims sizes = parse_list(a.sizes);
  const bool quantum = a.kind == "quantum";
  if (!quantum && a.kind != "classical") throw InputError("--kind must be classical or quantum");
  SolveArgs sa;
  sa.mode = a.mode;
  sa.delta = a.delta;
  const IpmConfig cfg = ipm_config(sa);

  struct Job {
    std::size_t n, repeat;
    std::string row;
  };
  std::vector<Job> jobs;
  for (auto n : sizes)
    for (std::size_t r = 0; r < a.repeats; ++r) jobs.push_back({n, r, {}});

  auto run_job = [&](Job& job) {
    GenerateOptions opt;
    opt.kind = quantum ? InstanceKind::quantum : InstanceKind::classical;
    opt.dims = Dims(a.parties, job.n);
    opt.seed = job.repeat + 1;
    const InstanceFile f = generate(opt);
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    double value = 0.0, gap = 0.0;
    bool certified = false;
    if (quantum) {
      const auto s = solve_quantum_ipm(to_quantum(f), cfg);
      rep = s.report;
      value = s.value;
      gap = s.gap;
      certified = s.certified;
    } else {
      const auto s = solve_classical_ipm(to_classical(f), cfg);
      rep = s.report;
      value = s.value;
      gap = s.gap;
      certified = s.certified;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::size_t steps = rep.phase1_newton + rep.phase2_newton;
    job.row = a.kind + "," + std::to_string(job.n) + "," + std::to_string(job.repeat) + "," +
              std::to_string(opt.seed) + "," + std::to_string(rep.phase1_newton) + "," +
              std::to_string(rep.phase2_newton) + "," + std::to_string(rep.outer_iterations) + "," +
              fmt(rep.state.flop_estimate) + "," + fmt(rep.state.flop_estimate / static_cast<double>(steps)) +
              "," + fmt(wall) + "," + fmt(value) + "," + fmt(gap) + "," + (certified ? "1" : "0");
  };

  const std::size_t threads = std::min(bench_threads(), jobs.size());
  if (threads <= 1) {
    for (auto& j : jobs) run_job(j);
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        while (true) {
          std::size_t k;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= jobs.size() || failure) return;
            k = next++;
          }
          try {
            run_job(jobs[k]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            failure = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::ostringstream csv;
  csv << "kind,n,repeat,seed,phase1_newton,phase2_newton,outer,flops,flops_per_step,wall_time,value,gap,"
         "certified\n";
  for (const auto& j : jobs) csv << j.row << '\n';
  if (a.out.empty()) {
    out << csv.str();
  } else {
    std::ofstream f(a.out);
    if (!f) throw InputError("cannot write bench output " + a.out);
    f << csv.str();
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Barrier and entropic relaxations of classical and quantum multi-partite transport"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve an instance file");
  solve->add_option("--method", sa.method, "lp | entropic | barrier-sinkhorn | ipm")->capture_default_str();
  solve->add_option("--delta", sa.delta, "Target precision")->capture_default_str();
  solve->add_option("--epsilon", sa.epsilon,
                    "Relaxation parameter (entropic default δ/log N, barrier-sinkhorn default 1e-2; "
                    "with ipm, reports the barrier relaxation at this ε)");
  solve->add_option("--tol", sa.tol, "Marginal tolerance for the Sinkhorn methods")->capture_default_str();
  solve->add_option("--mode", sa.mode, "IPM step mode: short | long")->capture_default_str();
  solve->add_option("--in", sa.in, "Instance JSON")->required();
  solve->add_option("--trace", sa.trace, "Trace CSV path");
  solve->add_option("--out", sa.out, "Report JSON path");

  std::string validate_in;
  auto* validate = app.add_subcommand("validate", "Run every applicable oracle on an instance");
  validate->add_option("--in", validate_in, "Instance JSON")->required();

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a seeded random instance");
  gen->add_option("--kind", ga.kind, "classical | quantum")->capture_default_str();
  gen->add_option("--dims", ga.dims, "Comma-separated mode dimensions")->capture_default_str();
  gen->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  gen->add_option("--floor", ga.floor, "Conditioning floor in (0,1]")->capture_default_str();
  gen->add_flag("--diagonal", ga.diagonal, "Quantum instance with diagonal cost and densities");
  gen->add_option("--out", ga.out, "Output path (stdout when omitted)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time IPM solves over a size sweep");
  bench->add_option("--kind", ba.kind, "classical | quantum")->capture_default_str();
  bench->add_option("--sizes", ba.sizes, "Comma-separated sizes n")->capture_default_str();
  bench->add_option("--repeats", ba.repeats, "Instances per size")->capture_default_str();
  bench->add_option("--parties", ba.parties, "Number of parties d")->capture_default_str();
  bench->add_option("--mode", ba.mode, "short | long")->capture_default_str();
  bench->add_option("--delta", ba.delta, "Target precision")->capture_default_str();
  bench->add_option("--out", ba.out, "CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*solve) return do_solve(sa, out);
    if (*validate) return do_validate(validate_in, out);
    if (*gen) return do_generate(ga, out);
    if (*bench) return do_bench(ba, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const InvalidArgument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NotConverged& e) {
    err << "not converged: " << e.what() << '\n';
    return kExitNotCertified;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
  return kExitInternalError;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace otb
