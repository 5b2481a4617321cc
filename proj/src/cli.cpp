#include "mcf/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcf/capacitated.hpp"
#include "mcf/concurrent_mmw.hpp"
#include "mcf/concurrent_signs.hpp"
#include "mcf/coupled.hpp"
#include "mcf/errors.hpp"
#include "mcf/gen.hpp"
#include "mcf/graph.hpp"
#include "mcf/refsolve.hpp"
#include "mcf/weighted.hpp"

namespace mcf {

namespace {

using ordered_json = nlohmann::ordered_json;

struct CommonFlags {
  double epsilon = 0.1;
  std::string outer = "mmw";
  std::string solver = "cheby";
  std::string lap_precon = "jacobi";
  bool paper_faithful = false;
  bool trace = false;
  long iters_inner = 0;
  double rho_inner = 0.0;
  long iters_outer = 0;
  double rho_outer = 0.0;
  int threads = 1;
  std::string format = "json";
  std::string out = "-";
};

void attach_common(CLI::App* cmd, CommonFlags* f) {
  cmd->add_option("--epsilon", f->epsilon, "approximation parameter")->check(CLI::Range(1e-6, 0.5));
  cmd->add_option("--outer", f->outer, "outer layer: mmw | signs")
      ->check(CLI::IsMember({"mmw", "signs"}));
  cmd->add_option("--solver", f->solver, "coupled solver: cheby | cg")
      ->check(CLI::IsMember({"cheby", "cg"}));
  cmd->add_option("--lap-precon", f->lap_precon, "inner Laplacian preconditioner: jacobi | tree")
      ->check(CLI::IsMember({"jacobi", "tree"}));
  cmd->add_flag("--paper-faithful", f->paper_faithful,
                "use the literal iteration/tolerance formulas");
  cmd->add_flag("--trace", f->trace, "include per-iteration trace rows in the report");
  cmd->add_option("--iters-inner", f->iters_inner, "capacitated MWU iteration override");
  cmd->add_option("--rho-inner", f->rho_inner, "capacitated MWU width override");
  cmd->add_option("--iters-outer", f->iters_outer, "outer iteration override");
  cmd->add_option("--rho-outer", f->rho_outer, "outer width override");
  cmd->add_option("--threads", f->threads, "worker threads (0 = auto)");
  cmd->add_option("--format", f->format, "report format: json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--out", f->out, "report path ('-' = stdout)");
}

SolverOptions to_options(const CommonFlags& f) {
  SolverOptions o;
  o.outer = f.outer == "signs" ? OuterKind::signs : OuterKind::mmw;
  o.coupled_solver = f.solver == "cg" ? CoupledSolverKind::cg : CoupledSolverKind::cheby;
  o.lap_precon = f.lap_precon == "tree" ? LapPreconKind::tree : LapPreconKind::jacobi;
  o.paper_faithful = f.paper_faithful;
  o.n_inner = f.iters_inner;
  o.rho_inner = f.rho_inner;
  o.n_outer = f.iters_outer;
  o.rho_outer = f.rho_outer;
  o.threads = f.threads;
  return o;
}

ordered_json trace_json(const TraceSink& sink, bool full) {
  ordered_json j;
  j["coupled_calls"] = sink.coupled_calls;
  j["outer_solver_iterations"] = sink.outer_solver_iterations;
  j["max_block_condition"] = sink.max_block_condition;
  j["capacitated_rows"] = sink.capacitated.size();
  j["outer_rows"] = sink.outer.size();
  if (full) {
    ordered_json cap = ordered_json::array();
    for (const auto& r : sink.capacitated)
      cap.push_back({{"t", r.t}, {"mu", r.mu}, {"max_saturation", r.max_saturation},
                     {"accepted", r.accepted}});
    j["capacitated"] = std::move(cap);
    ordered_json outer = ordered_json::array();
    for (const auto& r : sink.outer)
      outer.push_back({{"t", r.t}, {"max_rel_congestion", r.max_rel_congestion},
                       {"width_ok", r.width_ok}});
    j["outer"] = std::move(outer);
  }
  return j;
}

std::string trace_csv(const TraceSink& sink) {
  std::ostringstream out;
  out.precision(17);
  out << "kind,t,value,extra,flag\n";
  for (const auto& r : sink.capacitated)
    out << "capacitated," << r.t << ',' << r.mu << ',' << r.max_saturation << ','
        << (r.accepted ? 1 : 0) << '\n';
  for (const auto& r : sink.outer)
    out << "outer," << r.t << ',' << r.max_rel_congestion << ",," << (r.width_ok ? 1 : 0) << '\n';
  return out.str();
}

int write_report(const CommonFlags& f, ordered_json j, const TraceSink& sink,
                 std::chrono::steady_clock::time_point start) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string payload;
  if (f.format == "csv") {
    payload = trace_csv(sink);
  } else {
    j["trace"] = trace_json(sink, f.trace);
    j["wall_time_seconds"] = wall;
    payload = j.dump(2) + "\n";
  }
  if (f.out == "-") {
    std::cout << payload;
  } else {
    std::ofstream file(f.out);
    if (!file) {
      std::cerr << "cannot open report path '" << f.out << "'\n";
      return 3;
    }
    file << payload;
  }
  return 0;
}

ordered_json instance_json(const Instance& inst) {
  return ordered_json{{"n", inst.n()}, {"m", inst.m()}, {"k", inst.k()}};
}

EnergyMatrices electrical_blocks(const Instance& inst) {
  std::vector<double> w(inst.m());
  for (int e = 0; e < inst.m(); ++e) {
    const double u = inst.graph.edges[e].capacity;
    w[e] = 1.0 / (u * u);
  }
  return EnergyMatrices::scalar(inst.k(), w);
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"multicommodity flow solver"};
  app.require_subcommand(1);
  app.set_config("--config");

  // solve-concurrent
  auto* sc = app.add_subcommand("solve-concurrent", "binary-search the concurrent flow value");
  CommonFlags sc_flags;
  std::string sc_file;
  bool sc_compare = false;
  sc->add_option("file", sc_file, "instance file")->required();
  attach_common(sc, &sc_flags);
  sc->add_flag("--compare-lp", sc_compare, "also run the LP oracle and report the ratio");

  // solve-weighted
  auto* sw = app.add_subcommand("solve-weighted", "maximum weighted multicommodity flow");
  CommonFlags sw_flags;
  std::string sw_file;
  std::vector<double> sw_weights;
  bool sw_compare = false;
  sw->add_option("file", sw_file, "instance file")->required();
  sw->add_option("--weights", sw_weights, "per-commodity weights (default all 1)")->delimiter(',');
  attach_common(sw, &sw_flags);
  sw->add_flag("--compare-lp", sw_compare, "also run the LP oracle and report the ratio");

  // coupled
  auto* co = app.add_subcommand("coupled", "one quadratically-coupled-flow solve (P = I/u^2)");
  CommonFlags co_flags;
  std::string co_file;
  double co_delta = 1e-3;
  co->add_option("file", co_file, "instance file")->required();
  co->add_option("--delta", co_delta, "relative energy tolerance")->check(CLI::Range(1e-9, 0.099));
  attach_common(co, &co_flags);

  // capacitated
  auto* ca = app.add_subcommand("capacitated", "quadratically capacitated flow (P = I/u^2)");
  CommonFlags ca_flags;
  std::string ca_file;
  ca->add_option("file", ca_file, "instance file")->required();
  attach_common(ca, &ca_flags);

  // gen
  auto* ge = app.add_subcommand("gen", "generate a random instance");
  GenConfig gen_cfg;
  std::string ge_out = "-";
  ge->add_option("--seed", gen_cfg.seed, "random seed");
  ge->add_option("--n", gen_cfg.n, "vertices")->check(CLI::PositiveNumber);
  ge->add_option("--m", gen_cfg.m, "edges")->check(CLI::PositiveNumber);
  ge->add_option("--k", gen_cfg.k, "commodities")->check(CLI::PositiveNumber);
  ge->add_option("--profile", gen_cfg.profile, "uniform | planted")
      ->check(CLI::IsMember({"uniform", "planted"}));
  ge->add_option("--eps", gen_cfg.eps, "planted congestion margin");
  ge->add_option("--out", ge_out, "output path ('-' = stdout)");

  // verify
  auto* ve = app.add_subcommand("verify", "run both outers and the LP oracle, check agreement");
  CommonFlags ve_flags;
  std::string ve_file;
  ve->add_option("file", ve_file, "instance file")->required();
  attach_common(ve, &ve_flags);

  // bench
  auto* be = app.add_subcommand("bench", "record iteration counts against instance size");
  CommonFlags be_flags;
  std::vector<int> be_sizes{8, 12, 16};
  int be_k = 2;
  std::uint64_t be_seed = 1;
  be->add_option("--sizes", be_sizes, "edge counts to benchmark")->delimiter(',');
  be->add_option("--k", be_k, "commodities")->check(CLI::PositiveNumber);
  be->add_option("--seed", be_seed, "random seed");
  attach_common(be, &be_flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << '\n';
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (*sc) {
      Instance inst = parse_instance_file(sc_file);
      SolverOptions opts = to_options(sc_flags);
      TraceSink sink;
      LambdaSearchResult res = binary_search_lambda(inst, sc_flags.epsilon, opts, &sink);
      ordered_json j;
      j["schema"] = 1;
      j["command"] = "solve-concurrent";
      j["instance"] = instance_json(inst);
      j["epsilon"] = sc_flags.epsilon;
      j["outer"] = sc_flags.outer;
      j["feasible"] = res.feasible;
      j["lambda"] = res.lambda;
      j["probes"] = res.probes;
      if (res.feasible) {
        double maxc = 0.0;
        for (int e = 0; e < inst.m(); ++e)
          maxc = std::max(maxc, norm1(res.flow.block(e)) / inst.graph.edges[e].capacity);
        j["max_congestion"] = maxc;
      }
      if (!res.diagnostic.empty()) j["diagnostic"] = res.diagnostic;
      if (sc_compare) {
        const double lp = refsolve::lp_concurrent_oracle(inst);
        j["lambda_lp"] = lp;
        j["lambda_ratio"] = lp > 0 ? res.lambda / lp : 0.0;
      }
      const int rc = write_report(sc_flags, std::move(j), sink, start);
      return rc != 0 ? rc : (res.feasible ? 0 : 1);
    }

    if (*sw) {
      Instance inst = parse_instance_file(sw_file);
      WeightedSpec spec{inst, sw_weights.empty() ? std::vector<double>(inst.k(), 1.0) : sw_weights};
      SolverOptions opts = to_options(sw_flags);
      TraceSink sink;
      WeightedOutcome res = max_weighted_flow(spec, sw_flags.epsilon, opts, &sink);
      ordered_json j;
      j["schema"] = 1;
      j["command"] = "solve-weighted";
      j["instance"] = instance_json(inst);
      j["epsilon"] = sw_flags.epsilon;
      j["feasible"] = res.feasible;
      j["objective"] = res.objective;
      j["flow_values"] = res.flow_values;
      j["max_congestion"] = res.max_rel_congestion;
      j["probes"] = res.probes;
      if (!res.diagnostic.empty()) j["diagnostic"] = res.diagnostic;
      if (sw_compare) {
        const double lp = refsolve::lp_weighted_oracle(inst, spec.weights);
        j["objective_lp"] = lp;
        j["objective_ratio"] = lp > 0 ? res.objective / lp : 0.0;
      }
      const int rc = write_report(sw_flags, std::move(j), sink, start);
      return rc != 0 ? rc : (res.feasible ? 0 : 1);
    }

    if (*co) {
      Instance inst = parse_instance_file(co_file);
      SolverOptions opts = to_options(co_flags);
      EnergyMatrices p = electrical_blocks(inst);
      auto [norm, scale] = normalize_blocks(p);
      double u_bound = 0.0;
      for (int e = 0; e < norm.m; ++e) u_bound = std::max(u_bound, norm.lambda_max[e]);
      const DemandVector d = inst.demand_vector();
      CoupledResult res = quadratically_coupled_flow(inst.graph, norm, d, co_delta, u_bound,
                                                     block_condition_bound(norm), opts);
      VertexPotentials excess = incidence_transpose_apply(inst.graph, res.flow);
      double residual = 0.0;
      for (int u = 0; u < inst.n(); ++u)
        for (int i = 0; i < inst.k(); ++i) residual = std::max(residual, std::abs(excess.at(u, i) - d.at(u, i)));
      ordered_json j;
      j["schema"] = 1;
      j["command"] = "coupled";
      j["instance"] = instance_json(inst);
      j["delta"] = co_delta;
      j["energy"] = res.energy * scale;  // undo the normalization
      j["conservation_residual"] = residual;
      j["solver_iterations"] = res.report.iterations;
      j["laplacian_solves"] = res.report.preconditioner_solves;
      TraceSink sink;
      return write_report(co_flags, std::move(j), sink, start);
    }

    if (*ca) {
      Instance inst = parse_instance_file(ca_file);
      SolverOptions opts = to_options(ca_flags);
      EnergyMatrices p = electrical_blocks(inst);
      TraceSink sink;
      CapacitatedOutcome res = quadratically_capacitated_flow(inst.graph, p, inst.demand_vector(),
                                                              ca_flags.epsilon, opts, &sink);
      ordered_json j;
      j["schema"] = 1;
      j["command"] = "capacitated";
      j["instance"] = instance_json(inst);
      j["epsilon"] = ca_flags.epsilon;
      j["status"] = res.status == SolveStatus::flow ? "flow" : "fail";
      j["max_saturation"] = res.max_saturation;
      j["accepted_iterations"] = res.accepted_iterations;
      j["total_iterations"] = res.total_iterations;
      const int rc = write_report(ca_flags, std::move(j), sink, start);
      return rc != 0 ? rc : (res.status == SolveStatus::flow ? 0 : 1);
    }

    if (*ge) {
      Instance inst = gen_instance(gen_cfg);
      const std::string text = format_instance(inst);
      if (ge_out == "-") {
        std::cout << text;
      } else {
        std::ofstream file(ge_out);
        if (!file) {
          std::cerr << "cannot open output path '" << ge_out << "'\n";
          return 3;
        }
        file << text;
      }
      return 0;
    }

    if (*ve) {
      Instance inst = parse_instance_file(ve_file);
      const double eps = ve_flags.epsilon;
      TraceSink sink;
      SolverOptions opts = to_options(ve_flags);
      opts.outer = OuterKind::mmw;
      LambdaSearchResult mmw = binary_search_lambda(inst, eps, opts, &sink);
      opts.outer = OuterKind::signs;
      LambdaSearchResult signs = binary_search_lambda(inst, eps, opts, &sink);
      const double lp = refsolve::lp_concurrent_oracle(inst);
      const double floor_ratio = 1.0 - 5.0 * eps;
      const bool agree = mmw.feasible && signs.feasible && lp > 0 &&
                         mmw.lambda >= floor_ratio * lp && signs.lambda >= floor_ratio * lp;
      ordered_json j;
      j["schema"] = 1;
      j["command"] = "verify";
      j["instance"] = instance_json(inst);
      j["epsilon"] = eps;
      j["lambda_mmw"] = mmw.lambda;
      j["lambda_signs"] = signs.lambda;
      j["lambda_lp"] = lp;
      j["ratio_mmw"] = lp > 0 ? mmw.lambda / lp : 0.0;
      j["ratio_signs"] = lp > 0 ? signs.lambda / lp : 0.0;
      j["agreement"] = agree;
      const int rc = write_report(ve_flags, std::move(j), sink, start);
      return rc != 0 ? rc : (agree ? 0 : 1);
    }

    if (*be) {
      SolverOptions opts = to_options(be_flags);
      ordered_json rows = ordered_json::array();
      TraceSink total;
      for (int m : be_sizes) {
        GenConfig cfg;
        cfg.seed = be_seed;
        cfg.m = m;
        cfg.n = std::max(4, m / 2);
        cfg.k = be_k;
        Instance inst = gen_instance(cfg);
        TraceSink sink;
        LambdaSearchResult res = binary_search_lambda(inst, be_flags.epsilon, opts, &sink);
        rows.push_back({{"m", m},
                        {"n", cfg.n},
                        {"k", be_k},
                        {"feasible", res.feasible},
                        {"lambda", res.lambda},
                        {"probes", res.probes},
                        {"coupled_calls", sink.coupled_calls},
                        {"outer_solver_iterations", sink.outer_solver_iterations},
                        {"laplacian_solves", sink.laplacian_solves}});
      }
      ordered_json j;
      j["schema"] = 1;
      j["command"] = "bench";
      j["epsilon"] = be_flags.epsilon;
      j["rows"] = std::move(rows);
      return write_report(be_flags, std::move(j), total, start);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace mcf
