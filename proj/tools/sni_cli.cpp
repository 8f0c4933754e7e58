// sni: command line front end.

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sni/sni.hpp"

namespace {

using sni::Json;

struct Globals {
  std::size_t threads = 0;
  std::string format = "json";
};

// Exit codes: 0 ok, 1 not converged / criterion failed, 2 error.
constexpr int kNotConverged = 1;
constexpr int kFailure = 2;

[[noreturn]] void fail(const std::string& kind, const std::string& msg) {
  throw sni::Error(kind, msg);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text << '\n';
  else
    sni::write_text_file(path, text);
}

// A mesh file may hold a bare mesh or a gen-shape document.
sni::TriMesh load_mesh(const std::string& path) {
  const Json j = sni::read_json_file(path);
  return sni::mesh_from_json(j.contains("mesh") ? j.at("mesh") : j);
}

sni::ProblemSpec load_problem(const std::string& path) {
  const Json j = sni::read_json_file(path);
  return sni::spec_from_json(j.contains("spec") ? j.at("spec") : j);
}

/// Every option that was given (or defaulted) on the subcommand.
Json echo_flags(const CLI::App& app, const Globals& g) {
  Json flags;
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
    std::string name = opt->get_name();
    while (!name.empty() && name.front() == '-') name.erase(0, 1);
    const auto res = opt->results();
    if (!res.empty())
      flags[name] = res.size() == 1 ? Json(res.front()) : Json(res);
    else if (!opt->get_default_str().empty())
      flags[name] = opt->get_default_str();
  }
  flags["threads"] = sni::resolve_threads(g.threads);
  flags["format"] = g.format;
  return flags;
}

struct SolveFlags {
  std::string method = "sni";
  std::string mesh, problem, out, init = "zero", local = "exact", truth;
  std::size_t k = 20, depth = 2, max_iter = 1000;
  std::optional<double> tau, tol;
  std::uint64_t partition_seed = 0;
};

void add_sni_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--method", f.method, "direct or sni")->check(CLI::IsMember({"direct", "sni"}))->capture_default_str();
  cmd->add_option("--mesh", f.mesh, "mesh JSON")->required();
  cmd->add_option("--problem", f.problem, "problem JSON")->required();
  cmd->add_option("--depth", f.depth, "overlap depth")->capture_default_str();
  cmd->add_option("--tau", f.tau, "step size (default 0.8/K)");
  cmd->add_option("--tol", f.tol, "relative update tolerance");
  cmd->add_option("--max-iter", f.max_iter, "outer iteration cap")->capture_default_str();
  cmd->add_option("--local", f.local, "exact | perturbed:<c>:<seed> | surrogate:<weights>")->capture_default_str();
  cmd->add_option("--init", f.init, "zero | file:<path>")->capture_default_str();
  cmd->add_option("--truth", f.truth, "reference solution for the error history");
  cmd->add_option("--partition-seed", f.partition_seed, "partition seed")->capture_default_str();
  cmd->add_option("--out", f.out, "output JSON (stdout if omitted)");
}

sni::SniConfig make_config(const SolveFlags& f, std::size_t k, const Globals& g, std::size_t unknowns) {
  const auto local = sni::LocalSolverSpec::parse(f.local);
  const double tau = f.tau.value_or(0.8 / static_cast<double>(k));
  sni::SniConfig cfg(k, f.depth, tau, f.tol.value_or(sni::default_outer_tol(local.kind)), f.max_iter);
  cfg.local_solver = local;
  cfg.threads = g.threads;
  cfg.partition_seed = f.partition_seed;
  if (f.init != "zero") {
    if (!f.init.starts_with("file:")) fail("config", "--init expects zero or file:<path>");
    cfg.initial_guess = sni::solution_from_json(sni::read_json_file(f.init.substr(5)));
    if (cfg.initial_guess->size() != unknowns) fail("config", "initial guess has the wrong length");
  }
  if (!f.truth.empty()) cfg.oracle = sni::solution_from_json(sni::read_json_file(f.truth));
  return cfg;
}

int write_result(const SolveFlags& f, const Globals& g, const Json& flags, const sni::Field& u,
                 const sni::SniResult* sni_result, std::optional<std::size_t> steps) {
  Json out;
  out["flags"] = flags;
  out["solution"] = sni::solution_json(u, f.mesh, steps);
  bool converged = true;
  if (sni_result) {
    out["diagnostics"] = sni::to_json(sni_result->diagnostics);
    out["decomposition"] = sni::to_json(sni_result->decomposition);
    converged = sni_result->diagnostics.converged;
  }
  if (g.format == "csv" && sni_result) {
    emit(f.out, sni::convergence_csv(sni_result->diagnostics));
  } else {
    emit(f.out, out.dump());
  }
  if (!converged) std::cerr << "sni: not converged (" << sni_result->diagnostics.stop_reason << ")\n";
  return converged ? 0 : kNotConverged;
}

int run_solve(const CLI::App& app, const SolveFlags& f, std::size_t k, const Globals& g) {
  const auto mesh = load_mesh(f.mesh);
  const auto spec = load_problem(f.problem);
  const Json flags = echo_flags(app, g);
  if (spec.equation == sni::Equation::Heat) fail("specification", "Heat problems go through solve-heat");
  if (f.method == "direct") return write_result(f, g, flags, sni::solve_direct(mesh, spec), nullptr, std::nullopt);
  const auto cfg = make_config(f, k, g, mesh.num_vertices());
  const auto res = sni::sni_run(cfg, mesh, spec);
  return write_result(f, g, flags, res.u, &res, std::nullopt);
}

int run_solve_heat(const CLI::App& app, const SolveFlags& f, std::size_t ks, std::size_t kt, std::size_t dt,
                   const Globals& g) {
  const auto mesh = load_mesh(f.mesh);
  const auto spec = load_problem(f.problem);
  const Json flags = echo_flags(app, g);
  if (spec.equation != sni::Equation::Heat) fail("specification", "solve-heat needs a Heat problem");
  if (f.method == "direct") return write_result(f, g, flags, sni::solve_direct(mesh, spec), nullptr, spec.n_steps);
  const auto cfg = make_config(f, ks * kt, g, (spec.n_steps + 1) * mesh.num_vertices());
  const auto res = sni::sni_run_spacetime(cfg, mesh, spec, ks, kt, dt);
  return write_result(f, g, flags, res.u, &res, spec.n_steps);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      fail("config", "bad value '" + item + "' in --values");
    }
  }
  if (v.empty()) fail("config", "--values is empty");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schwarz neural inference: domain decomposition with local FEM or surrogate solves"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "worker cap (0: SNI_THREADS or all cores)");
  app.add_option("--format", g.format, "diagnostics format")->check(CLI::IsMember({"json", "csv"}));

  // gen-shape
  auto* gen_shape = app.add_subcommand("gen-shape", "random polygon and its mesh");
  std::size_t n_min = 3, n_max = 12;
  std::uint64_t seed = 0;
  double target = 0.05;
  std::string out;
  gen_shape->add_option("--n-min", n_min)->capture_default_str();
  gen_shape->add_option("--n-max", n_max)->capture_default_str();
  gen_shape->add_option("--seed", seed)->capture_default_str();
  gen_shape->add_option("--target", target, "target edge length")->capture_default_str();
  gen_shape->add_option("--out", out, "output JSON (stdout if omitted)");

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "training dataset");
  std::string equation = "LaplaceDirichlet", out_dir;
  std::size_t shapes = 1, per_shape = 1, m_samples = 64;
  gen_data->add_option("--equation", equation)->capture_default_str();
  gen_data->add_option("--shapes", shapes)->capture_default_str();
  gen_data->add_option("--per-shape", per_shape)->capture_default_str();
  gen_data->add_option("--seed", seed)->capture_default_str();
  gen_data->add_option("--target", target, "target edge length")->capture_default_str();
  gen_data->add_option("--boundary-samples", m_samples, "boundary encoding length M")->capture_default_str();
  gen_data->add_option("--out-dir", out_dir)->required();

  // solve / solve-heat
  SolveFlags sf;
  std::size_t k = 20;
  auto* solve = app.add_subcommand("solve", "direct or Schwarz solve");
  add_sni_flags(solve, sf);
  solve->add_option("--k", k, "number of subdomains")->capture_default_str();

  SolveFlags hf;
  std::size_t k_spatial = 4, k_temporal = 4, delta_t = 1;
  auto* solve_heat = app.add_subcommand("solve-heat", "space-time Schwarz solve of a Heat problem");
  add_sni_flags(solve_heat, hf);
  solve_heat->add_option("--k-spatial", k_spatial)->capture_default_str();
  solve_heat->add_option("--k-temporal", k_temporal)->capture_default_str();
  solve_heat->add_option("--delta-t-overlap", delta_t)->capture_default_str();

  // verify
  auto* verify = app.add_subcommand("verify", "acceptance suites");
  std::string suite = "all";
  bool verbose = false;
  verify->add_option("--suite", suite)
      ->check(CLI::IsMember({"oracle", "theorem1", "symmetry", "ablation", "all"}))
      ->capture_default_str();
  verify->add_flag("--verbose", verbose, "per-case progress on stderr");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "iterations and error against one parameter");
  std::string param, values_text, sweep_mesh, sweep_problem;
  std::size_t repeat = 1, sk = 20, sdepth = 2, smax = 20000;
  double stau = 0.04, starget = 1e-6;
  sweep->add_option("--param", param)->check(CLI::IsMember({"k", "d", "tau"}))->required();
  sweep->add_option("--values", values_text, "comma separated")->required();
  sweep->add_option("--repeat", repeat)->capture_default_str();
  sweep->add_option("--mesh", sweep_mesh, "mesh JSON (random Laplace problem if omitted)");
  sweep->add_option("--problem", sweep_problem, "problem JSON");
  sweep->add_option("--seed", seed, "seed of the random problem")->capture_default_str();
  sweep->add_option("--k", sk)->capture_default_str();
  sweep->add_option("--depth", sdepth)->capture_default_str();
  sweep->add_option("--tau", stau)->capture_default_str();
  sweep->add_option("--target", starget, "error target defining convergence")->capture_default_str();
  sweep->add_option("--max-iter", smax)->capture_default_str();
  sweep->add_option("--out", out, "output CSV (stdout if omitted)");

  // error
  auto* error = app.add_subcommand("error", "l2 relative error between two solutions");
  std::string pred, truth;
  error->add_option("--pred", pred)->required();
  error->add_option("--truth", truth)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error: usage: " << msg << '\n';
    return kFailure;
  }

  std::cout << std::setprecision(17);
  try {
    if (*gen_shape) {
      const auto poly = sni::random_simple_polygon(n_min, n_max, sni::Box2{}, seed);
      const auto mesh = sni::triangulate(poly, target);
      Json j;
      j["flags"] = echo_flags(*gen_shape, g);
      auto pv = Json::array();
      for (const auto& p : poly.vertices) pv.push_back({p.x, p.y});
      j["polygon"] = std::move(pv);
      j["mesh"] = sni::to_json(mesh);
      emit(out, j.dump());
      return 0;
    }
    if (*gen_data) {
      sni::DatasetParams p;
      p.equation = sni::parse_equation(equation);
      p.n_shapes = shapes;
      p.samples_per_shape = per_shape;
      p.seed = seed;
      p.target_edge_length = target;
      p.boundary_samples = m_samples;
      p.threads = g.threads;
      const auto m = sni::generate_dataset(p, out_dir);
      std::cout << sni::to_json(m).dump() << '\n';
      return m.skipped.empty() ? 0 : kNotConverged;
    }
    if (*solve) return run_solve(*solve, sf, k, g);
    if (*solve_heat) return run_solve_heat(*solve_heat, hf, k_spatial, k_temporal, delta_t, g);
    if (*verify) {
      const auto ids = sni::verify::suite_criteria(suite);
      const auto results = sni::verify::run_criteria(
          ids, g.threads, [](const sni::verify::CriterionResult& r) { std::cerr << sni::verify::format_line(r) << '\n'; },
          verbose ? &std::cerr : nullptr);
      bool all = true;
      for (const auto& r : results) all = all && r.passed;
      if (g.format == "csv") {
        std::cout << "criterion,name,passed,seconds,detail\n";
        for (const auto& r : results) {
          std::string d = r.detail;
          for (char& c : d)
            if (c == '"') c = '\'';
          std::cout << r.id << ',' << r.name << ',' << (r.passed ? "true" : "false") << ',' << r.seconds << ",\""
                    << d << "\"\n";
        }
      } else {
        Json j;
        j["suite"] = suite;
        j["passed"] = all;
        auto arr = Json::array();
        for (const auto& r : results)
          arr.push_back({{"criterion", r.id}, {"name", r.name}, {"passed", r.passed}, {"seconds", r.seconds},
                         {"detail", r.detail}});
        j["criteria"] = std::move(arr);
        std::cout << j.dump(2) << '\n';
      }
      return all ? 0 : kNotConverged;
    }
    if (*sweep) {
      const auto values = parse_values(values_text);
      sni::TriMesh mesh;
      sni::ProblemSpec spec;
      if (sweep_mesh.empty() != sweep_problem.empty()) fail("config", "--mesh and --problem go together");
      if (sweep_mesh.empty()) {
        auto prob = sni::verify::random_test_problem(sni::Equation::LaplaceDirichlet, seed);
        mesh = std::move(prob.mesh);
        spec = std::move(prob.spec);
      } else {
        mesh = load_mesh(sweep_mesh);
        spec = load_problem(sweep_problem);
      }
      const sni::Field exact = sni::solve_direct(mesh, spec);
      std::ostringstream csv;
      csv << std::setprecision(10) << "value,iterations,final_error,wall_time\n";
      for (double v : values) {
        for (std::size_t r = 0; r < repeat; ++r) {
          std::size_t kk = sk, dd = sdepth;
          double tt = stau;
          if (param == "k") {
            if (v < 1 || v != std::floor(v)) fail("config", "K values must be positive integers");
            kk = static_cast<std::size_t>(v);
            tt = std::min(stau, 0.8 / v);
          } else if (param == "d") {
            if (v < 0 || v != std::floor(v)) fail("config", "depth values must be nonnegative integers");
            dd = static_cast<std::size_t>(v);
          } else {
            tt = v;
          }
          sni::SniConfig cfg(kk, dd, tt, 1e-14, smax);
          cfg.threads = g.threads;
          cfg.partition_seed = r;
          cfg.oracle = exact;
          cfg.oracle_stop = starget;
          const auto t0 = std::chrono::steady_clock::now();
          const auto res = sni::sni_run(cfg, mesh, spec);
          const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          csv << v << ',' << res.diagnostics.iterations << ',' << sni::l2_relative_error(res.u, exact) << ','
              << wall << '\n';
        }
      }
      std::string text = csv.str();
      text.pop_back();
      emit(out, text);
      return 0;
    }
    if (*error) {
      const auto p = sni::solution_from_json(sni::read_json_file(pred));
      const auto t = sni::solution_from_json(sni::read_json_file(truth));
      std::cout << sni::l2_relative_error(p, t) << '\n';
      return 0;
    }
  } catch (const sni::Error& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error: " << e.kind() << ": " << msg << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
