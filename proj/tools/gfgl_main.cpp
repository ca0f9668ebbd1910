#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gfgl/gfgl.hpp"
#include "gfgl/io.hpp"

namespace {

using gfgl::io::json;

void emit(const json& j, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    gfgl::io::write_json_file(output_path, j);
  }
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct FitOptions {
  std::string input;
  std::string output;
  double lambda1 = 0;
  double lambda2 = 0;
  int max_iter = 2000;
  double tol_primal = 1e-5;
  double tol_dual = 1e-5;
  bool history = false;
  int threads = default_threads();
};

int run_fit(const FitOptions& opt) {
  const auto x = gfgl::io::read_csv_timeseries(opt.input);
  gfgl::SolverConfig<double> cfg;
  cfg.reg = {opt.lambda1, opt.lambda2};
  cfg.tol_primal = opt.tol_primal;
  cfg.tol_dual = opt.tol_dual;
  cfg.max_iter = opt.max_iter;
  cfg.record_history = opt.history;
  cfg.threads = opt.threads;
  cfg.validate();

  const auto s = gfgl::local_covariances(x);
  const auto res = gfgl::admm_solve(s, cfg);
  const auto blocks = gfgl::block_precisions(res.precisions, res.segmentation);
  emit(gfgl::io::fit_to_json(res, cfg, blocks), opt.output);
  return 0;
}

struct SimulateOptions {
  std::string config_path;
  std::string data_path;
  std::string truth_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> p, t_len;
  std::vector<int> changepoints;
  std::string graph;
  std::string change;
  std::optional<double> base_diagonal, weight_min, weight_max;
};

int run_simulate(const SimulateOptions& opt) {
  if (!opt.seed) throw gfgl::invalid_input("simulate requires --seed (no time-based default)");
  gfgl::SimSpec<double> spec;
  if (!opt.config_path.empty()) {
    std::ifstream f(opt.config_path);
    if (!f) throw gfgl::invalid_input("cannot open config file: " + opt.config_path);
    spec = gfgl::io::parse_sim_config(f);
  }
  if (opt.p) spec.p = *opt.p;
  if (opt.t_len) spec.t_len = *opt.t_len;
  if (!opt.changepoints.empty()) spec.true_changepoints = opt.changepoints;
  if (!opt.graph.empty()) {
    std::istringstream line("graph = " + opt.graph);
    spec.graph = gfgl::io::parse_sim_config(line).graph;
  }
  if (!opt.change.empty()) {
    std::istringstream line("structure_change = " + opt.change);
    spec.change = gfgl::io::parse_sim_config(line).change;
  }
  if (opt.base_diagonal) spec.base_diagonal = *opt.base_diagonal;
  if (opt.weight_min) spec.edge_weight_min = *opt.weight_min;
  if (opt.weight_max) spec.edge_weight_max = *opt.weight_max;
  spec.seed = *opt.seed;

  const auto truth = gfgl::generate_truth(spec);
  // data stream is seeded one past the structure stream
  const auto x = gfgl::sample_timeseries(truth, spec.t_len, spec.seed + 1);

  std::ofstream data(opt.data_path);
  if (!data) throw gfgl::invalid_input("cannot open output file: " + opt.data_path);
  gfgl::io::write_csv_timeseries(data, x);
  gfgl::io::write_json_file(opt.truth_path, gfgl::io::truth_to_json(truth));
  return 0;
}

struct EvaluateOptions {
  std::string fit_path;
  std::string truth_path;
  std::string output;
  std::optional<double> delta_t;
};

int run_evaluate(const EvaluateOptions& opt) {
  const auto fit = gfgl::io::fit_from_json(gfgl::io::read_json_file(opt.fit_path));
  const auto truth = gfgl::io::truth_from_json(gfgl::io::read_json_file(opt.truth_path));
  const auto rep = gfgl::evaluate_fit<double>(fit.segmentation, fit.block_precisions, truth,
                                              fit.reg, opt.delta_t);
  emit(gfgl::io::report_to_json(rep), opt.output);
  return 0;
}

struct PathOptions {
  std::string input;
  std::string output;
  std::vector<double> lambda1_grid;
  std::vector<double> lambda2_grid;
  double lambda2_max = 0;
  double lambda2_min = 0;
  int lambda2_count = 0;
  std::optional<int> target_k;
  int max_iter = 2000;
  double tol_primal = 1e-5;
  double tol_dual = 1e-5;
  int threads = default_threads();
};

int run_path(const PathOptions& opt) {
  const auto x = gfgl::io::read_csv_timeseries(opt.input);
  const auto s = gfgl::local_covariances(x);

  std::vector<double> grid = opt.lambda2_grid;
  if (grid.empty()) {
    if (opt.lambda2_count < 2 || !(opt.lambda2_max > opt.lambda2_min) || !(opt.lambda2_min > 0))
      throw gfgl::invalid_input(
          "path needs --lambda2-grid or a log grid via --lambda2-max/--lambda2-min/--lambda2-count");
    const double ratio = std::pow(opt.lambda2_min / opt.lambda2_max,
                                  1.0 / static_cast<double>(opt.lambda2_count - 1));
    double v = opt.lambda2_max;
    for (int i = 0; i < opt.lambda2_count; ++i, v *= ratio) grid.push_back(v);
  }

  json out;
  json paths = json::array();
  for (const double l1 : opt.lambda1_grid) {
    gfgl::SolverConfig<double> cfg;
    cfg.reg = {l1, grid.front()};
    cfg.tol_primal = opt.tol_primal;
    cfg.tol_dual = opt.tol_dual;
    cfg.max_iter = opt.max_iter;
    cfg.threads = opt.threads;
    cfg.validate();
    const auto path = gfgl::sweep_lambda2(s, cfg, grid, opt.target_k);
    paths.push_back(gfgl::io::path_to_json(path, l1, opt.target_k));
  }
  if (paths.size() == 1)
    out = paths[0];
  else
    out["paths"] = paths;
  emit(out, opt.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-fused graphical lasso: joint estimation of piecewise-constant sparse "
               "precision matrices and changepoints"};
  app.set_version_flag("--version", "gfgl 0.1.0");
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit = app.add_subcommand("fit", "Estimate precisions and changepoints from a CSV series");
  fit->add_option("input", fit_opt.input, "T x p CSV file (optional header row)")->required();
  fit->add_option("--lambda1", fit_opt.lambda1, "off-diagonal l1 weight")->required();
  fit->add_option("--lambda2", fit_opt.lambda2, "group-fusion weight")->required();
  fit->add_option("--max-iter", fit_opt.max_iter, "iteration cap");
  fit->add_option("--tol-primal", fit_opt.tol_primal, "primal residual tolerance");
  fit->add_option("--tol-dual", fit_opt.tol_dual, "dual residual tolerance");
  fit->add_option("--output", fit_opt.output, "write JSON here instead of stdout");
  fit->add_flag("--history", fit_opt.history, "record per-iteration residuals");
  fit->add_option("--threads", fit_opt.threads, "solver threads (1 = sequential reference mode)");

  SimulateOptions sim_opt;
  auto* sim = app.add_subcommand("simulate", "Generate piecewise-constant Gaussian data");
  sim->add_option("--config", sim_opt.config_path, "key = value spec file");
  sim->add_option("--seed", sim_opt.seed, "RNG seed (required)");
  sim->add_option("--data", sim_opt.data_path, "output CSV path")->required();
  sim->add_option("--truth", sim_opt.truth_path, "output ground-truth JSON path")->required();
  sim->add_option("--p", sim_opt.p, "dimension");
  sim->add_option("--T", sim_opt.t_len, "time points");
  sim->add_option("--changepoints", sim_opt.changepoints, "1-based changepoints")->delimiter(',');
  sim->add_option("--graph", sim_opt.graph,
                  "identity | chain:<w> | erdos_renyi_count:<m> | erdos_renyi_prob:<q>");
  sim->add_option("--change", sim_opt.change, "redraw_all | perturb_subset:<m>");
  sim->add_option("--base-diagonal", sim_opt.base_diagonal, "diagonal load");
  sim->add_option("--weight-min", sim_opt.weight_min, "edge weight magnitude lower bound");
  sim->add_option("--weight-max", sim_opt.weight_max, "edge weight magnitude upper bound");

  EvaluateOptions eval_opt;
  auto* eval = app.add_subcommand("evaluate", "Score a fit against a ground truth");
  eval->add_option("--fit", eval_opt.fit_path, "fit JSON")->required();
  eval->add_option("--truth", eval_opt.truth_path, "truth JSON")->required();
  eval->add_option("--output", eval_opt.output, "write JSON here instead of stdout");
  eval->add_option("--delta-t", eval_opt.delta_t, "error-rate fraction for the ratio diagnostics");

  PathOptions path_opt;
  auto* path = app.add_subcommand("path", "Sweep a lambda2 grid with warm starts");
  path->add_option("input", path_opt.input, "T x p CSV file")->required();
  path->add_option("--lambda1", path_opt.lambda1_grid, "one or more l1 weights")
      ->required()
      ->delimiter(',');
  path->add_option("--lambda2-grid", path_opt.lambda2_grid, "explicit lambda2 values")
      ->delimiter(',');
  path->add_option("--lambda2-max", path_opt.lambda2_max, "log-grid upper end");
  path->add_option("--lambda2-min", path_opt.lambda2_min, "log-grid lower end");
  path->add_option("--lambda2-count", path_opt.lambda2_count, "log-grid size");
  path->add_option("--target-k", path_opt.target_k,
                   "report the largest lambda2 yielding this many changepoints");
  path->add_option("--max-iter", path_opt.max_iter, "iteration cap per grid point");
  path->add_option("--tol-primal", path_opt.tol_primal, "primal residual tolerance");
  path->add_option("--tol-dual", path_opt.tol_dual, "dual residual tolerance");
  path->add_option("--output", path_opt.output, "write JSON here instead of stdout");
  path->add_option("--threads", path_opt.threads, "solver threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) return run_fit(fit_opt);
    if (sim->parsed()) return run_simulate(sim_opt);
    if (eval->parsed()) return run_evaluate(eval_opt);
    if (path->parsed()) return run_path(path_opt);
  } catch (const gfgl::invalid_input& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gfgl::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
