#ifndef GFGL_IO_HPP_
#define GFGL_IO_HPP_

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfgl/evaluate.hpp"
#include "gfgl/simulate.hpp"
#include "gfgl/solver.hpp"
#include "gfgl/types.hpp"

namespace gfgl::io {

using json = nlohmann::json;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool parse_double(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace detail

//! Comma-separated T x p matrix, optional single header line. Errors name the
//! offending 1-based row and column of the file.
inline TimeSeries<double> read_csv_timeseries(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int file_row = 0;
  std::size_t cols = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++file_row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> vals(cells.size());
    bool all_numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!detail::parse_double(cells[c], vals[c])) {
        all_numeric = false;
        bad_col = c;
        break;
      }
    }
    if (!all_numeric) {
      if (first_content_line) {  // header line
        first_content_line = false;
        continue;
      }
      throw invalid_input("CSV: cannot parse number at row " + std::to_string(file_row) +
                          ", column " + std::to_string(bad_col + 1));
    }
    if (cols == 0) {
      cols = vals.size();
    } else if (vals.size() != cols) {
      throw invalid_input("CSV: row " + std::to_string(file_row) + " has " +
                          std::to_string(vals.size()) + " columns, expected " +
                          std::to_string(cols));
    }
    first_content_line = false;
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw invalid_input("CSV: no data rows");
  TimeSeries<double> x;
  x.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c)
      x.data(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  x.validate();
  return x;
}

inline TimeSeries<double> read_csv_timeseries(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw invalid_input("cannot open input file: " + path);
  return read_csv_timeseries(f);
}

inline void write_csv_timeseries(std::ostream& out, const TimeSeries<double>& x) {
  out.precision(17);
  for (Index t = 0; t < x.time_points(); ++t) {
    for (Index j = 0; j < x.dim(); ++j) {
      if (j) out << ',';
      out << x.data(t, j);
    }
    out << '\n';
  }
}

inline json matrix_to_json(const MatrixX<double>& m) {
  json arr = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

inline MatrixX<double> matrix_from_json(const json& arr, Index p) {
  if (static_cast<Index>(arr.size()) != p * p) throw invalid_input("JSON: bad matrix length");
  MatrixX<double> m(p, p);
  Index k = 0;
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) m(i, j) = arr[static_cast<std::size_t>(k++)].get<double>();
  return m;
}

//! Fit output: config echo, changepoints, block precisions averaged over the
//! estimated blocks, the exact per-time jump norms, and run diagnostics.
inline json fit_to_json(const SolveResult<double>& res, const SolverConfig<double>& cfg,
                        const std::vector<MatrixX<double>>& blocks) {
  json j;
  j["config"] = {{"lambda1", cfg.reg.lambda1},   {"lambda2", cfg.reg.lambda2},
                 {"gamma_v1", cfg.gamma_v1},     {"gamma_v2", cfg.gamma_v2},
                 {"gamma_w", cfg.gamma_w},       {"tol_primal", cfg.tol_primal},
                 {"tol_dual", cfg.tol_dual},     {"max_iter", cfg.max_iter},
                 {"threads", cfg.threads}};
  j["T"] = res.precisions.time_points();
  j["p"] = res.precisions.dim();
  j["changepoints"] = res.segmentation.changepoints();
  json blocks_json = json::array();
  for (const auto& b : blocks) blocks_json.push_back(matrix_to_json(b));
  j["block_precisions"] = blocks_json;
  j["jump_norms"] = res.jump_norms;
  j["objective"] = res.final_objective;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["residuals"] = {{"primal", res.eps_primal}, {"dual", res.eps_dual}};
  if (!res.residual_history.empty()) {
    json hist = json::array();
    for (const auto& [ep, ed] : res.residual_history) hist.push_back({ep, ed});
    j["history"] = hist;
  }
  return j;
}

struct FitFile {
  int t_len = 0;
  Index p = 0;
  Segmentation segmentation;
  std::vector<MatrixX<double>> block_precisions;
  RegularizationConfig<double> reg;
};

inline FitFile fit_from_json(const json& j) {
  FitFile f;
  f.t_len = j.at("T").get<int>();
  f.p = j.at("p").get<Index>();
  f.segmentation = Segmentation(j.at("changepoints").get<std::vector<int>>(), f.t_len);
  for (const auto& b : j.at("block_precisions")) f.block_precisions.push_back(matrix_from_json(b, f.p));
  f.reg.lambda1 = j.at("config").at("lambda1").get<double>();
  f.reg.lambda2 = j.at("config").at("lambda2").get<double>();
  return f;
}

inline json truth_to_json(const GroundTruth<double>& truth) {
  json j;
  j["p"] = truth.dim();
  j["T"] = truth.t_len;
  j["changepoints"] = truth.true_changepoints;
  json covs = json::array(), precs = json::array(), edges = json::array();
  for (const auto& m : truth.block_covariances) covs.push_back(matrix_to_json(m));
  for (const auto& m : truth.block_precisions) precs.push_back(matrix_to_json(m));
  for (const auto& es : truth.edge_sets) {
    json block_edges = json::array();
    for (const auto& [i, k] : es) block_edges.push_back({i + 1, k + 1});  // 1-based externally
    edges.push_back(block_edges);
  }
  j["block_covariances"] = covs;
  j["block_precisions"] = precs;
  j["edge_sets"] = edges;
  if (truth.eta_min) j["eta_min"] = *truth.eta_min;
  if (truth.max_jump) j["max_jump"] = *truth.max_jump;
  j["phi_max"] = truth.phi_max;
  return j;
}

inline GroundTruth<double> truth_from_json(const json& j) {
  GroundTruth<double> t;
  const Index p = j.at("p").get<Index>();
  t.t_len = j.at("T").get<int>();
  t.true_changepoints = j.at("changepoints").get<std::vector<int>>();
  for (const auto& b : j.at("block_covariances")) t.block_covariances.push_back(matrix_from_json(b, p));
  for (const auto& b : j.at("block_precisions")) t.block_precisions.push_back(matrix_from_json(b, p));
  for (const auto& es : j.at("edge_sets")) {
    std::vector<std::pair<int, int>> block_edges;
    for (const auto& e : es)
      block_edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
    t.edge_sets.push_back(std::move(block_edges));
  }
  if (j.contains("eta_min")) t.eta_min = j["eta_min"].get<double>();
  if (j.contains("max_jump")) t.max_jump = j["max_jump"].get<double>();
  t.phi_max = j.at("phi_max").get<double>();
  return t;
}

inline json report_to_json(const EvalReport<double>& rep) {
  json j;
  if (rep.cp_max_error)
    j["cp_max_error"] = *rep.cp_max_error;
  else
    j["cp_max_error"] = nullptr;
  j["cp_count_error"] = rep.cp_count_error;
  j["hausdorff_onesided"] = rep.hausdorff_onesided;
  json aligned = json::array();
  for (const int k : rep.aligned_true_block) aligned.push_back(k + 1);  // 1-based externally
  j["aligned_true_block"] = aligned;
  j["sign_consistency"] = rep.sign_event;
  j["support_recovered"] = rep.support_recovered;
  j["error_max"] = rep.err_max;
  j["error_frobenius"] = rep.err_fro;
  j["alpha"] = rep.alpha;
  json c;
  const auto& tc = rep.constants;
  c["phi_max"] = tc.phi_max;
  c["k_sigma0"] = tc.k_sigma0;
  c["max_degree"] = tc.max_degree;
  c["d_min"] = tc.d_min;
  auto put_opt = [&c](const char* key, const std::optional<double>& v) {
    if (v)
      c[key] = *v;
    else
      c[key] = nullptr;
  };
  put_opt("eta_min", tc.eta_min);
  put_opt("max_jump", tc.max_jump);
  put_opt("theta_min", tc.theta_min);
  put_opt("k_gamma0", tc.k_gamma0);
  put_opt("alpha_min", tc.alpha_min);
  put_opt("beta1", tc.beta1);
  put_opt("beta2", tc.beta2);
  put_opt("beta3", tc.beta3);
  put_opt("c_k", tc.c_k);
  put_opt("v_c", tc.v_c);
  put_opt("v_theta", tc.v_theta);
  j["constants"] = c;
  return j;
}

inline json path_to_json(const PathResult<double>& path, double lambda1,
                         std::optional<int> target_k) {
  json j;
  j["lambda1"] = lambda1;
  json pts = json::array();
  for (const auto& pt : path.points) {
    pts.push_back({{"lambda2", pt.lambda2},
                   {"k_hat", pt.k_hat},
                   {"objective", pt.objective},
                   {"eps_primal", pt.eps_primal},
                   {"eps_dual", pt.eps_dual},
                   {"iterations", pt.iterations},
                   {"converged", pt.converged}});
  }
  j["grid"] = pts;
  if (target_k) {
    j["target_k"] = *target_k;
    if (path.selected_lambda2)
      j["selected_lambda2"] = *path.selected_lambda2;
    else
      j["selected_lambda2"] = nullptr;
  }
  j["total_iterations"] = path.total_iterations;
  return j;
}

//! Key = value simulation config. Recognized keys: p, T, changepoints (comma
//! separated), graph (identity | chain:<w> | erdos_renyi_count:<m> |
//! erdos_renyi_prob:<q>), base_diagonal, edge_weight_min, edge_weight_max,
//! structure_change (redraw_all | perturb_subset:<m>), seed. '#' starts a
//! comment.
inline SimSpec<double> parse_sim_config(std::istream& in) {
  SimSpec<double> spec;
  spec.true_changepoints.clear();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_input("sim config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    auto as_double = [&](const std::string& v) {
      double d;
      if (!detail::parse_double(v, d))
        throw invalid_input("sim config line " + std::to_string(line_no) + ": bad number '" + v + "'");
      return d;
    };
    if (key == "p") {
      spec.p = static_cast<Index>(as_double(value));
    } else if (key == "T") {
      spec.t_len = static_cast<Index>(as_double(value));
    } else if (key == "changepoints") {
      for (const auto& cell : detail::split_csv_line(value)) {
        const std::string t = detail::trim(cell);
        if (!t.empty()) spec.true_changepoints.push_back(static_cast<int>(as_double(t)));
      }
    } else if (key == "graph") {
      const auto colon = value.find(':');
      const std::string name = colon == std::string::npos ? value : value.substr(0, colon);
      const std::string arg = colon == std::string::npos ? "" : value.substr(colon + 1);
      if (name == "identity") {
        spec.graph = GraphModel::identity();
      } else if (name == "chain") {
        spec.graph = GraphModel::chain(arg.empty() ? 0.4 : as_double(arg));
      } else if (name == "erdos_renyi_count") {
        spec.graph = GraphModel::erdos_renyi_count(static_cast<int>(as_double(arg)));
      } else if (name == "erdos_renyi_prob") {
        spec.graph = GraphModel::erdos_renyi_prob(as_double(arg));
      } else {
        throw invalid_input("sim config line " + std::to_string(line_no) + ": unknown graph '" +
                            name + "'");
      }
    } else if (key == "base_diagonal") {
      spec.base_diagonal = as_double(value);
    } else if (key == "edge_weight_min") {
      spec.edge_weight_min = as_double(value);
    } else if (key == "edge_weight_max") {
      spec.edge_weight_max = as_double(value);
    } else if (key == "structure_change") {
      const auto colon = value.find(':');
      const std::string name = colon == std::string::npos ? value : value.substr(0, colon);
      if (name == "redraw_all") {
        spec.change = StructureChange::redraw_all();
      } else if (name == "perturb_subset") {
        if (colon == std::string::npos)
          throw invalid_input("sim config line " + std::to_string(line_no) +
                              ": perturb_subset needs an edge count");
        spec.change = StructureChange::perturb_subset(static_cast<int>(as_double(value.substr(colon + 1))));
      } else {
        throw invalid_input("sim config line " + std::to_string(line_no) +
                            ": unknown structure_change '" + name + "'");
      }
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(as_double(value));
    } else {
      throw invalid_input("sim config line " + std::to_string(line_no) + ": unknown key '" + key +
                          "'");
    }
  }
  return spec;
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw invalid_input("cannot open file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw invalid_input("JSON parse error in " + path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw invalid_input("cannot open output file: " + path);
  f << j.dump(2) << '\n';
}

}  // namespace gfgl::io

#endif  // GFGL_IO_HPP_
