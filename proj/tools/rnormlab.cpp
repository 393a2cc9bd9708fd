#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rnormlab/constructions.hpp"
#include "rnormlab/harness.hpp"
#include "rnormlab/nets.hpp"
#include "rnormlab/ridge.hpp"
#include "rnormlab/varsolve.hpp"

namespace rl = rnormlab;

namespace {
std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_out(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << content;
}

std::string with_suffix(const std::string& out, const std::string& suffix) {
  if (out.empty() || out == "-") return out;
  auto dot = out.find_last_of('.');
  if (dot == std::string::npos) return out + suffix;
  return out.substr(0, dot) + suffix + out.substr(dot);
}

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  return nlohmann::json::parse(read_file(path));
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rnormlab: R-norm-minimal interpolation by two-layer ReLU networks"};
  app.require_subcommand(1);

  uint64_t seed = 0;
  std::string out, config_path;
  int threads = 1;
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--out", out, "output path ('-' = stdout)");
  app.add_option("--config", config_path, "JSON config path");
  app.add_option("--threads", threads, "thread budget (evaluation is deterministic regardless)")
      ->capture_default_str();

  // construct
  auto* c_cmd = app.add_subcommand("construct", "build an explicit interpolant net");
  std::string ctype = "full-average";
  int cd = 4, ct = 0, ck = 0;
  double ceps = 0.25, cc1 = 0.12, cq = 1.0;
  std::string cdata;
  c_cmd->add_option("--type", ctype, "full-average|random-average|cap|periodic")->required();
  c_cmd->add_option("--d", cd, "dimension");
  c_cmd->add_option("--t", ct, "sawtooth width t");
  c_cmd->add_option("--eps", ceps, "target sup error");
  c_cmd->add_option("--k", ck, "number of averaged components (0 = AUTO)");
  c_cmd->add_option("--c1", cc1, "cap construction group-size constant");
  c_cmd->add_option("--q", cq, "periodic target q (rho = 4q/sqrt(d))");
  c_cmd->add_option("--data", cdata, "dataset CSV (cap construction)");

  // rnorm
  auto* r_cmd = app.add_subcommand("rnorm", "exact norm accounting of a net JSON");
  std::string rnet;
  double rK = -1.0;
  r_cmd->add_option("--net", rnet, "net JSON path")->required();
  r_cmd->add_option("--K", rK, "sup bound on unit ball; enables V2 conversion");

  // ridge-vp
  auto* g_cmd = app.add_subcommand("ridge-vp", "ridge-restricted variational search");
  std::string gdata;
  double geps = 0.0;
  int grandom = 0, gsignedrand = 0;
  bool gsigned = true, gdiffs = false;
  g_cmd->add_option("--data", gdata, "dataset CSV")->required();
  g_cmd->add_option("--eps", geps, "tube radius");
  g_cmd->add_flag("--signed,!--no-signed", gsigned, "all signed directions (d <= 12)");
  g_cmd->add_option("--signed-random", gsignedrand, "sampled signed directions");
  g_cmd->add_option("--random", grandom, "random unit directions");
  g_cmd->add_flag("--diffs", gdiffs, "data-difference directions");

  // solve-vp
  auto* v_cmd = app.add_subcommand("solve-vp", "dictionary-restricted (eps-)VP by LP");
  std::string vdata, vdict;
  double veps = 0.0;
  v_cmd->add_option("--data", vdata, "dataset CSV")->required();
  v_cmd->add_option("--dict", vdict, "dictionary spec JSON")->required();
  v_cmd->add_option("--eps", veps, "tube radius");

  // correlate
  auto* k_cmd = app.add_subcommand("correlate", "exact neuron-parity correlations");
  int kd = 8, ksamples = 10000;
  k_cmd->add_option("--d", kd, "dimension (<= 14)");
  k_cmd->add_option("--samples", ksamples, "sampled (w,b) pairs");

  // experiment
  auto* e_cmd = app.add_subcommand("experiment", "seeded experiment sweep, CSV out");
  std::string ename;
  e_cmd->add_option("--name", ename, "scaling|generalization|correlation|v2check|periodic")
      ->required();

  CLI11_PARSE(app, argc, argv);
  (void)threads;

  try {
    if (*c_cmd) {
      nlohmann::json report;
      rl::TwoLayerNet net;
      if (ctype == "full-average") {
        net = rl::parity_full_average(cd);
        rl::Dataset data = rl::gen_full_parity(cd);
        report["params"] = {{"d", cd}};
        report["q"] = rl::parity_q(cd, 0);
        report["sup_error"] = rl::sup_error(net, data);
        report["rnorm_upper"] = rl::rnorm(net);
      } else if (ctype == "random-average") {
        auto res = rl::parity_random_average(cd, ct, ceps, ck, seed);
        net = res.net;
        report = nlohmann::json::parse(res.report_json());
      } else if (ctype == "cap") {
        rl::Dataset data = rl::dataset_from_csv(read_file(cdata));
        auto res = rl::cap_construction(data, cc1, seed);
        net = res.net;
        report = nlohmann::json::parse(res.report_json());
      } else if (ctype == "periodic") {
        double sd = std::sqrt(double(cd));
        double rho = 4.0 * cq / sd;
        rl::PeriodicRidgeTarget tgt;
        tgt.v = Eigen::VectorXd::Ones(cd) / sd;
        tgt.rho = rho;
        tgt.phi = [rho](double z) { return std::cos(2.0 * M_PI * z / rho); };
        tgt.L = 2.0 * M_PI / rho;
        auto res = rl::periodic_average(tgt, ceps, ck, seed);
        net = res.net;
        report = nlohmann::json::parse(res.report_json());
      } else {
        throw std::runtime_error("unknown construction type " + ctype);
      }
      write_out(out, rl::serialize(net));
      write_out(with_suffix(out, ".report"), report.dump(2));
      return 0;
    }
    if (*r_cmd) {
      rl::TwoLayerNet net = rl::deserialize(read_file(rnet));
      nlohmann::json j;
      j["rnorm"] = rl::rnorm(net);
      if (rK >= 0.0) {
        auto conv = rl::v2norm_upper(net, rK);
        j["v2_mass"] = conv.mass;
        j["v2_cap_12R_18K"] = 12.0 * rl::rnorm(net) + 18.0 * rK;
      }
      write_out(out, j.dump(2));
      return 0;
    }
    if (*g_cmd) {
      rl::Dataset data = rl::dataset_from_csv(read_file(gdata));
      rl::DirectionPoolSpec pool;
      pool.signed_dirs = gsigned && data.d <= 12;
      pool.n_signed_random = gsignedrand;
      pool.n_random = grandom;
      pool.data_diffs = gdiffs;
      auto res = rl::search_ridge_vp(data, geps, pool, seed);
      std::ostringstream os;
      os << "direction_id,feasible,value,certificate_bound\n";
      for (const auto& row : res.table) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d,%d,%.12g,%.12g\n", row.direction_id,
                      row.feasible ? 1 : 0, row.value, row.certificate_bound);
        os << buf;
      }
      write_out(out, os.str());
      std::fprintf(stderr, "best value: %.12g\n", res.value);
      return 0;
    }
    if (*v_cmd) {
      rl::Dataset data = rl::dataset_from_csv(read_file(vdata));
      nlohmann::json dj = nlohmann::json::parse(read_file(vdict));
      rl::DictionarySpec spec;
      spec.data_diffs = dj.value("data_diffs", false);
      spec.n_signed = dj.value("n_signed", 0);
      spec.all_signed = dj.value("all_signed", false);
      spec.n_random = dj.value("n_random", 0);
      spec.kink_at_data = dj.value("kink_at_data", true);
      spec.bias_grid = dj.value("bias_grid", 0);
      spec.max_diffs = dj.value("max_diffs", 200);
      spec.seed = dj.value("seed", seed);
      if (dj.contains("inject_net"))
        spec.injected = rl::atoms_of(
            rl::canonicalize(rl::deserialize(read_file(dj["inject_net"].get<std::string>()))));
      rl::VPInstance inst;
      inst.data = &data;
      inst.eps = veps;
      inst.atoms = rl::build_dictionary(data, spec);
      rl::VPSolution sol = rl::solve_vp(inst);
      write_out(out, rl::serialize(sol.net));
      nlohmann::json sj;
      sj["objective"] = sol.objective;
      sj["status"] = sol.status == rl::VPStatus::Optimal      ? "optimal"
                     : sol.status == rl::VPStatus::Infeasible ? "infeasible"
                                                              : "iteration-limit";
      sj["support_size"] = sol.support_size;
      sj["residual"] = sol.residual;
      std::fprintf(stderr, "%s\n", sj.dump().c_str());
      return 0;
    }
    if (*k_cmd) {
      nlohmann::json cfg;
      cfg["ds"] = std::vector<int>{kd};
      cfg["samples"] = ksamples;
      auto res = rl::run_experiment("correlation", cfg.dump(), seed);
      write_out(out, res.csv);
      return 0;
    }
    if (*e_cmd) {
      nlohmann::json cfg = load_config(config_path);
      auto res = rl::run_experiment(ename, cfg.dump(), seed);
      write_out(out, res.csv);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
