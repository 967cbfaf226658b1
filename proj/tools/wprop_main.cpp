// wprop: quantize distributions, certify pushforward bounds, propagate
// stochastic systems, and run the validation oracles from the command line.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "wprop/experiments.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete approximation of pushforward measures with certified Wasserstein bounds"};
  app.require_subcommand(1);

  // --- quantize -------------------------------------------------------------
  std::string dist_path, out_path;
  long budget = 100;
  int rho = 2;
  auto* quantize = app.add_subcommand("quantize", "Build an optimized grid for a distribution");
  quantize->add_option("--dist", dist_path, "distribution JSON")->required();
  quantize->add_option("--budget", budget, "maximum number of locations")->required();
  quantize->add_option("--out", out_path, "output quantizer JSON")->required();
  quantize->add_option("--rho", rho, "Wasserstein order (1 or 2)");

  // --- bound ----------------------------------------------------------------
  std::string model_path, quant_path, method = "thm4";
  double theta = 0.0;
  auto* bound = app.add_subcommand("bound", "Certified pushforward bound for a quantization");
  bound->add_option("--f", model_path, "function model JSON")->required();
  bound->add_option("--dist", dist_path, "distribution JSON")->required();
  bound->add_option("--quant", quant_path, "quantizer JSON")->required();
  bound->add_option("--theta", theta, "ambiguity radius");
  bound->add_option("--rho", rho, "Wasserstein order (1 or 2)");
  bound->add_option("--method", method, "thm4 | thm6 | lipschitz");

  // --- propagate --------------------------------------------------------------
  std::string system_path, trace_path, dump_dir;
  int horizon = 10, mc_samples = 0, mc_repeats = 10;
  double epsilon = 0.0;
  std::uint64_t seed = 2024;
  int k_state = 100, m_noise = 25;
  auto* propagate = app.add_subcommand("propagate", "Multi-step discrete approximation of a system");
  propagate->add_option("--system", system_path, "system JSON")->required();
  propagate->add_option("--horizon", horizon, "number of steps")->required();
  propagate->add_option("--epsilon", epsilon, "per-step quantization target (0: automatic)");
  propagate->add_option("--out", trace_path, "trace CSV path")->required();
  propagate->add_option("--dump-dists", dump_dir, "directory for per-step atom dumps");
  propagate->add_option("--mc-samples", mc_samples, "per-repeat sample count for the optional MC column");
  propagate->add_option("--mc-repeats", mc_repeats, "MC repeats");
  propagate->add_option("--seed", seed, "base seed");
  propagate->add_option("--k-state", k_state, "state support budget");
  propagate->add_option("--m-noise", m_noise, "noise atom budget");
  propagate->add_option("--rho", rho, "Wasserstein order (1 or 2)");

  // --- validate ---------------------------------------------------------------
  std::string p_path, q_path;
  int n_samples = 2000;
  auto* validate = app.add_subcommand("validate", "Monte-Carlo Wasserstein estimate between two distributions");
  validate->add_option("--p", p_path, "distribution JSON")->required();
  validate->add_option("--q", q_path, "distribution JSON")->required();
  validate->add_option("--n", n_samples, "samples per repeat");
  validate->add_option("--repeats", mc_repeats, "repeats");
  validate->add_option("--rho", rho, "Wasserstein order (1 or 2)");
  validate->add_option("--seed", seed, "base seed");

  // --- experiment ---------------------------------------------------------------
  std::string exp_id, config_path, out_dir = ".";
  auto* experiment = app.add_subcommand("experiment", "Reproduce table/figure data at desk scale");
  experiment->add_option("--id", exp_id, "table1 | table2 | fig3 | fig4 | fig5 | fig6")->required();
  experiment->add_option("--config", config_path, "experiment config JSON");
  experiment->add_option("--out-dir", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*quantize) {
      const auto dist = wprop::distribution_from_json(load_json(dist_path));
      wprop::QuantizationOperator q;
      if (const auto* prod = std::get_if<wprop::ProductDistribution>(&dist)) {
        q = wprop::optimized_grid(*prod, budget);
      } else {
        const auto& disc = std::get<wprop::DiscreteDistribution>(dist);
        const auto red = wprop::reduce_discrete(disc, static_cast<int>(budget), seed);
        std::cout << red.theta << "\n";
        save_json(out_path, wprop::to_json(red.reduced));
        return 0;
      }
      save_json(out_path, wprop::to_json(q));
      std::cout << wprop::theta_d(q, dist, rho) << "\n";
      return 0;
    }

    if (*bound) {
      const auto f = wprop::model_from_json(load_json(model_path));
      const auto dist = wprop::distribution_from_json(load_json(dist_path));
      const auto q = wprop::quantizer_from_json(load_json(quant_path));
      wprop::BoundReport report;
      if (method == "thm4") {
        report = wprop::bound_thm4(q, dist, theta, f, rho);
      } else if (method == "thm6") {
        report = wprop::bound_thm6(q, dist, f, rho);
      } else if (method == "lipschitz") {
        const double td = wprop::theta_d(q, dist, rho);
        report.value = wprop::bound_lipschitz(theta, td, f.global_lipschitz(rho));
        report.theta = theta;
        report.theta_d = td;
        report.rho = rho;
        report.method = "lipschitz";
      } else {
        throw std::runtime_error("unknown method " + method);
      }
      std::cout << wprop::to_json(report).dump(2) << "\n";
      return 0;
    }

    if (*propagate) {
      const auto sys = wprop::system_from_json(load_json(system_path));
      wprop::StepConfig cfg;
      cfg.k_state = k_state;
      cfg.m_noise = m_noise;
      cfg.rho = rho;
      cfg.seed = seed;
      const auto run = wprop::propagate_horizon(sys, horizon, epsilon, cfg);
      std::ofstream out(trace_path, std::ios::binary);
      if (!out.good()) throw std::runtime_error("cannot open " + trace_path);
      out << "t,theta_t,theta_d_t,support,mc_estimate,seconds\n";
      for (std::size_t i = 0; i < run.trace.steps.size(); ++i) {
        const auto& s = run.trace.steps[i];
        std::string mc;
        if (mc_samples > 0) {
          const auto truth = [&sys, &s](int n, std::uint64_t sd) {
            return wprop::simulate_true_state(sys, s.t, n, sd);
          };
          const auto est = wprop::mc_wasserstein(truth, wprop::distribution_sampler(run.states[i]),
                                                 mc_samples, mc_repeats, rho, seed + 99ULL * i);
          mc = std::to_string(est.estimate);
        }
        out << s.t << "," << s.theta << "," << s.theta_d << "," << s.support << "," << mc << ","
            << s.seconds << "\n";
      }
      if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        for (std::size_t i = 0; i < run.states.size(); ++i) {
          save_json(dump_dir + "/state_t" + std::to_string(i + 1) + ".json",
                    wprop::to_json(run.states[i]));
        }
      }
      std::cout << (run.trace.diverged ? "diverged" : "ok") << " epsilon=" << run.epsilon << "\n";
      return run.trace.diverged ? 2 : 0;
    }

    if (*validate) {
      const auto p = wprop::distribution_from_json(load_json(p_path));
      const auto q = wprop::distribution_from_json(load_json(q_path));
      const auto est = wprop::mc_wasserstein(p, q, n_samples, mc_repeats, rho, seed);
      std::cout << nlohmann::json({{"estimate", est.estimate}, {"stderr", est.stderr_}}).dump()
                << "\n";
      return 0;
    }

    if (*experiment) {
      wprop::ExperimentConfig cfg;
      if (!config_path.empty()) cfg = wprop::config_from_json(load_json(config_path));
      cfg.id = exp_id;
      if (out_dir != ".") cfg.out_dir = out_dir;
      if (cfg.id == "table2" && config_path.empty()) cfg.horizon = 50;
      const auto outcome = wprop::run_experiment(cfg);
      for (const auto& f : outcome.files) std::cout << f << "\n";
      for (const auto& n : outcome.notes) std::cerr << n << "\n";
      return outcome.sound ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
