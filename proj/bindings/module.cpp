// Python bindings for the main operations: distributions, quantization,
// function models, certified bounds, propagation, and the validation oracles.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "wprop/experiments.hpp"

namespace py = pybind11;
using namespace wprop;

namespace {

Distribution dist_from_str(const std::string& text) {
  return distribution_from_json(nlohmann::json::parse(text));
}

std::string dist_to_str(const Distribution& d) { return distribution_to_json(d).dump(); }

Region region_from_lists(const std::vector<std::pair<double, double>>& iv) {
  Region r;
  for (const auto& [lo, hi] : iv) r.emplace_back(lo, hi);
  return r;
}

}  // namespace

PYBIND11_MODULE(_wprop, m) {
  m.doc() = "Discrete pushforward approximation with certified Wasserstein bounds";

  py::class_<ProductDistribution>(m, "ProductDistribution")
      .def_static("from_json", [](const std::string& s) {
        return std::get<ProductDistribution>(dist_from_str(s));
      })
      .def("dimension", &ProductDistribution::dimension)
      .def("mean", &ProductDistribution::mean)
      .def("sample", &ProductDistribution::sample, py::arg("n"), py::arg("seed"))
      .def("to_json", [](const ProductDistribution& p) { return to_json(p).dump(); });

  py::class_<DiscreteDistribution>(m, "DiscreteDistribution")
      .def(py::init<std::vector<Vec>, std::vector<double>>(), py::arg("locations"),
           py::arg("weights"))
      .def_static("from_json", [](const std::string& s) {
        return std::get<DiscreteDistribution>(dist_from_str(s));
      })
      .def("dimension", &DiscreteDistribution::dimension)
      .def("size", &DiscreteDistribution::size)
      .def("locations", &DiscreteDistribution::locations)
      .def("weights", &DiscreteDistribution::weights)
      .def("sample", &DiscreteDistribution::sample, py::arg("n"), py::arg("seed"))
      .def("to_json", [](const DiscreteDistribution& p) { return to_json(p).dump(); });

  m.def("gaussian", [](double mean, double std) {
    return ProductDistribution({GaussianComponent{mean, std}});
  });
  m.def("diag_gaussian", [](const std::vector<double>& means, const std::vector<double>& stds) {
    std::vector<Component> comps;
    for (std::size_t i = 0; i < means.size(); ++i)
      comps.push_back(GaussianComponent{means[i], stds[i]});
    return ProductDistribution(std::move(comps));
  });
  m.def("truncated_moment",
        [](const std::string& dist_json, int axis, double lo, double hi, double c, int rho) {
          const auto d = std::get<ProductDistribution>(dist_from_str(dist_json));
          return truncated_moment(d.component(axis), Interval(lo, hi), c, rho);
        });

  py::class_<QuantizationOperator>(m, "QuantizationOperator")
      .def("size", &QuantizationOperator::size)
      .def("to_json", [](const QuantizationOperator& q) { return to_json(q).dump(); })
      .def_static("from_json",
                  [](const std::string& s) { return quantizer_from_json(nlohmann::json::parse(s)); });

  m.def("optimized_grid", &optimized_grid, py::arg("p"), py::arg("budget"));
  m.def("uniform_grid", &uniform_grid, py::arg("p"), py::arg("epsilon"), py::arg("lipschitz"),
        py::arg("rho"));
  m.def("apply", [](const QuantizationOperator& q, const std::string& dist_json) {
    return wprop::apply(q, dist_from_str(dist_json));
  });
  m.def("theta_d", [](const QuantizationOperator& q, const std::string& dist_json, int rho) {
    return wprop::theta_d(q, dist_from_str(dist_json), rho);
  });
  m.def("reduce_discrete", [](const DiscreteDistribution& p, int budget, std::uint64_t seed) {
    const auto r = reduce_discrete(p, budget, seed);
    return std::make_pair(r.reduced, r.theta);
  });

  py::class_<FunctionModel>(m, "FunctionModel")
      .def_static("builtin", &builtin)
      .def_static("from_json",
                  [](const std::string& s) { return model_from_json(nlohmann::json::parse(s)); })
      .def("dim_in", &FunctionModel::dim_in)
      .def("dim_out", &FunctionModel::dim_out)
      .def("evaluate", &FunctionModel::evaluate)
      .def("global_lipschitz", &FunctionModel::global_lipschitz)
      .def("interval_bounds",
           [](const FunctionModel& f, const std::vector<std::pair<double, double>>& region) {
             std::vector<std::pair<double, double>> out;
             for (const auto& iv : f.interval_bounds(region_from_lists(region)))
               out.emplace_back(iv.lo, iv.hi);
             return out;
           })
      .def("to_json", [](const FunctionModel& f) { return to_json(f).dump(); });

  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("value", &BoundReport::value)
      .def_readonly("theta", &BoundReport::theta)
      .def_readonly("theta_d", &BoundReport::theta_d)
      .def_readonly("alpha_max", &BoundReport::alpha_max)
      .def_readonly("method", &BoundReport::method)
      .def("to_json", [](const BoundReport& r) { return to_json(r).dump(); });

  m.def("bound_thm4",
        [](const QuantizationOperator& q, const std::string& dist_json, double theta,
           const FunctionModel& f, int rho) {
          return bound_thm4(q, dist_from_str(dist_json), theta, f, rho);
        });
  m.def("bound_thm6", [](const QuantizationOperator& q, const std::string& dist_json,
                         const FunctionModel& f, int rho) {
    return bound_thm6(q, dist_from_str(dist_json), f, rho);
  });
  m.def("bound_lipschitz", &bound_lipschitz);
  m.def("induced_norm", &induced_norm, py::arg("A"), py::arg("rho"));

  py::class_<StochasticSystem>(m, "StochasticSystem")
      .def_static("builtin", &builtin_system)
      .def_static("from_json",
                  [](const std::string& s) { return system_from_json(nlohmann::json::parse(s)); })
      .def("to_json", [](const StochasticSystem& s) { return to_json(s).dump(); });

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("t", &StepRecord::t)
      .def_readonly("theta", &StepRecord::theta)
      .def_readonly("theta_d", &StepRecord::theta_d)
      .def_readonly("support", &StepRecord::support);

  m.def("propagate_horizon",
        [](const StochasticSystem& sys, int horizon, double epsilon, int k_state, int m_noise,
           std::uint64_t seed) {
          StepConfig cfg;
          cfg.k_state = k_state;
          cfg.m_noise = m_noise;
          cfg.seed = seed;
          const auto run = propagate_horizon(sys, horizon, epsilon, cfg);
          return std::make_tuple(run.trace.steps, run.states, run.epsilon);
        },
        py::arg("sys"), py::arg("horizon"), py::arg("epsilon") = 0.0, py::arg("k_state") = 100,
        py::arg("m_noise") = 25, py::arg("seed") = 2024);
  m.def("error_recursion",
        [](const std::vector<double>& alphas, const std::vector<double>& betas, double theta1,
           double eps, int rho) {
          const auto r = error_recursion(alphas, betas, theta1, eps, rho);
          return std::make_pair(r.theta, r.diverged);
        });
  m.def("fixed_point_bound", &fixed_point_bound);

  m.def("exact_wasserstein",
        [](const DiscreteDistribution& a, const DiscreteDistribution& b, int rho) {
          return exact_wasserstein(a, b, rho).first;
        });
  m.def("mc_wasserstein",
        [](const std::string& p_json, const std::string& q_json, int n, int repeats, int rho,
           std::uint64_t seed) {
          const auto e =
              mc_wasserstein(dist_from_str(p_json), dist_from_str(q_json), n, repeats, rho, seed);
          return std::make_pair(e.estimate, e.stderr_);
        });
  m.def("quadrature_moment",
        [](const std::string& dist_json, int axis, double lo, double hi, double c, double rho) {
          const auto d = std::get<ProductDistribution>(dist_from_str(dist_json));
          return quadrature_moment(d.component(axis), Interval(lo, hi), c, rho);
        });
}
