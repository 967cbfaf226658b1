#include "wprop/dynamics.hpp"

#include <chrono>
#include <map>
#include <nlohmann/json.hpp>

namespace wprop {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Joint model branch selecting a coordinate block [at, at+len).
FunctionModel block_select(int dim_in, int at, int len) {
  std::vector<Node> nodes(2);
  nodes[0].kind = NodeKind::Input;
  nodes[1].kind = NodeKind::Select;
  nodes[1].inputs = {0};
  for (int i = 0; i < len; ++i) nodes[1].select.push_back(at + i);
  return FunctionModel(dim_in, std::move(nodes));
}

// f(x, w) = g(x) + s(w) assembled over the joint input space.
FunctionModel separable_joint(const FunctionModel& g, const FunctionModel& s) {
  const int d = g.dim_in(), q = s.dim_in();
  FunctionModel gx = FunctionModel::compose(g, block_select(d + q, 0, d));
  FunctionModel sw = FunctionModel::compose(s, block_select(d + q, d, q));
  // Merge the two DAGs under one Sum node.
  std::vector<Node> nodes = gx.nodes();
  const int g_out = static_cast<int>(nodes.size()) - 1;
  const int shift = static_cast<int>(nodes.size()) - 1;
  for (std::size_t i = 1; i < sw.nodes().size(); ++i) {
    Node n = sw.nodes()[i];
    for (int& in : n.inputs) in = (in == 0) ? 0 : in + shift;
    nodes.push_back(std::move(n));
  }
  Node sum;
  sum.kind = NodeKind::Sum;
  sum.inputs = {g_out, static_cast<int>(nodes.size()) - 1};
  nodes.push_back(std::move(sum));
  return FunctionModel(d + q, std::move(nodes));
}

ProductDistribution joint_product(const ProductDistribution& a, const ProductDistribution& b) {
  std::vector<Component> comps = a.components();
  for (const auto& c : b.components()) comps.push_back(c);
  return ProductDistribution(std::move(comps));
}

ProductDistribution diag_gaussian(const std::vector<double>& means,
                                  const std::vector<double>& variances) {
  std::vector<Component> comps;
  for (std::size_t i = 0; i < means.size(); ++i)
    comps.push_back(GaussianComponent{means[i], std::sqrt(variances[i])});
  return ProductDistribution(std::move(comps));
}

}  // namespace

NoiseCache build_noise_cache(const StochasticSystem& sys, int m_noise, int rho) {
  NoiseCache cache;
  cache.quantizer = optimized_grid(sys.noise, m_noise);
  cache.atoms = apply(cache.quantizer, sys.noise);
  cache.theta_omega = theta_d(cache.quantizer, sys.noise, rho);
  if (sys.separable) {
    cache.term_bound = bound_thm6(cache.quantizer, sys.noise, sys.separable->noise_map, rho).value;
  }
  return cache;
}

namespace {

// Exact pushforward of the quantized joint: one atom per (state, noise) pair.
DiscreteDistribution push_joint(const FunctionModel& f, const DiscreteDistribution& state,
                                const DiscreteDistribution& noise) {
  const int d = state.dimension(), q = noise.dimension();
  std::vector<Vec> locs;
  std::vector<double> ws;
  locs.reserve(static_cast<std::size_t>(state.size()) * noise.size());
  Vec z(d + q);
  for (int i = 0; i < state.size(); ++i) {
    z.head(d) = state.location(i);
    for (int j = 0; j < noise.size(); ++j) {
      z.tail(q) = noise.location(j);
      locs.push_back(f.evaluate(z));
      ws.push_back(state.weight(i) * noise.weight(j));
    }
  }
  return DiscreteDistribution(std::move(locs), std::move(ws)).merged();
}

double compose_theta_d(double theta_state, double theta_noise, int rho) {
  if (rho == 2) return std::sqrt(theta_state * theta_state + theta_noise * theta_noise);
  return theta_state + theta_noise;
}

}  // namespace

StepResult propagate_step(const StochasticSystem& sys, const DiscreteDistribution& state_hat,
                          double theta_t, const StepConfig& cfg, const NoiseCache& noise) {
  require(cfg.k_state >= 1 && cfg.m_noise >= 1, "propagate_step: budgets must be >= 1");
  require(theta_t >= 0.0, "propagate_step: theta_t must be >= 0");
  const double t0 = now_seconds();
  const int d = sys.state_dim(), q = sys.noise_dim();
  require(state_hat.dimension() == d, "propagate_step: state dimension mismatch");

  const auto reduced = reduce_discrete(state_hat, cfg.k_state, cfg.seed, cfg.restarts);
  const double theta_joint = compose_theta_d(reduced.theta, noise.theta_omega, cfg.rho);

  StepResult out;
  out.theta_reduce = reduced.theta;
  out.theta_d = theta_joint;
  if (sys.separable) {
    // State part: ambiguity bound on the state map around the reduced
    // centroids; noise part: cached one-off term.
    out.report = algorithm1_at(reduced.reduced.locations(), reduced.reduced.weights(), theta_t,
                               reduced.theta, sys.separable->state_map, cfg.rho, Region(d));
    out.theta_next = separable_step_bound(sys, out.report.value, noise.term_bound);
  } else {
    std::vector<Vec> joint_locs;
    std::vector<double> joint_pis;
    Vec z(d + q);
    for (int i = 0; i < reduced.reduced.size(); ++i) {
      z.head(d) = reduced.reduced.location(i);
      for (int j = 0; j < noise.atoms.size(); ++j) {
        z.tail(q) = noise.atoms.location(j);
        joint_locs.push_back(z);
        joint_pis.push_back(reduced.reduced.weight(i) * noise.atoms.weight(j));
      }
    }
    out.report = algorithm1_at(joint_locs, joint_pis, theta_t, theta_joint, sys.dynamics,
                               cfg.rho, Region(d + q));
    out.theta_next = out.report.value;
  }
  out.next_state = push_joint(sys.dynamics, reduced.reduced, noise.atoms);
  out.seconds = now_seconds() - t0;
  return out;
}

StepResult propagate_step_initial(const StochasticSystem& sys,
                                  const ProductDistribution& initial, const StepConfig& cfg,
                                  const NoiseCache& noise) {
  const double t0 = now_seconds();
  StepResult out;
  if (sys.separable) {
    const auto grid = optimized_grid(initial, cfg.k_state);
    const auto state_atoms = apply(grid, initial);
    out.theta_reduce = theta_d(grid, initial, cfg.rho);
    out.theta_d = compose_theta_d(out.theta_reduce, noise.theta_omega, cfg.rho);
    if (cfg.theta0 > 0.0) {
      out.report = algorithm1(grid, initial, cfg.theta0, sys.separable->state_map, cfg.rho);
    } else {
      out.report = bound_thm6(grid, initial, sys.separable->state_map, cfg.rho);
    }
    out.theta_next = separable_step_bound(sys, out.report.value, noise.term_bound);
    out.next_state = push_joint(sys.dynamics, state_atoms, noise.atoms);
  } else {
    const auto joint = joint_product(initial, sys.noise);
    const auto grid = optimized_grid(joint, static_cast<long>(cfg.k_state) * cfg.m_noise);
    const auto joint_atoms = apply(grid, joint);
    out.theta_d = theta_d(grid, joint, cfg.rho);
    out.theta_reduce = out.theta_d;
    if (cfg.theta0 > 0.0) {
      out.report = algorithm1(grid, joint, cfg.theta0, sys.dynamics, cfg.rho);
    } else {
      out.report = bound_thm6(grid, joint, sys.dynamics, cfg.rho);
    }
    out.theta_next = out.report.value;
    // Push the joint atoms through the dynamics directly.
    std::vector<Vec> locs;
    std::vector<double> ws;
    for (int i = 0; i < joint_atoms.size(); ++i) {
      locs.push_back(sys.dynamics.evaluate(joint_atoms.location(i)));
      ws.push_back(joint_atoms.weight(i));
    }
    out.next_state = DiscreteDistribution(std::move(locs), std::move(ws)).merged();
  }
  out.seconds = now_seconds() - t0;
  return out;
}

PropagationResult propagate_horizon(const StochasticSystem& sys, int horizon, double epsilon,
                                    const StepConfig& cfg) {
  require(horizon >= 1, "propagate_horizon: horizon must be >= 1");
  PropagationResult result;
  double eps = epsilon;
  double theta = cfg.theta0;
  DiscreteDistribution state;
  bool state_discrete = std::holds_alternative<DiscreteDistribution>(sys.initial);
  if (state_discrete) state = std::get<DiscreteDistribution>(sys.initial);

  std::map<int, NoiseCache> noise_by_mult;  // the noise law is time-invariant
  for (int t = 0; t < horizon; ++t) {
    StepResult step;
    bool accepted = false;
    for (int mult = 1; mult <= cfg.doubling_cap; mult *= 2) {
      StepConfig local = cfg;
      local.k_state = cfg.k_state * mult;
      local.m_noise = cfg.m_noise * mult;
      local.seed = cfg.seed + 0x10001ULL * t;
      auto it = noise_by_mult.find(mult);
      if (it == noise_by_mult.end())
        it = noise_by_mult.emplace(mult, build_noise_cache(sys, local.m_noise, local.rho)).first;
      const NoiseCache& noise = it->second;
      if (t == 0 && !state_discrete) {
        step = propagate_step_initial(sys, std::get<ProductDistribution>(sys.initial), local, noise);
      } else {
        step = propagate_step(sys, state, theta, local, noise);
      }
      if (eps <= 0.0 || step.theta_d <= eps) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw std::runtime_error("propagate_horizon: budget cap reached before theta_d <= epsilon (t=" +
                               std::to_string(t) + ")");
    if (eps <= 0.0) eps = step.theta_d;  // adopt the first step's achieved error

    theta = step.theta_next;
    state = step.next_state;
    state_discrete = true;
    StepRecord rec;
    rec.t = t + 1;
    rec.theta = theta;
    rec.theta_d = step.theta_d;
    rec.support = state.size();
    rec.seconds = step.seconds;
    result.trace.steps.push_back(rec);
    result.states.push_back(state);
    if (!std::isfinite(theta) || theta > 1e30) {
      result.trace.diverged = true;
      break;
    }
  }
  result.epsilon = eps;
  return result;
}

RecursionResult error_recursion(const std::vector<double>& alpha_max_seq,
                                const std::vector<double>& beta_terms_seq, double theta_1,
                                double epsilon, int rho) {
  require(alpha_max_seq.size() == beta_terms_seq.size(),
          "error_recursion: sequence lengths differ");
  RecursionResult r;
  r.theta.push_back(theta_1);
  double theta = theta_1;
  for (std::size_t t = 0; t < alpha_max_seq.size(); ++t) {
    const double radius = theta + epsilon;
    theta = std::pow(alpha_max_seq[t] * std::pow(radius, rho) + beta_terms_seq[t], 1.0 / rho);
    if (!std::isfinite(theta) || theta > 1e30) {
      r.diverged = true;
      theta = std::min(theta, kInf);
    }
    r.theta.push_back(theta);
  }
  return r;
}

double fixed_point_bound(double lipschitz, double epsilon) {
  require(lipschitz >= 0.0 && lipschitz < 1.0, "fixed_point_bound: requires 0 <= L < 1");
  return lipschitz / (1.0 - lipschitz) * epsilon;
}

double separable_step_bound(const StochasticSystem& sys, double state_part, double noise_part) {
  require(sys.separable.has_value(), "separable_step_bound: system has no separable form");
  return state_part + noise_part;
}

double ambiguous_start(double theta_0, double theta_omega) {
  require(theta_0 >= 0.0 && theta_omega >= 0.0, "ambiguous_start: radii must be >= 0");
  return theta_0 + theta_omega;
}

std::vector<Vec> simulate_true_state(const StochasticSystem& sys, int t, int n,
                                     std::uint64_t seed) {
  require(t >= 0 && n >= 1, "simulate_true_state: bad arguments");
  const int d = sys.state_dim(), q = sys.noise_dim();
  auto xs = sample(sys.initial, n, seed * 0x9e3779b97f4a7c15ULL + 17);
  Vec z(d + q);
  for (int step = 0; step < t; ++step) {
    const auto ws = sys.noise.sample(n, seed + 0x51ed2701ULL * (step + 1));
    for (int i = 0; i < n; ++i) {
      z.head(d) = xs[i];
      z.tail(q) = ws[i];
      xs[i] = sys.dynamics.evaluate(z);
    }
  }
  return xs;
}

StochasticSystem builtin_system(const std::string& name) {
  StochasticSystem sys;
  if (name == "mountain_car") {
    FunctionModel g = builtin("mountain_car");
    FunctionModel s = identity_model(2);
    sys.dynamics = separable_joint(g, s);
    sys.separable = SeparableForm{std::move(g), std::move(s)};
    sys.noise = diag_gaussian({0.0, 0.0}, {1e-2, 1e-2});
    sys.initial = diag_gaussian({0.3, 0.2}, {1e-1, 1e-3});
    return sys;
  }
  if (name == "dubins_car") {
    FunctionModel g = builtin("dubins_car");
    FunctionModel s = identity_model(3);
    sys.dynamics = separable_joint(g, s);
    sys.separable = SeparableForm{std::move(g), std::move(s)};
    sys.noise = diag_gaussian({0.0, 0.0, 0.0}, {1e-2, 1e-2, 1e-2});
    sys.initial = diag_gaussian({0.3, 0.2, 0.01}, {1e-1, 1e-2, 1e-3});
    return sys;
  }
  if (name == "quadruple_tank") {
    FunctionModel g = builtin("quadruple_tank");
    FunctionModel s = identity_model(4);
    sys.dynamics = separable_joint(g, s);
    sys.separable = SeparableForm{std::move(g), std::move(s)};
    sys.noise = diag_gaussian({0.0, 0.0, 0.0, 0.0}, {1e-2, 1e-2, 1e-2, 1e-2});
    sys.initial = diag_gaussian({1.5, 2.5, -0.5, -1.0}, {0.001, 0.02, 0.4, 0.01});
    return sys;
  }
  if (name == "nn3d") {
    Mat AB = Mat::Zero(3, 6);
    const double a[3] = {3.0, 1.5, 1.2}, b[3] = {0.5, 1.0, 0.9};
    for (int i = 0; i < 3; ++i) {
      AB(i, i) = a[i];
      AB(i, 3 + i) = b[i];
    }
    std::vector<Node> nodes(3);
    nodes[0].kind = NodeKind::Input;
    nodes[1] = Node{NodeKind::Affine, {0}, 0, AB, Vec::Zero(3), {}, {}, {}, {}};
    nodes[2].kind = NodeKind::Sigmoid;
    nodes[2].inputs = {1};
    sys.dynamics = FunctionModel(6, std::move(nodes));
    sys.noise = diag_gaussian({0.0, 0.0, 0.0}, {1e-1, 1e-1, 1e-2});
    sys.initial = diag_gaussian({1.5, -1.2, 2.4}, {1e-1, 0.5, 0.2});
    return sys;
  }
  throw std::invalid_argument("builtin_system: unknown system '" + name + "'");
}

StochasticSystem system_from_json(const nlohmann::json& j) {
  if (j.contains("builtin")) return builtin_system(j.at("builtin").get<std::string>());
  StochasticSystem sys;
  sys.dynamics = model_from_json(j.at("dynamics"));
  sys.noise = std::get<ProductDistribution>(distribution_from_json(j.at("noise")));
  sys.initial = distribution_from_json(j.at("initial"));
  if (j.contains("separable")) {
    SeparableForm form;
    form.state_map = model_from_json(j.at("separable").at("state_map"));
    form.noise_map = model_from_json(j.at("separable").at("noise_map"));
    sys.separable = std::move(form);
  }
  require(sys.dynamics.dim_in() == sys.state_dim() + sys.noise_dim(),
          "system_from_json: dynamics input dim != state + noise dims");
  return sys;
}

nlohmann::json to_json(const StochasticSystem& sys) {
  nlohmann::json j{{"dynamics", to_json(sys.dynamics)},
                   {"noise", to_json(sys.noise)},
                   {"initial", distribution_to_json(sys.initial)}};
  if (sys.separable) {
    j["separable"] = {{"state_map", to_json(sys.separable->state_map)},
                      {"noise_map", to_json(sys.separable->noise_map)}};
  }
  return j;
}

}  // namespace wprop
