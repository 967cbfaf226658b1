#include "wprop/funcmodel.hpp"

#include <nlohmann/json.hpp>

namespace wprop {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sigmoid(double y) {
  if (y >= 0.0) return 1.0 / (1.0 + std::exp(-y));
  const double e = std::exp(y);
  return e / (1.0 + e);
}

double sigmoid_slope(double y) {
  if (std::isinf(y)) return 0.0;
  const double s = sigmoid(y);
  return s * (1.0 - s);
}

double clamp1(double y, double lo, double hi) { return std::min(hi, std::max(lo, y)); }

// Scalar primitive kinds routed through one set of range/slope/chord helpers.
struct ScalarPrim {
  NodeKind kind;
  double lo = 0.0, hi = 0.0;  // Clamp parameters

  double value(double y) const {
    switch (kind) {
      case NodeKind::Sigmoid: return std::isinf(y) ? (y > 0 ? 1.0 : 0.0) : sigmoid(y);
      case NodeKind::Sin: return std::sin(y);
      case NodeKind::Cos: return std::cos(y);
      case NodeKind::Clamp: return std::isinf(y) ? (y > 0 ? hi : lo) : clamp1(y, lo, hi);
      default: throw std::logic_error("not a scalar primitive");
    }
  }

  Interval value_range(const Interval& iv) const;
  Interval slope_range(const Interval& iv) const;
};

Interval sin_range(const Interval& iv) {
  if (!iv.bounded() || iv.width() >= 2.0 * kPi) return Interval(-1.0, 1.0);
  double lo = std::min(std::sin(iv.lo), std::sin(iv.hi));
  double hi = std::max(std::sin(iv.lo), std::sin(iv.hi));
  const double two_pi = 2.0 * kPi;
  // +1 attained at pi/2 + 2k*pi, -1 at -pi/2 + 2k*pi.
  if (std::floor((iv.hi - kPi / 2) / two_pi) >= std::ceil((iv.lo - kPi / 2) / two_pi)) hi = 1.0;
  if (std::floor((iv.hi + kPi / 2) / two_pi) >= std::ceil((iv.lo + kPi / 2) / two_pi)) lo = -1.0;
  return Interval(lo, hi);
}

Interval ScalarPrim::value_range(const Interval& iv) const {
  switch (kind) {
    case NodeKind::Sigmoid: return Interval(value(iv.lo), value(iv.hi));
    case NodeKind::Sin: return sin_range(iv);
    case NodeKind::Cos: return sin_range(Interval(iv.lo + kPi / 2, iv.hi + kPi / 2));
    case NodeKind::Clamp: return Interval(value(iv.lo), value(iv.hi));
    default: throw std::logic_error("not a scalar primitive");
  }
}

Interval ScalarPrim::slope_range(const Interval& iv) const {
  switch (kind) {
    case NodeKind::Sigmoid: {
      const double at_lo = sigmoid_slope(iv.lo), at_hi = sigmoid_slope(iv.hi);
      const double peak = iv.contains(0.0) ? 0.25 : std::max(at_lo, at_hi);
      return Interval(std::min(at_lo, at_hi), peak);
    }
    case NodeKind::Sin: return sin_range(Interval(iv.lo + kPi / 2, iv.hi + kPi / 2));  // cos
    case NodeKind::Cos: {
      const Interval s = sin_range(iv);  // slope = -sin
      return Interval(-s.hi, -s.lo);
    }
    case NodeKind::Clamp: {
      if (iv.lo >= lo && iv.hi <= hi) return Interval(1.0, 1.0);
      if (iv.hi <= lo || iv.lo >= hi) return Interval(0.0, 0.0);
      return Interval(0.0, 1.0);
    }
    default: throw std::logic_error("not a scalar primitive");
  }
}

double max_abs(const Interval& iv) { return std::max(std::abs(iv.lo), std::abs(iv.hi)); }

// Sound upper bound on sup_{y in iv, y != p} |phi(y) - phi(p)| / |y - p|.
// Pieces at geometrically growing distances from p; each piece is bounded by
// the cheaper of the mean-value (slope over hull) and travel (value plus
// slope within the piece, divided by the distance) routes.
double chord_sup(const ScalarPrim& prim, double p, const Interval& iv, int subdivisions) {
  if (iv.lo >= iv.hi) return 0.0;
  if (subdivisions <= 0) return max_abs(prim.slope_range(iv));
  const double fp = prim.value(p);
  double out = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    const bool right = (dir == 1);
    if (right ? (iv.hi <= p) : (iv.lo >= p)) continue;
    const double near = right ? std::max(iv.lo, p) : std::min(iv.hi, p);
    const double far = right ? iv.hi : iv.lo;
    const double d_near = std::abs(near - p);
    const double d_far = std::isinf(far) ? kInf : std::abs(far - p);
    if (d_far <= d_near) continue;

    std::vector<double> cuts;
    cuts.push_back(d_near);
    double t = std::max(d_near * 1.05, 1e-3);
    for (int j = 0; j < subdivisions && t < d_far; ++j) {
      cuts.push_back(t);
      t *= 1.2;
    }
    cuts.push_back(d_far);

    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      const double d1 = cuts[j], d2 = cuts[j + 1];
      if (d2 <= d1) continue;
      const double e = right ? p + d1 : p - d1;   // near edge of the piece
      const double y2 = right ? (std::isinf(d2) ? kInf : p + d2)
                              : (std::isinf(d2) ? -kInf : p - d2);
      const Interval piece = right ? Interval(e, std::isinf(d2) ? kInf : y2)
                                   : Interval(std::isinf(d2) ? -kInf : y2, e);
      const Interval hull = right ? Interval(p, piece.hi) : Interval(piece.lo, p);
      const double via_slope = max_abs(prim.slope_range(hull));
      double bound = via_slope;
      if (d1 > 0.0) {
        const double delta_e = std::abs(prim.value(e) - fp);
        const double s_piece = max_abs(prim.slope_range(piece));
        double travel = delta_e / d1;  // ratio at the near end
        if (std::isinf(d2)) travel = std::max(travel, s_piece);
        else travel = std::max(travel, (delta_e + s_piece * (d2 - d1)) / d2);
        bound = std::min(bound, travel);
      }
      out = std::max(out, bound);
    }
  }
  return out;
}

ScalarPrim scalar_prim(const Node& node, int coord) {
  ScalarPrim p{node.kind};
  if (node.kind == NodeKind::Clamp) {
    p.lo = node.lo[coord];
    p.hi = node.hi[coord];
  }
  return p;
}


// Interval dot product row * box, skipping zero coefficients so that
// 0 * inf contributes nothing.
Interval affine_row_range(const Mat& A, int row, const Vec& b, const Region& in) {
  double lo = b.size() ? b[row] : 0.0, hi = lo;
  for (int j = 0; j < A.cols(); ++j) {
    const double a = A(row, j);
    if (a == 0.0) continue;
    if (a > 0) { lo += a * in[j].lo; hi += a * in[j].hi; }
    else { lo += a * in[j].hi; hi += a * in[j].lo; }
  }
  return Interval(lo, hi);
}

}  // namespace

FunctionModel::FunctionModel(int dim_in, std::vector<Node> nodes)
    : dim_in_(dim_in), nodes_(std::move(nodes)) {
  require(dim_in_ >= 1, "FunctionModel: dim_in must be >= 1");
  require(!nodes_.empty() && nodes_[0].kind == NodeKind::Input,
          "FunctionModel: node 0 must be the input");
  nodes_[0].dim = dim_in_;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    for (int in : n.inputs)
      require(in >= 0 && in < static_cast<int>(i), "FunctionModel: nodes must be topological");
    auto in_dim = [&](int k) { return nodes_[n.inputs[k]].dim; };
    switch (n.kind) {
      case NodeKind::Affine:
        require(n.inputs.size() == 1 && n.A.cols() == in_dim(0), "Affine: shape mismatch");
        if (n.b.size() == 0) n.b = Vec::Zero(n.A.rows());
        require(n.b.size() == n.A.rows(), "Affine: offset shape mismatch");
        n.dim = static_cast<int>(n.A.rows());
        break;
      case NodeKind::Clamp:
        require(n.inputs.size() == 1 && n.lo.size() == in_dim(0) && n.hi.size() == in_dim(0),
                "Clamp: shape mismatch");
        for (int j = 0; j < n.lo.size(); ++j) require(n.lo[j] < n.hi[j], "Clamp: lo >= hi");
        n.dim = in_dim(0);
        break;
      case NodeKind::Sigmoid:
      case NodeKind::Sin:
      case NodeKind::Cos:
        require(n.inputs.size() == 1, "elementwise node takes one input");
        n.dim = in_dim(0);
        break;
      case NodeKind::Scale:
        require(n.inputs.size() == 1 && n.scale.size() == in_dim(0), "Scale: shape mismatch");
        n.dim = in_dim(0);
        break;
      case NodeKind::Select:
        require(n.inputs.size() == 1 && !n.select.empty(), "Select: bad indices");
        for (int idx : n.select) require(idx >= 0 && idx < in_dim(0), "Select: index out of range");
        n.dim = static_cast<int>(n.select.size());
        break;
      case NodeKind::Sum:
        require(n.inputs.size() >= 1, "Sum: needs inputs");
        n.dim = in_dim(0);
        for (std::size_t k = 1; k < n.inputs.size(); ++k)
          require(in_dim(static_cast<int>(k)) == n.dim, "Sum: branch dims differ");
        break;
      case NodeKind::Concat: {
        require(n.inputs.size() >= 1, "Concat: needs inputs");
        int total = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) total += in_dim(static_cast<int>(k));
        n.dim = total;
        break;
      }
      case NodeKind::Const:
        require(n.inputs.empty() && n.b.size() > 0, "Const: needs a value and no inputs");
        n.dim = static_cast<int>(n.b.size());
        break;
      case NodeKind::Input:
        throw std::invalid_argument("FunctionModel: only node 0 may be the input");
    }
  }
}

namespace {

std::vector<Vec> forward_values(const std::vector<Node>& nodes, const Vec& x) {
  std::vector<Vec> vals(nodes.size());
  vals[0] = x;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    switch (n.kind) {
      case NodeKind::Affine: vals[i] = n.A * vals[n.inputs[0]] + n.b; break;
      case NodeKind::Scale: vals[i] = n.scale.cwiseProduct(vals[n.inputs[0]]); break;
      case NodeKind::Clamp:
        vals[i] = vals[n.inputs[0]].cwiseMax(n.lo).cwiseMin(n.hi);
        break;
      case NodeKind::Sigmoid: {
        const Vec& v = vals[n.inputs[0]];
        vals[i] = Vec(v.size());
        for (int j = 0; j < v.size(); ++j) vals[i][j] = sigmoid(v[j]);
        break;
      }
      case NodeKind::Sin: vals[i] = vals[n.inputs[0]].array().sin(); break;
      case NodeKind::Cos: vals[i] = vals[n.inputs[0]].array().cos(); break;
      case NodeKind::Select: {
        const Vec& v = vals[n.inputs[0]];
        vals[i] = Vec(n.dim);
        for (int j = 0; j < n.dim; ++j) vals[i][j] = v[n.select[j]];
        break;
      }
      case NodeKind::Sum: {
        vals[i] = vals[n.inputs[0]];
        for (std::size_t k = 1; k < n.inputs.size(); ++k) vals[i] += vals[n.inputs[k]];
        break;
      }
      case NodeKind::Concat: {
        vals[i] = Vec(n.dim);
        int at = 0;
        for (int in : n.inputs) {
          vals[i].segment(at, vals[in].size()) = vals[in];
          at += static_cast<int>(vals[in].size());
        }
        break;
      }
      case NodeKind::Const: vals[i] = n.b; break;
      case NodeKind::Input: break;
    }
  }
  return vals;
}

}  // namespace

Vec FunctionModel::evaluate(const Vec& x) const {
  require(static_cast<int>(x.size()) == dim_in_, "evaluate: dimension mismatch");
  return forward_values(nodes_, x).back();
}

namespace {

std::vector<Region> forward_intervals(const std::vector<Node>& nodes, const Region& region) {
  std::vector<Region> iv(nodes.size());
  iv[0] = region;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    Region out(n.dim);
    switch (n.kind) {
      case NodeKind::Affine:
        for (int r = 0; r < n.dim; ++r) out[r] = affine_row_range(n.A, r, n.b, iv[n.inputs[0]]);
        break;
      case NodeKind::Scale:
        for (int r = 0; r < n.dim; ++r) {
          const Interval& x = iv[n.inputs[0]][r];
          const double s = n.scale[r];
          if (s == 0.0) out[r] = Interval(0.0, 0.0);
          else if (s > 0) out[r] = Interval(s * x.lo, s * x.hi);
          else out[r] = Interval(s * x.hi, s * x.lo);
        }
        break;
      case NodeKind::Clamp:
      case NodeKind::Sigmoid:
      case NodeKind::Sin:
      case NodeKind::Cos:
        for (int r = 0; r < n.dim; ++r)
          out[r] = scalar_prim(n, r).value_range(iv[n.inputs[0]][r]);
        break;
      case NodeKind::Select:
        for (int r = 0; r < n.dim; ++r) out[r] = iv[n.inputs[0]][n.select[r]];
        break;
      case NodeKind::Sum:
        for (int r = 0; r < n.dim; ++r) {
          double lo = 0.0, hi = 0.0;
          for (int in : n.inputs) { lo += iv[in][r].lo; hi += iv[in][r].hi; }
          out[r] = Interval(lo, hi);
        }
        break;
      case NodeKind::Concat: {
        int at = 0;
        for (int in : n.inputs)
          for (const auto& x : iv[in]) out[at++] = x;
        break;
      }
      case NodeKind::Const:
        for (int r = 0; r < n.dim; ++r) out[r] = Interval(n.b[r], n.b[r]);
        break;
      case NodeKind::Input: break;
    }
    iv[i] = std::move(out);
  }
  return iv;
}

// Either an exact signed slope matrix (f - f(c) = M (x - c)) or a
// componentwise domination |f(x) - f(c)| <= M |x - c|.
struct GainState {
  bool exact;
  Mat M;
};

GainState as_abs(const GainState& g) {
  if (!g.exact) return g;
  return {false, g.M.cwiseAbs()};
}

}  // namespace

double induced_norm(const Mat& A, int rho) {
  require(rho == 1 || rho == 2, "induced_norm: rho must be 1 or 2");
  if (A.size() == 0) return 0.0;
  if (!A.allFinite()) return kInf;
  if (rho == 1) {
    double best = 0.0;
    for (int j = 0; j < A.cols(); ++j) best = std::max(best, A.col(j).cwiseAbs().sum());
    return best;
  }
  // Power iteration on the Gram matrix of the thinner side. The iteration
  // approaches the top eigenvalue from below, so the result is nudged up by
  // one part in 1e9 to stay a sound upper bound.
  const bool wide = A.cols() > A.rows();
  const Mat B = wide ? Mat(A * A.transpose()) : Mat(A.transpose() * A);
  const int n = static_cast<int>(B.rows());
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * (i + 1) / n;
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Vec w = B * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    const double next = w.dot(B * w);
    if (std::abs(next - lambda) <= 1e-13 * std::max(1.0, std::abs(next)) && it > 4) {
      lambda = next;
      break;
    }
    lambda = next;
    v = std::move(w);
  }
  return std::sqrt(std::max(0.0, lambda)) * (1.0 + 1e-9);
}

Region FunctionModel::interval_bounds(const Region& region) const {
  require(static_cast<int>(region.size()) == dim_in_, "interval_bounds: dimension mismatch");
  return forward_intervals(nodes_, region).back();
}

namespace {

// Shared gain composition. In anchored mode the per-coordinate factors are
// chord bounds from the anchor's node value; otherwise slope-range maxima.
double gain_norm(const FunctionModel& f, const Region& region, const Vec* anchor, int rho,
                 int subdivisions) {
  const auto& nodes = f.nodes();
  const auto iv = forward_intervals(nodes, region);
  std::vector<Vec> at_c;
  if (anchor) at_c = forward_values(nodes, *anchor);

  std::vector<GainState> g(nodes.size());
  g[0] = {true, Mat::Identity(f.dim_in(), f.dim_in())};
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    switch (n.kind) {
      case NodeKind::Affine: {
        const GainState& in = g[n.inputs[0]];
        g[i] = in.exact ? GainState{true, n.A * in.M}
                        : GainState{false, n.A.cwiseAbs() * in.M};
        break;
      }
      case NodeKind::Scale: {
        const GainState& in = g[n.inputs[0]];
        g[i] = in.exact ? GainState{true, n.scale.asDiagonal() * in.M}
                        : GainState{false, n.scale.cwiseAbs().asDiagonal() * in.M};
        break;
      }
      case NodeKind::Select: {
        const GainState& in = g[n.inputs[0]];
        Mat M(n.dim, in.M.cols());
        for (int r = 0; r < n.dim; ++r) M.row(r) = in.M.row(n.select[r]);
        g[i] = {in.exact, std::move(M)};
        break;
      }
      case NodeKind::Const:
        g[i] = {true, Mat::Zero(n.dim, f.dim_in())};
        break;
      case NodeKind::Sum: {
        bool all_exact = true;
        for (int in : n.inputs) all_exact = all_exact && g[in].exact;
        Mat M = Mat::Zero(n.dim, f.dim_in());
        for (int in : n.inputs) M += all_exact ? g[in].M : as_abs(g[in]).M;
        g[i] = {all_exact, std::move(M)};
        break;
      }
      case NodeKind::Concat: {
        bool all_exact = true;
        for (int in : n.inputs) all_exact = all_exact && g[in].exact;
        Mat M(n.dim, f.dim_in());
        int at = 0;
        for (int in : n.inputs) {
          M.middleRows(at, g[in].M.rows()) = all_exact ? g[in].M : as_abs(g[in]).M;
          at += static_cast<int>(g[in].M.rows());
        }
        g[i] = {all_exact, std::move(M)};
        break;
      }
      case NodeKind::Clamp:
      case NodeKind::Sigmoid:
      case NodeKind::Sin:
      case NodeKind::Cos: {
        const GainState in = as_abs(g[n.inputs[0]]);
        Mat M = in.M;
        for (int r = 0; r < n.dim; ++r) {
          const ScalarPrim prim = scalar_prim(n, r);
          const Interval& range = iv[n.inputs[0]][r];
          const double s = anchor ? chord_sup(prim, at_c[n.inputs[0]][r], range, subdivisions)
                                  : max_abs(prim.slope_range(range));
          M.row(r) *= s;
        }
        g[i] = {false, std::move(M)};
        break;
      }
      case NodeKind::Input: break;
    }
  }
  return induced_norm(g.back().M, rho);
}

}  // namespace

double FunctionModel::global_lipschitz(int rho) const {
  Region full(dim_in_);
  return gain_norm(*this, full, nullptr, rho, 0);
}

double FunctionModel::anchored_gain(const Region& region, const Vec& c, int rho,
                                    int subdivisions) const {
  require(static_cast<int>(region.size()) == dim_in_, "anchored_gain: dimension mismatch");
  require(static_cast<int>(c.size()) == dim_in_, "anchored_gain: anchor dimension mismatch");
  if (subdivisions <= 0) return gain_norm(*this, region, nullptr, rho, 0);
  return gain_norm(*this, region, &c, rho, subdivisions);
}

namespace {

struct AffineBounds {
  Mat Al, Au;
  Vec bl, bu;
};

// Offsets making  s*y + t  a valid lower/upper relaxation of the scalar
// primitive on [l, u]: extremes of phi(y) - s*y over the interval.
std::pair<double, double> relaxation_offsets(const ScalarPrim& prim, double s,
                                             const Interval& iv) {
  std::vector<double> cand{iv.lo, iv.hi};
  switch (prim.kind) {
    case NodeKind::Sigmoid: {
      if (s > 0.0 && s < 0.25) {
        const double root = std::sqrt(1.0 - 4.0 * s);
        for (double sg : {0.5 * (1 - root), 0.5 * (1 + root)}) {
          if (sg > 0.0 && sg < 1.0) cand.push_back(std::log(sg / (1.0 - sg)));
        }
      }
      break;
    }
    case NodeKind::Sin:
    case NodeKind::Cos: {
      // phi'(y) = s: cos(y) = s  or  -sin(y) = s.
      const double base = (prim.kind == NodeKind::Sin) ? std::acos(clamp1(s, -1.0, 1.0))
                                                       : std::asin(clamp1(-s, -1.0, 1.0));
      const double two_pi = 2.0 * kPi;
      const long k0 = static_cast<long>(std::floor(iv.lo / two_pi)) - 1;
      const long k1 = static_cast<long>(std::ceil(iv.hi / two_pi)) + 1;
      for (long k = k0; k <= k1; ++k) {
        if (prim.kind == NodeKind::Sin) {
          cand.push_back(base + two_pi * k);
          cand.push_back(-base + two_pi * k);
        } else {
          cand.push_back(base + two_pi * k);
          cand.push_back(kPi - base + two_pi * k);
        }
      }
      break;
    }
    case NodeKind::Clamp:
      cand.push_back(prim.lo);
      cand.push_back(prim.hi);
      break;
    default: break;
  }
  double tl = kInf, tu = -kInf;
  for (double y : cand) {
    if (y < iv.lo || y > iv.hi || std::isinf(y)) continue;
    const double t = prim.value(y) - s * y;
    tl = std::min(tl, t);
    tu = std::max(tu, t);
  }
  return {tl, tu};
}

}  // namespace

LinearEnclosure linear_enclosure(const FunctionModel& f, const Region& region, const Vec& anchor) {
  require(static_cast<int>(region.size()) == f.dim_in(), "linear_enclosure: dimension mismatch");
  const auto& nodes = f.nodes();
  const auto iv = forward_intervals(nodes, region);
  std::vector<AffineBounds> ab(nodes.size());
  const int d = f.dim_in();
  ab[0] = {Mat::Identity(d, d), Mat::Identity(d, d), Vec::Zero(d), Vec::Zero(d)};

  auto affine_push = [&](const Mat& W, const Vec& b, const AffineBounds& in) {
    AffineBounds out;
    const Mat Wp = W.cwiseMax(0.0), Wm = W.cwiseMin(0.0);
    out.Al = Wp * in.Al + Wm * in.Au;
    out.Au = Wp * in.Au + Wm * in.Al;
    out.bl = Wp * in.bl + Wm * in.bu + b;
    out.bu = Wp * in.bu + Wm * in.bl + b;
    return out;
  };

  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    switch (n.kind) {
      case NodeKind::Affine: ab[i] = affine_push(n.A, n.b, ab[n.inputs[0]]); break;
      case NodeKind::Scale:
        ab[i] = affine_push(Mat(n.scale.asDiagonal()), Vec::Zero(n.dim), ab[n.inputs[0]]);
        break;
      case NodeKind::Select: {
        Mat W = Mat::Zero(n.dim, nodes[n.inputs[0]].dim);
        for (int r = 0; r < n.dim; ++r) W(r, n.select[r]) = 1.0;
        ab[i] = affine_push(W, Vec::Zero(n.dim), ab[n.inputs[0]]);
        break;
      }
      case NodeKind::Const:
        ab[i] = {Mat::Zero(n.dim, d), Mat::Zero(n.dim, d), n.b, n.b};
        break;
      case NodeKind::Sum: {
        AffineBounds out{Mat::Zero(n.dim, d), Mat::Zero(n.dim, d), Vec::Zero(n.dim),
                         Vec::Zero(n.dim)};
        for (int in : n.inputs) {
          out.Al += ab[in].Al;
          out.Au += ab[in].Au;
          out.bl += ab[in].bl;
          out.bu += ab[in].bu;
        }
        ab[i] = std::move(out);
        break;
      }
      case NodeKind::Concat: {
        AffineBounds out{Mat(n.dim, d), Mat(n.dim, d), Vec(n.dim), Vec(n.dim)};
        int at = 0;
        for (int in : n.inputs) {
          const int r = static_cast<int>(ab[in].Al.rows());
          out.Al.middleRows(at, r) = ab[in].Al;
          out.Au.middleRows(at, r) = ab[in].Au;
          out.bl.segment(at, r) = ab[in].bl;
          out.bu.segment(at, r) = ab[in].bu;
          at += r;
        }
        ab[i] = std::move(out);
        break;
      }
      case NodeKind::Clamp:
      case NodeKind::Sigmoid:
      case NodeKind::Sin:
      case NodeKind::Cos: {
        const AffineBounds& in = ab[n.inputs[0]];
        AffineBounds out{Mat(n.dim, d), Mat(n.dim, d), Vec(n.dim), Vec(n.dim)};
        for (int r = 0; r < n.dim; ++r) {
          const ScalarPrim prim = scalar_prim(n, r);
          const Interval& range = iv[n.inputs[0]][r];
          double s, tl, tu;
          if (range.bounded() && range.width() > 0.0 && range.width() < 64.0 * kPi) {
            s = (prim.value(range.hi) - prim.value(range.lo)) / range.width();
            std::tie(tl, tu) = relaxation_offsets(prim, s, range);
          } else if (range.width() == 0.0) {
            s = 0.0;
            tl = tu = prim.value(range.lo);
          } else {
            s = 0.0;
            const Interval vr = prim.value_range(range);
            tl = vr.lo;
            tu = vr.hi;
          }
          if (s >= 0.0) {
            out.Al.row(r) = s * in.Al.row(r);
            out.Au.row(r) = s * in.Au.row(r);
            out.bl[r] = s * in.bl[r] + tl;
            out.bu[r] = s * in.bu[r] + tu;
          } else {
            out.Al.row(r) = s * in.Au.row(r);
            out.Au.row(r) = s * in.Al.row(r);
            out.bl[r] = s * in.bu[r] + tl;
            out.bu[r] = s * in.bl[r] + tu;
          }
        }
        ab[i] = std::move(out);
        break;
      }
      case NodeKind::Input: break;
    }
  }

  const AffineBounds& top = ab.back();
  const Vec fc = f.evaluate(anchor);
  LinearEnclosure e;
  e.lower_mat = top.Al;
  e.upper_mat = top.Au;
  e.lower_off = top.Al * anchor + top.bl - fc;
  e.upper_off = top.Au * anchor + top.bu - fc;
  e.region = region;
  e.anchor = anchor;
  return e;
}

FunctionModel FunctionModel::compose(const FunctionModel& g, const FunctionModel& h) {
  require(g.dim_in() == h.dim_out(), "compose: dimension mismatch");
  std::vector<Node> nodes = h.nodes_;
  const int shift = static_cast<int>(nodes.size()) - 1;
  const int h_out = static_cast<int>(nodes.size()) - 1;
  for (std::size_t i = 1; i < g.nodes_.size(); ++i) {
    Node n = g.nodes_[i];
    for (int& in : n.inputs) in = (in == 0) ? h_out : in + shift;
    nodes.push_back(std::move(n));
  }
  return FunctionModel(h.dim_in(), std::move(nodes));
}

FunctionModel affine_model(const Mat& A, const Vec& b) {
  std::vector<Node> nodes(2);
  nodes[0].kind = NodeKind::Input;
  nodes[1].kind = NodeKind::Affine;
  nodes[1].inputs = {0};
  nodes[1].A = A;
  nodes[1].b = b;
  return FunctionModel(static_cast<int>(A.cols()), std::move(nodes));
}

FunctionModel identity_model(int d) { return affine_model(Mat::Identity(d, d), Vec::Zero(d)); }

FunctionModel clamped_diagonal(const std::vector<double>& coeffs, double bound) {
  const int d = static_cast<int>(coeffs.size());
  Mat A = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) A(i, i) = coeffs[i];
  std::vector<Node> nodes(3);
  nodes[0].kind = NodeKind::Input;
  nodes[1] = Node{NodeKind::Affine, {0}, 0, A, Vec::Zero(d), {}, {}, {}, {}};
  nodes[2].kind = NodeKind::Clamp;
  nodes[2].inputs = {1};
  nodes[2].lo = Vec::Constant(d, -bound);
  nodes[2].hi = Vec::Constant(d, bound);
  return FunctionModel(d, std::move(nodes));
}

FunctionModel builtin(const std::string& name) {
  if (name == "sigmoid") {
    std::vector<Node> nodes(2);
    nodes[0].kind = NodeKind::Input;
    nodes[1].kind = NodeKind::Sigmoid;
    nodes[1].inputs = {0};
    return FunctionModel(1, std::move(nodes));
  }
  if (name == "bounded_linear") {
    Mat A(2, 2);
    A << 0.0, 0.4, 0.3, 0.8;
    std::vector<Node> nodes(3);
    nodes[0].kind = NodeKind::Input;
    nodes[1] = Node{NodeKind::Affine, {0}, 0, A, Vec::Zero(2), {}, {}, {}, {}};
    nodes[2].kind = NodeKind::Clamp;
    nodes[2].inputs = {1};
    nodes[2].lo = Vec::Constant(2, -2.0);
    nodes[2].hi = Vec::Constant(2, 2.0);
    return FunctionModel(2, std::move(nodes));
  }
  if (name == "quadruple_tank") {
    Mat A(4, 4);
    A << 0.721, 0.0, 0.041, 0.0,
         0.0, 0.718, 0.0, 0.033,
         0.0, 0.0, 0.724, 0.0,
         0.0, 0.0, 0.0, 0.737;
    return affine_model(A, Vec::Zero(4));
  }
  if (name == "nn_layer") {
    Mat A = Mat::Zero(10, 10);
    const double diag[10] = {3.0, 1e-3, 5e-3, 7e-3, 3e-2, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3};
    for (int i = 0; i < 10; ++i) A(i, i) = diag[i];
    std::vector<Node> nodes(3);
    nodes[0].kind = NodeKind::Input;
    nodes[1] = Node{NodeKind::Affine, {0}, 0, A, Vec::Zero(10), {}, {}, {}, {}};
    nodes[2].kind = NodeKind::Sigmoid;
    nodes[2].inputs = {1};
    return FunctionModel(10, std::move(nodes));
  }
  if (name == "mountain_car") {
    Mat M(2, 2);
    M << 1.0, 0.0, 1.0, 1.0;
    Vec b(2);
    b << 1e-3, 0.0;
    Mat pick(1, 2);
    pick << 0.0, 3.0;
    Mat place(2, 1);
    place << -2.5e-3, 0.0;
    std::vector<Node> nodes(6);
    nodes[0].kind = NodeKind::Input;
    nodes[1] = Node{NodeKind::Affine, {0}, 0, M, b, {}, {}, {}, {}};
    nodes[2].kind = NodeKind::Clamp;
    nodes[2].inputs = {1};
    nodes[2].lo = Vec::Constant(2, -0.5);
    nodes[2].hi = Vec::Constant(2, 1.2);
    nodes[3] = Node{NodeKind::Affine, {0}, 0, pick, Vec::Zero(1), {}, {}, {}, {}};
    nodes[4].kind = NodeKind::Cos;
    nodes[4].inputs = {3};
    nodes[5] = Node{NodeKind::Affine, {4}, 0, place, Vec::Zero(2), {}, {}, {}, {}};
    Node sum;
    sum.kind = NodeKind::Sum;
    sum.inputs = {2, 5};
    nodes.push_back(std::move(sum));
    return FunctionModel(2, std::move(nodes));
  }
  if (name == "dubins_car") {
    Mat pick(1, 3);
    pick << 0.0, 0.0, 1.0;
    Mat place(3, 2);
    place << 1.5, 0.0, 0.0, 1.5, 0.0, 0.0;
    Vec off(3);
    off << 0.0, 0.0, 0.6;
    std::vector<Node> nodes(6);
    nodes[0].kind = NodeKind::Input;
    nodes[1] = Node{NodeKind::Affine, {0}, 0, pick, Vec::Zero(1), {}, {}, {}, {}};
    nodes[2].kind = NodeKind::Sin;
    nodes[2].inputs = {1};
    nodes[3].kind = NodeKind::Cos;
    nodes[3].inputs = {1};
    nodes[4].kind = NodeKind::Concat;
    nodes[4].inputs = {2, 3};
    nodes[5] = Node{NodeKind::Affine, {4}, 0, place, off, {}, {}, {}, {}};
    Node sum;
    sum.kind = NodeKind::Sum;
    sum.inputs = {0, 5};
    nodes.push_back(std::move(sum));
    return FunctionModel(3, std::move(nodes));
  }
  throw std::invalid_argument("builtin: unknown model '" + name + "'");
}

namespace {

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Input: return "input";
    case NodeKind::Affine: return "affine";
    case NodeKind::Clamp: return "clamp";
    case NodeKind::Sigmoid: return "sigmoid";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Scale: return "scale";
    case NodeKind::Select: return "select";
    case NodeKind::Sum: return "sum";
    case NodeKind::Concat: return "concat";
    case NodeKind::Const: return "const";
  }
  return "?";
}

std::vector<double> vec_to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec vec_from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<int>(v.size()));
}

Mat mat_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Mat A(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == rows[0].size(), "matrix rows of unequal length");
    for (std::size_t c = 0; c < rows[r].size(); ++c) A(r, c) = rows[r][c];
  }
  return A;
}

nlohmann::json mat_to_json(const Mat& A) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < A.rows(); ++r) {
    std::vector<double> row(A.cols());
    for (int c = 0; c < A.cols(); ++c) row[c] = A(r, c);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

nlohmann::json to_json(const FunctionModel& f) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : f.nodes()) {
    nlohmann::json jn{{"op", kind_name(n.kind)}};
    if (!n.inputs.empty()) jn["in"] = n.inputs;
    switch (n.kind) {
      case NodeKind::Affine:
        jn["A"] = mat_to_json(n.A);
        jn["b"] = vec_to_std(n.b);
        break;
      case NodeKind::Clamp:
        jn["lo"] = vec_to_std(n.lo);
        jn["hi"] = vec_to_std(n.hi);
        break;
      case NodeKind::Scale: jn["s"] = vec_to_std(n.scale); break;
      case NodeKind::Select: jn["indices"] = n.select; break;
      case NodeKind::Const: jn["value"] = vec_to_std(n.b); break;
      default: break;
    }
    nodes.push_back(std::move(jn));
  }
  return {{"dim_in", f.dim_in()}, {"nodes", nodes}};
}

FunctionModel model_from_json(const nlohmann::json& j) {
  if (j.contains("builtin")) return builtin(j.at("builtin").get<std::string>());
  const int dim_in = j.at("dim_in").get<int>();
  std::vector<Node> nodes;
  for (const auto& jn : j.at("nodes")) {
    Node n;
    const std::string op = jn.at("op").get<std::string>();
    if (jn.contains("in")) n.inputs = jn.at("in").get<std::vector<int>>();
    if (op == "input") n.kind = NodeKind::Input;
    else if (op == "affine") {
      n.kind = NodeKind::Affine;
      n.A = mat_from_json(jn.at("A"));
      if (jn.contains("b")) n.b = vec_from_std(jn.at("b").get<std::vector<double>>());
    } else if (op == "clamp") {
      n.kind = NodeKind::Clamp;
      n.lo = vec_from_std(jn.at("lo").get<std::vector<double>>());
      n.hi = vec_from_std(jn.at("hi").get<std::vector<double>>());
    } else if (op == "sigmoid") n.kind = NodeKind::Sigmoid;
    else if (op == "sin") n.kind = NodeKind::Sin;
    else if (op == "cos") n.kind = NodeKind::Cos;
    else if (op == "scale") {
      n.kind = NodeKind::Scale;
      n.scale = vec_from_std(jn.at("s").get<std::vector<double>>());
    } else if (op == "select") {
      n.kind = NodeKind::Select;
      n.select = jn.at("indices").get<std::vector<int>>();
    } else if (op == "sum") n.kind = NodeKind::Sum;
    else if (op == "concat") n.kind = NodeKind::Concat;
    else if (op == "const") {
      n.kind = NodeKind::Const;
      n.b = vec_from_std(jn.at("value").get<std::vector<double>>());
    } else throw std::invalid_argument("model_from_json: unknown op '" + op + "'");
    nodes.push_back(std::move(n));
  }
  return FunctionModel(dim_in, std::move(nodes));
}

}  // namespace wprop
