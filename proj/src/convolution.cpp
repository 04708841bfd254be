#include "boltzinv/convolution.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "boltzinv/errors.hpp"
#include "boltzinv/parallel.hpp"
#include "boltzinv/spaces.hpp"

namespace boltzinv {

namespace {

constexpr double kTailRatio = 1.05;
constexpr double kTailReach = 50.0;

bool has_tail(const RadialFunction& x) { return x.values[x.size() - 1] != 0.0 && std::isfinite(x.tail_exponent); }

void require_integrable(const RadialFunction& x, const char* name) {
  if (has_tail(x) && !(x.tail_exponent > 3.0)) {
    throw InputError(fmt::format("{} has tail r^-{}, convolution diverges", name, x.tail_exponent));
  }
}

// Outer quadrature points s_k with a_k = 2 pi omega_k s_k w(s_k); the caller
// divides by r.
struct OuterRule {
  std::vector<double> s;
  std::vector<double> a;
};

OuterRule outer_rule(const RadialFunction& w) {
  const auto& g = *w.grid;
  const auto& lw = g.line_weights();
  OuterRule rule;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (w.values[k] == 0.0) continue;
    rule.s.push_back(g[k]);
    rule.a.push_back(2.0 * std::numbers::pi * lw[k] * g[k] * w.values[k]);
  }
  if (has_tail(w)) {
    const double R = g.r_max();
    const double wl = w.values[w.size() - 1];
    const int M = static_cast<int>(std::ceil(std::log(kTailReach) / std::log(kTailRatio)));
    std::vector<double> s(M + 1);
    for (int m = 0; m <= M; ++m) s[m] = R * std::pow(kTailRatio, m);
    // Half panel [R, s_1] belongs to the node at R.
    rule.s.push_back(R);
    rule.a.push_back(2.0 * std::numbers::pi * 0.5 * (s[1] - R) * R * wl);
    for (int m = 1; m <= M; ++m) {
      const double om = (m < M) ? 0.5 * (s[m + 1] - s[m - 1]) : 0.5 * (s[m] - s[m - 1]);
      const double wm = wl * std::pow(R / s[m], w.tail_exponent);
      rule.s.push_back(s[m]);
      rule.a.push_back(2.0 * std::numbers::pi * om * s[m] * wm);
    }
  }
  return rule;
}

// Primitive Q(t) = int_0^t tau x(tau) d tau with tau x(tau) piecewise linear
// between nodes, x constant below the first node and a power tail beyond.
class Primitive {
 public:
  explicit Primitive(const RadialFunction& x) : t_(x.grid->nodes()), x_(x.values), p_(x.tail_exponent) {
    const Eigen::Index n = t_.size();
    Q_.resize(n);
    Q_[0] = 0.5 * x_[0] * t_[0] * t_[0];
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      Q_[j + 1] = Q_[j] + 0.5 * (t_[j + 1] - t_[j]) * (t_[j] * x_[j] + t_[j + 1] * x_[j + 1]);
    }
    tail_ = x_[n - 1] != 0.0 && std::isfinite(p_);
  }

  double operator()(double t) const {
    const Eigen::Index n = t_.size();
    if (t < t_[0]) return 0.5 * x_[0] * t * t;
    const double R = t_[n - 1];
    if (t >= R) {
      if (!tail_) return Q_[n - 1];
      return Q_[n - 1] + x_[n - 1] * std::pow(R, p_) * (std::pow(t, 2.0 - p_) - std::pow(R, 2.0 - p_)) / (2.0 - p_);
    }
    const Eigen::Index j = std::upper_bound(t_.data(), t_.data() + n, t) - t_.data() - 1;
    const double h = t_[j + 1] - t_[j];
    const double tau = t - t_[j];
    const double pj = t_[j] * x_[j];
    const double pk = t_[j + 1] * x_[j + 1];
    return Q_[j] + pj * tau + (pk - pj) * tau * tau / (2.0 * h);
  }

 private:
  const Eigen::ArrayXd& t_;
  const Eigen::ArrayXd& x_;
  double p_;
  bool tail_ = false;
  Eigen::ArrayXd Q_;
};

RadialFunction on_grid_of(const RadialFunction& w, const RadialFunction& x) {
  return w.compatible(x) ? x : regrid(x, w.grid);
}

}  // namespace

RadialFunction radial_convolve(const RadialFunction& w, const RadialFunction& x_in) {
  require_integrable(w, "first factor");
  require_integrable(x_in, "second factor");
  const RadialFunction x = on_grid_of(w, x_in);
  const OuterRule rule = outer_rule(w);
  const Primitive Q(x);
  const auto& r = w.grid->nodes();
  Eigen::ArrayXd out(r.size());
  parallel_for(r.size(), [&](Eigen::Index i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.s.size(); ++k) {
      acc += rule.a[k] * (Q(r[i] + rule.s[k]) - Q(std::abs(r[i] - rule.s[k])));
    }
    out[i] = acc / r[i];
  });
  return RadialFunction(w.grid, std::move(out), std::min(w.tail_exponent, x.tail_exponent));
}

double convolve_at_origin(const RadialFunction& w, const RadialFunction& x_in) {
  const RadialFunction x = on_grid_of(w, x_in);
  double v = (w.grid->volume_weights() * w.values * x.values).sum();
  if (has_tail(w) && has_tail(x)) {
    v += power_tail_mass(w.values[w.size() - 1] * x.values[x.size() - 1], w.grid->r_max(),
                         w.tail_exponent + x.tail_exponent) *
         (w.values[w.size() - 1] * x.values[x.size() - 1] < 0.0 ? -1.0 : 1.0);
  }
  return v;
}

ConvolutionOperator::ConvolutionOperator(const RadialFunction& w, double input_tail)
    : grid_(w.grid), input_tail_(input_tail), output_tail_(std::min(w.tail_exponent, input_tail)) {
  require_integrable(w, "kernel");
  if (!(input_tail > 3.0)) throw InputError("operator input tail must decay faster than r^-3");
  const auto& t = grid_->nodes();
  const Eigen::Index n = t.size();
  const double R = t[n - 1];
  const bool tail = std::isfinite(input_tail);
  const OuterRule rule = outer_rule(w);
  Eigen::ArrayXd h(n - 1);
  for (Eigen::Index j = 0; j + 1 < n; ++j) h[j] = t[j + 1] - t[j];
  K_.setZero(n, n);

  parallel_for(n, [&](Eigen::Index i) {
    // hist[m + 1] collects the weight of evaluation points whose panel index
    // is m (m = -1 below the first node, m = n - 1 in the tail).
    std::vector<double> hist(n + 1, 0.0);
    std::vector<double> row(n, 0.0);
    auto add = [&](double tt, double a) {
      if (tt < t[0]) {
        row[0] += a * 0.5 * tt * tt;
        hist[0] += a;
        return;
      }
      if (tt >= R) {
        hist[n] += a;
        if (tail) row[n - 1] += a * std::pow(R, input_tail) * (std::pow(tt, 2.0 - input_tail) - std::pow(R, 2.0 - input_tail)) / (2.0 - input_tail);
        return;
      }
      const Eigen::Index j = std::upper_bound(t.data(), t.data() + n, tt) - t.data() - 1;
      const double tau = tt - t[j];
      row[j] += a * t[j] * (tau - tau * tau / (2.0 * h[j]));
      row[j + 1] += a * t[j + 1] * tau * tau / (2.0 * h[j]);
      hist[j + 1] += a;
    };
    for (std::size_t k = 0; k < rule.s.size(); ++k) {
      add(t[i] + rule.s[k], rule.a[k]);
      add(std::abs(t[i] - rule.s[k]), -rule.a[k]);
    }
    // suffix[k] = sum_{m >= k} hist[m]; full panel j needs index >= j + 2.
    double suffix = 0.0;
    for (Eigen::Index k = n; k >= 1; --k) {
      suffix += hist[k];
      if (k == 1) {
        row[0] += suffix * 0.5 * t[0] * t[0];
      } else {
        const Eigen::Index j = k - 2;
        row[j] += suffix * 0.5 * h[j] * t[j];
        row[j + 1] += suffix * 0.5 * h[j] * t[j + 1];
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) K_(i, j) = row[j] / t[i];
  });
}

RadialFunction ConvolutionOperator::apply(const RadialFunction& x_in) const {
  RadialFunction x = x_in.grid->same_nodes(*grid_) ? x_in : regrid(x_in, grid_);
  if (has_tail(x) && x.tail_exponent != input_tail_) {
    throw InputError(fmt::format("operator built for input tail {} applied to tail {}", input_tail_, x.tail_exponent));
  }
  Eigen::VectorXd y = K_ * x.values.matrix();
  return RadialFunction(grid_, y.array(), output_tail_);
}

void AutoconvolutionLadder::extend() {
  W.push_back(op->apply(W.back()));
  l1_norms.push_back(W.back().l1_norm());
  rho_norms.push_back(norm_linf_rho(W.back(), alpha));
}

AutoconvolutionLadder build_ladder(const RadialFunction& w, int n_max, double alpha, double q_bar) {
  if (n_max < 1) throw InputError("ladder needs at least one level");
  AutoconvolutionLadder L;
  L.w = w;
  L.alpha = alpha;
  L.q = w.l1_norm();
  if (!(L.q < 1.0)) {
    throw PreconditionError(fmt::format("L1 mass q = {:.6g} of the weight function is not below one", L.q));
  }
  L.q_bar = q_bar > 0.0 ? q_bar : 0.5 * (1.0 + L.q);
  if (!(L.q_bar > L.q && L.q_bar < 1.0)) {
    throw PreconditionError(fmt::format("q_bar = {} must lie in (q, 1) = ({:.6g}, 1)", L.q_bar, L.q));
  }
  L.W.push_back(w);
  L.l1_norms.push_back(L.q);
  L.rho_norms.push_back(norm_linf_rho(w, alpha));
  L.op = std::make_shared<const ConvolutionOperator>(w, w.tail_exponent);
  while (static_cast<int>(L.W.size()) < n_max) L.extend();
  return L;
}

double decay_epsilon(double q, double q_bar, double alpha) { return 1.0 - std::pow(q / q_bar, 1.0 / alpha); }

SeriesResult series_W_sigma(AutoconvolutionLadder& L, double tol, int max_terms) {
  SeriesResult out;
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(L.w.size());
  const double stop = tol * (1.0 - L.q_bar);
  int n = 0;
  while (n < max_terms) {
    if (n >= static_cast<int>(L.W.size())) L.extend();
    sum += L.W[n].values;
    ++n;
    if (L.rho_norms[n - 1] < stop) {
      out.converged = true;
      break;
    }
  }
  out.terms = n;
  out.W_sigma = L.w.with_values(std::move(sum));
  // sum_{m > n} envelope_m <= eps^-alpha |w| / (1 - q/q_bar) * q_bar^n / (1 - q_bar)
  if (L.q == 0.0) {
    out.remainder_bound = 0.0;
  } else {
    const double eps = decay_epsilon(L.q, L.q_bar, L.alpha);
    out.remainder_bound = std::pow(eps, -L.alpha) * L.rho_norms[0] / (1.0 - L.q / L.q_bar) *
                          std::pow(L.q_bar, n) / (1.0 - L.q_bar);
  }
  return out;
}

RadialFunction resolvent_W_sigma(const RadialFunction& w) {
  const double q = w.l1_norm();
  if (!(q < 1.0)) {
    throw PreconditionError(fmt::format("L1 mass q = {:.6g} of the weight function is not below one", q));
  }
  const ConvolutionOperator op(w, w.tail_exponent);
  const Eigen::Index n = w.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - op.matrix();
  Eigen::VectorXd W = A.partialPivLu().solve(w.values.matrix());
  return w.with_values(W.array());
}

InequalityReport check_banach_algebra(const RadialFunction& w, const RadialFunction& w2, double alpha) {
  const double lhs = norm_linf_rho(radial_convolve(w, w2), alpha);
  const double rhs = embedding_constant_c_rho(alpha) * std::pow(2.0, alpha + 1.0) * norm_linf_rho(w, alpha) *
                     norm_linf_rho(w2, alpha);
  return InequalityReport::make("banach_algebra", lhs, rhs, lhs <= rhs * (1.0 + 1e-6),
                                fmt::format("alpha = {}", alpha));
}

GeometricDecayReport check_geometric_decay(const AutoconvolutionLadder& L) {
  GeometricDecayReport rep;
  const double ratio = L.q / L.q_bar;
  rep.epsilon = decay_epsilon(L.q, L.q_bar, L.alpha);
  const double lead = std::pow(rep.epsilon, -L.alpha) * L.rho_norms[0];
  rep.C_star = lead / ((1.0 - ratio) * L.q_bar);
  rep.pass = true;
  for (std::size_t k = 0; k < L.W.size(); ++k) {
    const int n = static_cast<int>(k) + 1;
    const double lhs = L.rho_norms[k];
    const double fine = lead * (1.0 - std::pow(ratio, n)) / (1.0 - ratio) * std::pow(L.q_bar, n - 1);
    const double coarse = rep.C_star * std::pow(L.q_bar, n);
    rep.levels.push_back(InequalityReport::make(fmt::format("geometric_decay_n{}", n), lhs, fine,
                                                lhs <= fine * (1.0 + 1e-6)));
    rep.coarse.push_back(InequalityReport::make(fmt::format("geometric_decay_coarse_n{}", n), lhs, coarse,
                                                lhs <= coarse * (1.0 + 1e-6)));
    rep.pass = rep.pass && rep.levels.back().pass && rep.coarse.back().pass;
  }
  return rep;
}

}  // namespace boltzinv
