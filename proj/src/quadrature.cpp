#include "boltzinv/quadrature.hpp"

#include <array>
#include <cmath>
#include <queue>

namespace boltzinv {

namespace {

constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double value;
  double error;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXk[j];
    const double pair = f(c - dx) + f(c + dx);
    kronrod += kWk[j] * pair;
    if (j % 2 == 1) gauss += kWg[j / 2] * pair;
  }
  return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

struct Interval {
  double a, b;
  Panel p;
  bool operator<(const Interval& o) const { return p.error < o.p.error; }
};

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol, double rel_tol, int max_intervals) {
  std::priority_queue<Interval> heap;
  heap.push({a, b, gk15(f, a, b)});
  QuadratureResult out;
  out.evaluations = 15;
  double total = heap.top().p.value;
  double error = heap.top().p.error;
  while (static_cast<int>(heap.size()) < max_intervals && error > std::max(abs_tol, rel_tol * std::abs(total))) {
    const Interval worst = heap.top();
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    const Interval left{worst.a, m, gk15(f, worst.a, m)};
    const Interval right{m, worst.b, gk15(f, m, worst.b)};
    out.evaluations += 30;
    total += left.p.value + right.p.value - worst.p.value;
    error += left.p.error + right.p.error - worst.p.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running totals.
  out.value = 0.0;
  out.error = 0.0;
  while (!heap.empty()) {
    out.value += heap.top().p.value;
    out.error += heap.top().p.error;
    heap.pop();
  }
  return out;
}

QuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                       double abs_tol, double rel_tol) {
  auto mapped = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t;
    return f(a + t / s) / (s * s);
  };
  return integrate(mapped, 0.0, 1.0, abs_tol, rel_tol);
}

}  // namespace boltzinv
