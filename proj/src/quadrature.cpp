#include "isohom/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

#include "isohom/errors.hpp"

namespace isohom {

namespace {

constexpr std::array<Real, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<Real, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
constexpr std::array<Real, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  Real a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<Real(Real)>& f, Real a, Real b) {
  const Real c = 0.5 * (a + b);
  const Real h = 0.5 * (b - a);
  const Real fc = f(c);
  Real kron = kKronrod[7] * fc;
  Real gauss = kGauss[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const Real dx = h * kNodes[i];
    const Real s = f(c - dx) + f(c + dx);
    kron += kKronrod[i] * s;
    if (i % 2 == 1) gauss += kGauss[i / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace

QuadratureResult integrate(const std::function<Real(Real)>& f, Real a, Real b, Real abs_tol,
                           Real rel_tol, const std::vector<Real>& breakpoints, int max_intervals) {
  if (!(b >= a)) throw ValidationError("integrate: empty or reversed interval");
  QuadratureResult out;
  if (b == a) return out;

  std::vector<Real> cuts{a};
  for (Real p : breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Segment> heap;
  Real total = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Segment s = gk15(f, cuts[i], cuts[i + 1]);
    out.evaluations += 15;
    total += s.value;
    error += s.error;
    heap.push(s);
  }
  while (error > std::max(abs_tol, rel_tol * std::abs(total)) &&
         static_cast<int>(heap.size()) < max_intervals) {
    Segment worst = heap.top();
    heap.pop();
    const Real mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);
      break;
    }
    Segment left = gk15(f, worst.a, mid);
    Segment right = gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error_estimate = error;
  return out;
}

}  // namespace isohom
