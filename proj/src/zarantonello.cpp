#include "afem/zarantonello.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "afem/rng.hpp"
#include "afem/util.hpp"

namespace afem {

std::vector<double> ZarantonelloStep::rhs(const std::vector<double>& u) const {
  if (!K || !B || !F) throw std::logic_error("ZarantonelloStep is not wired to a system");
  if (!(delta > 0.0)) throw std::invalid_argument("symmetrization damping delta must be positive");
  if (static_cast<int>(u.size()) != K->rows)
    throw std::invalid_argument(strf("step rhs: iterate has %zu entries, expected %d", u.size(), K->rows));
  std::vector<double> ku = matvec(*K, u);
  std::vector<double> bu = matvec(*B, u);
  std::vector<double> out(u.size());
  for (size_t i = 0; i < u.size(); ++i) out[i] = ku[i] + delta * ((*F)[i] - bu[i]);
  return out;
}

std::vector<double> exact_map(const DirectFactor& k_factor, const ZarantonelloStep& step,
                              const std::vector<double>& u) {
  return k_factor.solve(step.rhs(u));
}

DeltaEstimate estimate_delta(const CsrMatrix& k, const CsrMatrix& b, double delta, int samples,
                             uint64_t seed) {
  if (k.rows != b.rows || k.rows != k.cols || b.rows != b.cols)
    throw std::invalid_argument("estimate_delta: matrix size mismatch");
  if (k.rows == 0) throw std::invalid_argument("estimate_delta: empty system");
  if (samples < 10) throw std::invalid_argument("estimate_delta: needs at least 10 samples");

  Rng rng(seed);
  DeltaEstimate est;
  est.alpha = std::numeric_limits<double>::infinity();
  std::vector<double> v(static_cast<size_t>(k.rows)), w(static_cast<size_t>(k.rows));
  for (int s = 0; s < samples; ++s) {
    for (auto& x : v) x = rng.next_normal();
    for (auto& x : w) x = rng.next_normal();
    double kv = quadratic_form(k, v, v);
    double kw = quadratic_form(k, w, w);
    if (!(kv > 0.0) || !(kw > 0.0)) continue;
    est.alpha = std::min(est.alpha, quadratic_form(b, v, v) / kv);
    double nv = std::sqrt(kv), nw = std::sqrt(kw);
    est.L = std::max(est.L, std::abs(quadratic_form(b, v, w)) / (nv * nw));
    est.L = std::max(est.L, std::abs(quadratic_form(b, v, v)) / (nv * nv));
  }
  if (!std::isfinite(est.alpha)) throw std::runtime_error("estimate_delta: all sampled directions degenerate");
  est.delta_star = est.alpha / (est.L * est.L);
  est.q_bound = std::sqrt(std::max(0.0, 1.0 - delta * (2.0 * est.alpha - delta * est.L * est.L)));
  return est;
}

}  // namespace afem
