#include "afem/basis.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "afem/util.hpp"

namespace afem {

namespace {

// Dense LU inversion with partial pivoting; the Vandermonde systems here are
// tiny (n <= 66 for degree 10) and well conditioned on the lattice.
std::vector<double> invert_dense(std::vector<double> a, int n) {
  std::vector<double> inv(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[static_cast<size_t>(r) * n + col]) > std::abs(a[static_cast<size_t>(piv) * n + col])) piv = r;
    if (std::abs(a[static_cast<size_t>(piv) * n + col]) < 1e-14)
      throw std::runtime_error("basis construction: singular Vandermonde matrix");
    if (piv != col)
      for (int c = 0; c < n; ++c) {
        std::swap(a[static_cast<size_t>(piv) * n + c], a[static_cast<size_t>(col) * n + c]);
        std::swap(inv[static_cast<size_t>(piv) * n + c], inv[static_cast<size_t>(col) * n + c]);
      }
    double d = a[static_cast<size_t>(col) * n + col];
    for (int c = 0; c < n; ++c) {
      a[static_cast<size_t>(col) * n + c] /= d;
      inv[static_cast<size_t>(col) * n + c] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[static_cast<size_t>(r) * n + col];
      if (f == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        a[static_cast<size_t>(r) * n + c] -= f * a[static_cast<size_t>(col) * n + c];
        inv[static_cast<size_t>(r) * n + c] -= f * inv[static_cast<size_t>(col) * n + c];
      }
    }
  }
  return inv;
}

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

ReferenceBasis::ReferenceBasis(int degree) : degree_(degree) {
  if (degree < 1 || degree > 10)
    throw std::invalid_argument(strf("polynomial degree %d unsupported (valid range 1..10)", degree));
  const int m = degree;
  n_ = (m + 1) * (m + 2) / 2;

  nodes_.push_back({0, 0});
  nodes_.push_back({1, 0});
  nodes_.push_back({0, 1});
  const Vec2 vtx[3] = {{0, 0}, {1, 0}, {0, 1}};
  for (int le = 0; le < 3; ++le) {
    Vec2 a = vtx[le], b = vtx[(le + 1) % 3];
    for (int t = 1; t < m; ++t) nodes_.push_back(a + (static_cast<double>(t) / m) * (b - a));
  }
  for (int p = 1; p < m; ++p)
    for (int q = 1; p + q <= m - 1; ++q)
      nodes_.push_back({static_cast<double>(p) / m, static_cast<double>(q) / m});
  if (static_cast<int>(nodes_.size()) != n_)
    throw std::logic_error("basis lattice node count mismatch");

  for (int d = 0; d <= m; ++d)
    for (int px = d; px >= 0; --px) {
      mono_px_.push_back(px);
      mono_py_.push_back(d - px);
    }

  std::vector<double> vand(static_cast<size_t>(n_) * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      vand[static_cast<size_t>(i) * n_ + j] = ipow(nodes_[static_cast<size_t>(i)].x, mono_px_[static_cast<size_t>(j)]) *
                                              ipow(nodes_[static_cast<size_t>(i)].y, mono_py_[static_cast<size_t>(j)]);
  // basis_i(x) = sum_j coef_[i,j] mono_j(x) with basis_i(node_k) = delta_ik,
  // i.e. V * coef^T = I, so coef = (V^{-1})^T.
  std::vector<double> vinv = invert_dense(std::move(vand), n_);
  coef_.resize(static_cast<size_t>(n_) * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) coef_[static_cast<size_t>(i) * n_ + j] = vinv[static_cast<size_t>(j) * n_ + i];
}

void ReferenceBasis::values(Vec2 p, double* out) const {
  std::vector<double> mono(static_cast<size_t>(n_));
  for (int j = 0; j < n_; ++j)
    mono[static_cast<size_t>(j)] = ipow(p.x, mono_px_[static_cast<size_t>(j)]) * ipow(p.y, mono_py_[static_cast<size_t>(j)]);
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    const double* c = &coef_[static_cast<size_t>(i) * n_];
    for (int j = 0; j < n_; ++j) s += c[j] * mono[static_cast<size_t>(j)];
    out[i] = s;
  }
}

void ReferenceBasis::gradients(Vec2 p, Vec2* out) const {
  std::vector<double> dx(static_cast<size_t>(n_)), dy(static_cast<size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    int px = mono_px_[static_cast<size_t>(j)], py = mono_py_[static_cast<size_t>(j)];
    dx[static_cast<size_t>(j)] = px == 0 ? 0.0 : px * ipow(p.x, px - 1) * ipow(p.y, py);
    dy[static_cast<size_t>(j)] = py == 0 ? 0.0 : py * ipow(p.x, px) * ipow(p.y, py - 1);
  }
  for (int i = 0; i < n_; ++i) {
    double sx = 0.0, sy = 0.0;
    const double* c = &coef_[static_cast<size_t>(i) * n_];
    for (int j = 0; j < n_; ++j) {
      sx += c[j] * dx[static_cast<size_t>(j)];
      sy += c[j] * dy[static_cast<size_t>(j)];
    }
    out[i] = {sx, sy};
  }
}

void ReferenceBasis::hessians(Vec2 p, double* out_xx, double* out_xy, double* out_yy) const {
  std::vector<double> dxx(static_cast<size_t>(n_)), dxy(static_cast<size_t>(n_)), dyy(static_cast<size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    int px = mono_px_[static_cast<size_t>(j)], py = mono_py_[static_cast<size_t>(j)];
    dxx[static_cast<size_t>(j)] = px < 2 ? 0.0 : px * (px - 1) * ipow(p.x, px - 2) * ipow(p.y, py);
    dxy[static_cast<size_t>(j)] = (px == 0 || py == 0) ? 0.0 : px * py * ipow(p.x, px - 1) * ipow(p.y, py - 1);
    dyy[static_cast<size_t>(j)] = py < 2 ? 0.0 : py * (py - 1) * ipow(p.x, px) * ipow(p.y, py - 2);
  }
  for (int i = 0; i < n_; ++i) {
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    const double* c = &coef_[static_cast<size_t>(i) * n_];
    for (int j = 0; j < n_; ++j) {
      sxx += c[j] * dxx[static_cast<size_t>(j)];
      sxy += c[j] * dxy[static_cast<size_t>(j)];
      syy += c[j] * dyy[static_cast<size_t>(j)];
    }
    out_xx[i] = sxx;
    out_xy[i] = sxy;
    out_yy[i] = syy;
  }
}

const ReferenceBasis& ReferenceBasis::get(int degree) {
  static std::mutex mu;
  static std::map<int, ReferenceBasis> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, ReferenceBasis(degree)).first;
  return it->second;
}

}  // namespace afem
