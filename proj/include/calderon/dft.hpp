#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace cald {

using cplx = std::complex<double>;

// Direct O(n^2) DFT. Grid sizes here are tiny (theta circles of <= 64 nodes,
// sinogram rows of a few hundred), so a plan-free exact-twiddle transform is
// both fast enough and bitwise deterministic.
class Dft {
public:
  explicit Dft(int n) : n_(n), w_(n * n) {
    const double base = -2.0 * std::numbers::pi / n;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) w_[k * n + l] = std::polar(1.0, base * ((k * l) % n));
  }

  int size() const { return n_; }

  // X_k = sum_l x_l e^{-2pi i k l / n}
  void forward(const cplx* x, cplx* X) const {
    for (int k = 0; k < n_; ++k) {
      cplx acc = 0.0;
      const cplx* wk = &w_[k * n_];
      for (int l = 0; l < n_; ++l) acc += wk[l] * x[l];
      X[k] = acc;
    }
  }

  // x_l = (1/n) sum_k X_k e^{+2pi i k l / n}
  void inverse(const cplx* X, cplx* x) const {
    for (int l = 0; l < n_; ++l) {
      cplx acc = 0.0;
      const cplx* wl = &w_[l * n_];
      for (int k = 0; k < n_; ++k) acc += std::conj(wl[k]) * X[k];
      x[l] = acc / double(n_);
    }
  }

  Eigen::VectorXcd forward(const Eigen::VectorXcd& x) const {
    Eigen::VectorXcd X(n_);
    forward(x.data(), X.data());
    return X;
  }
  Eigen::VectorXcd inverse(const Eigen::VectorXcd& X) const {
    Eigen::VectorXcd x(n_);
    inverse(X.data(), x.data());
    return x;
  }

private:
  int n_;
  std::vector<cplx> w_;
};

}  // namespace cald
