#pragma once

#include <cmath>
#include <vector>

#include "cilab/field.hpp"

namespace cilab {

enum class SampleMode { automatic, exact_sum, interp };

// Fields with at most this many nonzero retained modes are summed exactly.
constexpr Index kExactSumModeLimit = Index(64) * 64 * 64;

/// Off-grid evaluator: either the exact truncated Fourier sum over the
/// nonzero modes, or 4-point (order 4) Lagrange interpolation per axis on
/// a 2x zero-padded grid. Templated on the scalar so dual numbers pass
/// straight through.
class FieldSampler {
 public:
  FieldSampler() = default;
  FieldSampler(const SpectralField& f, SampleMode mode = SampleMode::automatic, bool with_gradient = false);

  SampleMode mode() const { return mode_; }
  int order() const { return mode_ == SampleMode::interp ? 4 : 0; }  // 0 = exact
  int components() const { return ncomp_; }
  Index modes() const { return Index(k_.size()); }

  // out[c] = f_c(x); grad (optional) [3*c + j] = d_j f_c(x).
  template <class S>
  void eval(const S* x, S* out, S* grad = nullptr) const {
    if (mode_ == SampleMode::interp)
      eval_interp(x, out, grad);
    else
      eval_sum(x, out, grad);
  }

 private:
  template <class S>
  void eval_sum(const S* x, S* out, S* grad) const {
    using std::cos;
    using std::sin;
    for (int c = 0; c < ncomp_; ++c) {
      out[c] = S(0.0);
      if (grad)
        for (int j = 0; j < 3; ++j) grad[3 * c + j] = S(0.0);
    }
    for (size_t m = 0; m < k_.size(); ++m) {
      const double* k = k_[m].data();
      const S th = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
      const S cs = cos(th), sn = sin(th);
      for (int c = 0; c < ncomp_; ++c) {
        const double re = re_[m * ncomp_ + c], im = im_[m * ncomp_ + c];
        out[c] += re * cs - im * sn;
        if (grad) {
          const S d = -re * sn - im * cs;
          for (int j = 0; j < 3; ++j) grad[3 * c + j] += k[j] * d;
        }
      }
    }
  }

  template <class S>
  static void weights(const S& t, S* w) {
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  }

  template <class S>
  void eval_interp(const S* x, S* out, S* grad) const {
    const double h = kTwoPi / nf_;
    int base[3];
    S w[3][4];
    for (int a = 0; a < 3; ++a) {
      const double xv = value_of(x[a]) / h;
      const double fl = std::floor(xv);
      base[a] = int(fl) - 1;
      weights(S(x[a] / h - fl), w[a]);
    }
    auto interp = [&](const Eigen::ArrayXd& v) {
      S acc(0.0);
      for (int i = 0; i < 4; ++i) {
        const Index i1 = wrap(base[0] + i);
        for (int j = 0; j < 4; ++j) {
          const Index i2 = wrap(base[1] + j);
          const S wij = w[0][i] * w[1][j];
          const Index row = (i1 * nf_ + i2) * nf_;
          S line(0.0);
          for (int l = 0; l < 4; ++l) line += w[2][l] * v[row + wrap(base[2] + l)];
          acc += wij * line;
        }
      }
      return acc;
    };
    for (int c = 0; c < ncomp_; ++c) {
      out[c] = interp(values_[c]);
      if (grad)
        for (int j = 0; j < 3; ++j) grad[3 * c + j] = interp(grads_[3 * c + j]);
    }
  }

  Index wrap(int i) const { return Index(((i % nf_) + nf_) % nf_); }
  static double value_of(double v) { return v; }
  template <class S>
  static double value_of(const S& v) { return v.value(); }

  SampleMode mode_ = SampleMode::exact_sum;
  int ncomp_ = 0;
  // exact sum data
  std::vector<Vec3> k_;
  std::vector<double> re_, im_;  // weight folded in
  // interpolation data
  int nf_ = 0;
  std::vector<Eigen::ArrayXd> values_, grads_;
};

/// Values of f at arbitrary points; one vector of components per point.
std::vector<Eigen::VectorXd> sample_offgrid(const SpectralField& f, const std::vector<Vec3>& points,
                                            SampleMode mode = SampleMode::automatic);

}  // namespace cilab
