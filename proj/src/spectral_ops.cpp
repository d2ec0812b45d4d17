#include "cilab/spectral_ops.hpp"

#include <cmath>
#include <limits>

#include "cilab/mollifier.hpp"

namespace cilab {
namespace {

const cplx I(0.0, 1.0);

void require_rank(const SpectralField& f, Rank r, const char* op) {
  if (f.rank() != r) throw RankError(std::string(op) + ": expected " + rank_name(r) + ", got " + rank_name(f.rank()));
}

}  // namespace

SpectralField fractional_laplacian(const SpectralField& f, double alpha) {
  // alpha = 1 is admitted so the symbol can be checked against -div grad.
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("fractional_laplacian: alpha must lie in (0,1]");
  SpectralField out = f;
  auto& c = out.coeffs();
  f.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const double k2n = double(k1) * k1 + double(k2) * k2 + double(k3) * k3;
    c.row(idx) *= k2n == 0.0 ? 0.0 : std::pow(k2n, alpha);
  });
  return out;
}

SpectralField leray_project(const SpectralField& v) {
  require_rank(v, Rank::vector3, "leray_project");
  SpectralField out = v;
  auto& c = out.coeffs();
  v.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const double k[3] = {double(k1), double(k2), double(k3)};
    const double k2n = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2n == 0.0) {
      c.row(idx).setZero();
      return;
    }
    const cplx kv = (k[0] * c(idx, 0) + k[1] * c(idx, 1) + k[2] * c(idx, 2)) / k2n;
    for (int j = 0; j < 3; ++j) c(idx, j) -= k[j] * kv;
  });
  return out;
}

SpectralField truncate_modes(const SpectralField& f, double K) {
  SpectralField out = f;
  auto& c = out.coeffs();
  const double K2 = K * K;
  f.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
    if (double(k1) * k1 + double(k2) * k2 + double(k3) * k3 > K2) c.row(idx).setZero();
  });
  return out;
}

SpectralField mollify(const SpectralField& f, double ell) {
  if (!(ell > 0.0)) throw ParameterError("mollify: ell must be positive");
  if (ell > 1.0) throw ParameterError("mollify: ell must not exceed 1");
  SpectralField out = f;
  auto& c = out.coeffs();
  const int K = f.grid().kmax();
  // psihat depends on |k|^2 only; fill the table lazily for occupied shells.
  std::vector<double> table(size_t(3) * K * K + 1, std::numeric_limits<double>::quiet_NaN());
  f.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
    if ((c.row(idx) == cplx(0.0)).all()) return;
    const int s = k1 * k1 + k2 * k2 + k3 * k3;
    if (std::isnan(table[s])) table[s] = s == 0 ? 1.0 : mollifier_transform(ell * std::sqrt(double(s)));
    c.row(idx) *= table[s];
  });
  return out;
}

SpectralField partial(const SpectralField& f, int j) {
  SpectralField out = f;
  auto& c = out.coeffs();
  f.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const int k[3] = {k1, k2, k3};
    c.row(idx) *= I * double(k[j]);
  });
  return out;
}

SpectralField differentiate(const SpectralField& f, DiffKind kind) {
  const auto& g = f.grid();
  const auto& c = f.coeffs();
  switch (kind) {
    case DiffKind::grad:
    case DiffKind::full_jacobian: {
      if (f.rank() == Rank::scalar && kind == DiffKind::grad) {
        SpectralField out(g, Rank::vector3);
        g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
          const int k[3] = {k1, k2, k3};
          for (int j = 0; j < 3; ++j) out.coeffs()(idx, j) = I * double(k[j]) * c(idx, 0);
        });
        return out;
      }
      require_rank(f, Rank::vector3, "differentiate(grad/full_jacobian)");
      SpectralField out(g, Rank::matrix3);
      g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
        const int k[3] = {k1, k2, k3};
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) out.coeffs()(idx, 3 * i + j) = I * double(k[j]) * c(idx, i);
      });
      return out;
    }
    case DiffKind::div: {
      if (f.rank() == Rank::vector3) {
        SpectralField out(g, Rank::scalar);
        g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
          out.coeffs()(idx, 0) = I * (double(k1) * c(idx, 0) + double(k2) * c(idx, 1) + double(k3) * c(idx, 2));
        });
        return out;
      }
      if (f.rank() != Rank::symtensor3 && f.rank() != Rank::matrix3)
        throw RankError(std::string("differentiate(div): unsupported rank ") + rank_name(f.rank()));
      const bool sym = f.rank() == Rank::symtensor3;
      SpectralField out(g, Rank::vector3);
      g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
        const int k[3] = {k1, k2, k3};
        for (int i = 0; i < 3; ++i) {
          cplx s = 0.0;
          for (int j = 0; j < 3; ++j) s += double(k[j]) * c(idx, sym ? sym_index(i, j) : 3 * i + j);
          out.coeffs()(idx, i) = I * s;
        }
      });
      return out;
    }
    case DiffKind::curl: {
      require_rank(f, Rank::vector3, "differentiate(curl)");
      SpectralField out(g, Rank::vector3);
      g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
        const double k[3] = {double(k1), double(k2), double(k3)};
        out.coeffs()(idx, 0) = I * (k[1] * c(idx, 2) - k[2] * c(idx, 1));
        out.coeffs()(idx, 1) = I * (k[2] * c(idx, 0) - k[0] * c(idx, 2));
        out.coeffs()(idx, 2) = I * (k[0] * c(idx, 1) - k[1] * c(idx, 0));
      });
      return out;
    }
  }
  throw ParameterError("differentiate: unknown kind");
}

double l2_inner(const SpectralField& f, const SpectralField& g) {
  if (f.grid() != g.grid() || f.rank() != g.rank()) throw RankError("l2_inner: mismatch");
  double s = 0.0;
  const int nc = f.components();
  const bool sym = f.rank() == Rank::symtensor3;
  f.grid().for_each_mode([&](Index idx, int, int, int k3) {
    for (int c = 0; c < nc; ++c) {
      double w = mode_weight(k3);
      if (sym) {
        const auto [i, j] = sym_pair(c);
        if (i != j) w *= 2.0;
      }
      s += w * (f.coeffs()(idx, c) * std::conj(g.coeffs()(idx, c))).real();
    }
  });
  return kTorusVolume * s;
}

double l2_squared(const SpectralField& f) { return l2_inner(f, f); }

double dissipation_integral(const SpectralField& f, double alpha) {
  double s = 0.0;
  f.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const double k2n = double(k1) * k1 + double(k2) * k2 + double(k3) * k3;
    if (k2n == 0.0) return;
    s += mode_weight(k3) * std::pow(k2n, alpha) * f.coeffs().row(idx).abs2().sum();
  });
  return kTorusVolume * s;
}

PhysicalField outer_sym(const PhysicalField& a, const PhysicalField& b) {
  PhysicalField t(a.grid, Rank::symtensor3);
  for (int c = 0; c < 6; ++c) {
    const auto [i, j] = sym_pair(c);
    t[c] = a[i] * b[j] + b[i] * a[j];
  }
  return t;
}

PhysicalField dot(const PhysicalField& a, const PhysicalField& b) {
  PhysicalField s(a.grid, Rank::scalar);
  s[0] = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return s;
}

SpectralField trace(const SpectralField& t) {
  require_rank(t, Rank::symtensor3, "trace");
  SpectralField s(t.grid(), Rank::scalar);
  s.coeffs().col(0) = t.coeffs().col(0) + t.coeffs().col(3) + t.coeffs().col(5);
  return s;
}

}  // namespace cilab
