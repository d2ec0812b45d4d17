#include "cilab/norms.hpp"

#include <cmath>

#include "cilab/fft.hpp"
#include "cilab/spectral_ops.hpp"

namespace cilab {
namespace {

constexpr int kDirections[13][3] = {{1, 0, 0},  {0, 1, 0},  {0, 0, 1},  {1, 1, 0},  {1, -1, 0},
                                    {1, 0, 1},  {1, 0, -1}, {0, 1, 1},  {0, 1, -1}, {1, 1, 1},
                                    {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}};

std::vector<SpectralField> derivatives(const SpectralField& f, int m) {
  if (m == 0) return {f};
  std::vector<SpectralField> d1;
  for (int j = 0; j < 3; ++j) d1.push_back(partial(f, j));
  if (m == 1) return d1;
  std::vector<SpectralField> d2;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) d2.push_back(partial(d1[i], j));
  return d2;
}

double frob_weight(Rank r, int c) {
  if (r != Rank::symtensor3) return 1.0;
  const auto [i, j] = sym_pair(c);
  return i == j ? 1.0 : 2.0;
}

double difference_quotient_sup(const PhysicalField& p, double a) {
  const int n = p.grid.n();
  double best = 0.0;
  // h = 2pi 2^-j, j = 1 .. log2(n)-1, i.e. shifts of n/2 down to 2 points.
  for (int s = n / 2; s >= 2; s /= 2) {
    const double h = kTwoPi * double(s) / n;
    for (const auto& d : kDirections) {
      const double dist = h * std::sqrt(double(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]));
      const double scale = 1.0 / std::pow(dist, a);
      double local = 0.0;
#pragma omp parallel for reduction(max : local)
      for (int i1 = 0; i1 < n; ++i1) {
        const int j1 = ((i1 + s * d[0]) % n + n) % n;
        for (int i2 = 0; i2 < n; ++i2) {
          const int j2 = ((i2 + s * d[1]) % n + n) % n;
          for (int i3 = 0; i3 < n; ++i3) {
            const int j3 = ((i3 + s * d[2]) % n + n) % n;
            const Index a0 = (Index(i1) * n + i2) * n + i3, b0 = (Index(j1) * n + j2) * n + j3;
            double acc = 0.0;
            for (size_t c = 0; c < p.comp.size(); ++c) {
              const double diff = p.comp[c][b0] - p.comp[c][a0];
              acc += frob_weight(p.rank, int(c)) * diff * diff;
            }
            local = std::max(local, acc);
          }
        }
      }
      best = std::max(best, std::sqrt(local) * scale);
    }
  }
  return best;
}

}  // namespace

double sup_norm(const SpectralField& f) {
  // component by component: two grid arrays at a time
  Eigen::ArrayXd m;
  for (int c = 0; c < f.components(); ++c) {
    double w = 1.0;
    if (f.rank() == Rank::symtensor3) {
      const auto [i, j] = sym_pair(c);
      w = i == j ? 1.0 : 2.0;
    }
    const Eigen::ArrayXd v = to_physical(f, c);
    if (c == 0) m = w * v.square();
    else m += w * v.square();
  }
  return std::sqrt(m.maxCoeff());
}

double holder_seminorm(const SpectralField& f, double order) {
  const int m = int(std::floor(order + 1e-12));
  const double a = order - m;
  if (m < 0 || m > 2 || a < 0.0 || a >= 1.0) throw ParameterError("holder_seminorm: order must be m+a with m in {0,1,2}, a in [0,1)");
  double best = 0.0;
  for (const auto& d : derivatives(f, m)) {
    const PhysicalField p = to_physical(d);
    best = std::max(best, a < 1e-12 ? p.magnitude().maxCoeff() : difference_quotient_sup(p, a));
  }
  return best;
}

double c_norm(const SpectralField& f, int m) {
  double s = 0.0;
  for (int j = 0; j <= m; ++j) s += holder_seminorm(f, double(j));
  return s;
}

NormReport norms(const SpectralField& f, double alpha, const std::vector<double>& orders) {
  NormReport r;
  r.c0 = sup_norm(f);
  for (double o : orders) r.seminorms[o] = holder_seminorm(f, o);
  r.plancherel_l2 = l2_squared(f);
  r.plancherel_dissipation = dissipation_integral(f, alpha);
  return r;
}

}  // namespace cilab
