#include "cilab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace cilab {
namespace {

// FFTW plans are created once per size (planning is not thread safe) and
// executed with the new-array interface on fftw_malloc'd buffers.
struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

struct Buffer {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  int n = 0;
  explicit Buffer(int n_) : n(n_) {
    const size_t np = size_t(n) * n * n, nc = size_t(n) * n * (n / 2 + 1);
    real = fftw_alloc_real(np);
    spec = fftw_alloc_complex(nc);
  }
  ~Buffer() {
    fftw_free(real);
    fftw_free(spec);
  }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
};

std::mutex plan_mutex;

const Plans& plans_for(int n) {
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Buffer tmp(n);
  Plans p;
  p.r2c = fftw_plan_dft_r2c_3d(n, n, n, tmp.real, tmp.spec, FFTW_ESTIMATE);
  p.c2r = fftw_plan_dft_c2r_3d(n, n, n, tmp.spec, tmp.real, FFTW_ESTIMATE);
  return cache.emplace(n, p).first->second;
}

inline int wrap(int k, int n) { return k < 0 ? k + n : k; }

void scatter(const SpectralField& f, int comp, Buffer& b) {
  const int n = b.n, nh = n / 2 + 1;
  std::fill_n(reinterpret_cast<double*>(b.spec), size_t(2) * n * n * nh, 0.0);
  const auto& g = f.grid();
  const auto& c = f.coeffs();
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const cplx v = c(idx, comp);
    if (v == cplx(0.0)) return;
    const size_t at = (size_t(wrap(k1, n)) * n + wrap(k2, n)) * nh + k3;
    b.spec[at][0] = v.real();
    b.spec[at][1] = v.imag();
  });
}

}  // namespace

Eigen::ArrayXd to_physical_padded(const SpectralField& f, int comp, int n) {
  if (n < 2 * f.grid().kmax() + 2) throw ResolutionError("padded grid too small for the retained cube");
  Buffer b(n);
  scatter(f, comp, b);
  fftw_execute_dft_c2r(plans_for(n).c2r, b.spec, b.real);
  return Eigen::Map<Eigen::ArrayXd>(b.real, Index(n) * n * n);
}

Eigen::ArrayXd to_physical(const SpectralField& f, int comp) {
  return to_physical_padded(f, comp, f.grid().n());
}

PhysicalField to_physical(const SpectralField& f) {
  PhysicalField p;
  p.grid = f.grid();
  p.rank = f.rank();
  for (int c = 0; c < f.components(); ++c) p.comp.push_back(to_physical(f, c));
  return p;
}

SpectralField from_physical(const FourierGrid& grid, const Eigen::ArrayXd& values) {
  const int n = grid.n(), nh = n / 2 + 1;
  if (values.size() != grid.num_points()) throw ParameterError("from_physical: size mismatch");
  Buffer b(n);
  std::copy(values.data(), values.data() + values.size(), b.real);
  fftw_execute_dft_r2c(plans_for(n).r2c, b.real, b.spec);
  SpectralField f(grid, Rank::scalar);
  const double scale = 1.0 / double(grid.num_points());
  auto& c = f.coeffs();
  grid.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const size_t at = (size_t(wrap(k1, n)) * n + wrap(k2, n)) * nh + k3;
    c(idx, 0) = cplx(b.spec[at][0], b.spec[at][1]) * scale;
  });
  return f;
}

SpectralField from_physical(const PhysicalField& p) {
  SpectralField f(p.grid, p.rank);
  for (int c = 0; c < int(p.comp.size()); ++c) f.coeffs().col(c) = from_physical(p.grid, p.comp[c]).coeffs().col(0);
  return f;
}

}  // namespace cilab
