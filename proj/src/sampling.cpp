#include "cilab/sampling.hpp"

#include "cilab/fft.hpp"
#include "cilab/spectral_ops.hpp"

namespace cilab {

FieldSampler::FieldSampler(const SpectralField& f, SampleMode mode, bool with_gradient) : ncomp_(f.components()) {
  const Index active = f.active_modes();
  if (mode == SampleMode::automatic) mode = active <= kExactSumModeLimit ? SampleMode::exact_sum : SampleMode::interp;
  mode_ = mode;
  if (mode_ == SampleMode::exact_sum) {
    const auto& c = f.coeffs();
    f.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
      if ((c.row(idx) == cplx(0.0)).all()) return;
      const double w = mode_weight(k3);
      k_.emplace_back(double(k1), double(k2), double(k3));
      for (int comp = 0; comp < ncomp_; ++comp) {
        re_.push_back(w * c(idx, comp).real());
        im_.push_back(w * c(idx, comp).imag());
      }
    });
    return;
  }
  nf_ = 2 * f.grid().n();
  for (int comp = 0; comp < ncomp_; ++comp) values_.push_back(to_physical_padded(f, comp, nf_));
  if (with_gradient)
    for (int comp = 0; comp < ncomp_; ++comp) {
      const SpectralField s = f.component(comp);
      for (int j = 0; j < 3; ++j) grads_.push_back(to_physical_padded(partial(s, j), 0, nf_));
    }
}

std::vector<Eigen::VectorXd> sample_offgrid(const SpectralField& f, const std::vector<Vec3>& points, SampleMode mode) {
  std::vector<Eigen::VectorXd> out;
  if (points.empty()) return out;
  const FieldSampler s(f, mode);
  out.reserve(points.size());
  for (const auto& p : points) {
    Eigen::VectorXd v(s.components());
    s.eval(p.data(), v.data());
    out.push_back(v);
  }
  return out;
}

}  // namespace cilab
