#include "cilab/field.hpp"

namespace cilab {

const char* rank_name(Rank r) {
  switch (r) {
    case Rank::scalar: return "scalar";
    case Rank::vector3: return "vector3";
    case Rank::symtensor3: return "symtensor3";
    case Rank::matrix3: return "matrix3";
  }
  return "?";
}

SpectralField::SpectralField(const FourierGrid& grid, Rank rank)
    : grid_(grid), rank_(rank), c_(Eigen::ArrayXXcd::Zero(grid.num_modes(), num_components(rank))) {}

cplx SpectralField::coeff(const Vec3i& k, int comp) const {
  if (!grid_.retained(k[0], k[1], k[2])) return 0.0;
  if (k[2] >= 0) return c_(grid_.mode_index(k[0], k[1], k[2]), comp);
  return std::conj(c_(grid_.mode_index(-k[0], -k[1], -k[2]), comp));
}

void SpectralField::set_coeff(const Vec3i& k, int comp, cplx value) {
  if (!grid_.retained(k[0], k[1], k[2]))
    throw ResolutionError("mode (" + std::to_string(k[0]) + "," + std::to_string(k[1]) + "," +
                          std::to_string(k[2]) + ") outside retained cube kmax=" + std::to_string(grid_.kmax()));
  Vec3i kk = k;
  if (kk[2] < 0) {
    kk = -k;
    value = std::conj(value);
  }
  c_(grid_.mode_index(kk[0], kk[1], kk[2]), comp) = value;
  if (kk[2] == 0) c_(grid_.mode_index(-kk[0], -kk[1], 0), comp) = std::conj(value);
}

void SpectralField::add_coeff(const Vec3i& k, int comp, cplx value) {
  set_coeff(k, comp, coeff(k, comp) + value);
}

void SpectralField::enforce_reality() {
  const int K = grid_.kmax();
  for (int c = 0; c < components(); ++c)
    for (int k1 = -K; k1 <= K; ++k1)
      for (int k2 = -K; k2 <= K; ++k2) {
        const Index a = grid_.mode_index(k1, k2, 0), b = grid_.mode_index(-k1, -k2, 0);
        if (a > b) continue;
        const cplx avg = 0.5 * (c_(a, c) + std::conj(c_(b, c)));
        c_(a, c) = avg;
        c_(b, c) = std::conj(avg);
      }
}

double SpectralField::reality_defect() const {
  const int K = grid_.kmax();
  double d = 0.0;
  for (int c = 0; c < components(); ++c)
    for (int k1 = -K; k1 <= K; ++k1)
      for (int k2 = -K; k2 <= K; ++k2)
        d = std::max(d, std::abs(c_(grid_.mode_index(k1, k2, 0), c) - std::conj(c_(grid_.mode_index(-k1, -k2, 0), c))));
  return d;
}

double SpectralField::max_amplitude() const { return c_.size() ? c_.abs().maxCoeff() : 0.0; }

Index SpectralField::active_modes() const {
  Index n = 0;
  for (Index i = 0; i < c_.rows(); ++i)
    if ((c_.row(i) != cplx(0.0)).any()) ++n;
  return n;
}

SpectralField SpectralField::component(int comp) const {
  SpectralField s(grid_, Rank::scalar);
  s.c_.col(0) = c_.col(comp);
  return s;
}

void SpectralField::set_component(int comp, const SpectralField& s) { c_.col(comp) = s.c_.col(0); }

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (o.grid_ != grid_ || o.rank_ != rank_) throw RankError("field addition: grid or rank mismatch");
  c_ += o.c_;
  return *this;
}
SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (o.grid_ != grid_ || o.rank_ != rank_) throw RankError("field subtraction: grid or rank mismatch");
  c_ -= o.c_;
  return *this;
}
SpectralField& SpectralField::operator*=(double s) {
  c_ *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

Eigen::ArrayXd PhysicalField::magnitude() const {
  Eigen::ArrayXd m = Eigen::ArrayXd::Zero(grid.num_points());
  if (rank == Rank::symtensor3) {
    for (int c = 0; c < 6; ++c) {
      const auto [i, j] = sym_pair(c);
      m += (i == j ? 1.0 : 2.0) * comp[c].square();
    }
  } else {
    for (const auto& a : comp) m += a.square();
  }
  return m.sqrt();
}

}  // namespace cilab
