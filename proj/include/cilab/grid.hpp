#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cilab {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Mat3 = Eigen::Matrix3d;
using Index = Eigen::Index;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kTorusVolume = kTwoPi * kTwoPi * kTwoPi;

// Error categories shared by every module.
struct ParameterError : std::invalid_argument { using std::invalid_argument::invalid_argument; };
struct RankError : std::invalid_argument { using std::invalid_argument::invalid_argument; };
struct ResolutionError : std::runtime_error { using std::runtime_error::runtime_error; };
struct SymmetryError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DomainError : std::runtime_error { using std::runtime_error::runtime_error; };
struct FormatError : std::runtime_error { using std::runtime_error::runtime_error; };
struct InfeasibleError : std::runtime_error { using std::runtime_error::runtime_error; };
struct AccuracyError : std::runtime_error { using std::runtime_error::runtime_error; };

/// Collocation grid on [0,2pi)^3 plus the retained (dealiased) cube |k_i| <= kmax.
///
/// Spectral storage keeps the half cube k3 >= 0; the k3 = 0 plane is stored in
/// full and kept conjugate-consistent.
class FourierGrid {
 public:
  explicit FourierGrid(int n = 16, double dealias_fraction = 2.0 / 3.0);

  int n() const { return n_; }
  double dealias_fraction() const { return dealias_; }
  int kmax() const { return kmax_; }
  int span() const { return 2 * kmax_ + 1; }
  Index num_modes() const { return Index(span()) * span() * (kmax_ + 1); }
  Index num_points() const { return Index(n_) * n_ * n_; }

  bool retained(int k1, int k2, int k3) const {
    return std::abs(k1) <= kmax_ && std::abs(k2) <= kmax_ && std::abs(k3) <= kmax_;
  }
  // Only valid for k3 >= 0.
  Index mode_index(int k1, int k2, int k3) const {
    return (Index(k1 + kmax_) * span() + (k2 + kmax_)) * (kmax_ + 1) + k3;
  }
  Vec3i mode(Index idx) const {
    const int k3 = int(idx % (kmax_ + 1));
    const Index r = idx / (kmax_ + 1);
    return {int(r / span()) - kmax_, int(r % span()) - kmax_, k3};
  }
  Vec3 point(Index i) const {
    const double h = kTwoPi / n_;
    const Index i3 = i % n_, i2 = (i / n_) % n_, i1 = i / (Index(n_) * n_);
    return {h * double(i1), h * double(i2), h * double(i3)};
  }

  template <class F>
  void for_each_mode(F&& f) const {
    Index idx = 0;
    for (int k1 = -kmax_; k1 <= kmax_; ++k1)
      for (int k2 = -kmax_; k2 <= kmax_; ++k2)
        for (int k3 = 0; k3 <= kmax_; ++k3, ++idx) f(idx, k1, k2, k3);
  }

  bool operator==(const FourierGrid& o) const { return n_ == o.n_ && kmax_ == o.kmax_; }
  bool operator!=(const FourierGrid& o) const { return !(*this == o); }

 private:
  int n_;
  double dealias_;
  int kmax_;
};

// Symmetric tensor component order: xx, xy, xz, yy, yz, zz.
inline int sym_index(int i, int j) {
  static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return table[i][j];
}
inline std::pair<int, int> sym_pair(int c) {
  static constexpr int ii[6] = {0, 0, 0, 1, 1, 2};
  static constexpr int jj[6] = {0, 1, 2, 1, 2, 2};
  return {ii[c], jj[c]};
}

// Threads allowed by CI_LAB_THREADS (0 = library default).
int thread_cap();
void apply_thread_cap();

}  // namespace cilab
