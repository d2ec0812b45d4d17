#include "cilab/beltrami.hpp"

#include <cmath>
#include <json.hpp>
#include <random>
#include <sstream>

namespace cilab {
namespace {

// Representatives of the antipodal pairs. The split was chosen by exhaustive
// search over the 12 pairs of the |k|^2 = 5 shell for the best-conditioned
// pair of bases.
const int kEvenReps[6][3] = {{-2, -1, 0}, {-2, 1, 0}, {-1, 0, -2}, {-1, 0, 2}, {0, -2, -1}, {0, -2, 1}};
const int kOddReps[6][3] = {{-2, 0, -1}, {-2, 0, 1}, {-1, -2, 0}, {-1, 2, 0}, {0, -1, -2}, {0, -1, 2}};

Vec3 amplitude_vector(const Vec3i& k) {
  // Cross with the axis of the smallest |k_j| (always a zero entry here).
  int axis = 0;
  for (int j = 1; j < 3; ++j)
    if (std::abs(k[j]) < std::abs(k[axis])) axis = j;
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  Vec3 a = k.cast<double>().cross(e);
  return a.normalized() / std::sqrt(2.0);
}

BeltramiDirection make_direction(const Vec3i& k, const Vec3& A) {
  const Vec3 kh = k.cast<double>().normalized();
  BeltramiDirection d;
  d.k = k;
  d.A = A;
  d.B = A.cast<cplx>() + cplx(0.0, 1.0) * kh.cross(A).cast<cplx>();
  return d;
}

Mat3 projector(const Vec3i& k) {
  const Vec3 kh = k.cast<double>().normalized();
  return Mat3::Identity() - kh * kh.transpose();
}

PairSystem make_system(const int reps[6][3]) {
  PairSystem s;
  for (int p = 0; p < 6; ++p) s.matrix.col(p) = BeltramiFamily::sym6(projector(Vec3i(reps[p][0], reps[p][1], reps[p][2])));
  s.inverse = s.matrix.inverse();
  Eigen::JacobiSVD<Mat6> svd(s.matrix);
  s.condition = svd.singularValues()(0) / svd.singularValues()(5);
  s.baseline = s.inverse * BeltramiFamily::sym6(Mat3::Identity());
  return s;
}

Mat3 random_unit_sym(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat3 e;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) e(i, j) = e(j, i) = g(rng);
  return e / e.norm();
}

}  // namespace

BeltramiFamily build_families() {
  BeltramiFamily f;
  f.lambda_bar_geom = std::sqrt(5.0);
  const int (*reps[2])[3] = {kEvenReps, kOddReps};
  for (int par = 0; par < 2; ++par) {
    for (int p = 0; p < 6; ++p) {
      const Vec3i k(reps[par][p][0], reps[par][p][1], reps[par][p][2]);
      const Vec3 A = amplitude_vector(k);
      f.families[par].push_back(make_direction(k, A));
      f.families[par].push_back(make_direction(-k, A));
    }
    f.systems[par] = make_system(reps[par]);
  }
  // Positivity survives |R - Id|_F <= min c(Id) / ||inverse||_inf; halve it.
  double r0 = 1e300;
  for (int par = 0; par < 2; ++par) {
    const auto& s = f.systems[par];
    const double rowsum = s.inverse.cwiseAbs().rowwise().sum().maxCoeff();
    r0 = std::min(r0, 0.5 * s.baseline.minCoeff() / rowsum);
  }
  f.r0 = r0;
  return f;
}

std::vector<std::pair<Vec3i, double>> geometric_decompose(const Mat3& R, const BeltramiFamily& fam, int parity) {
  const double dist = (R - Mat3::Identity()).norm();
  if (dist > fam.r0) {
    std::ostringstream o;
    o << "geometric_decompose: |R - Id| = " << dist << " exceeds r0 = " << fam.r0;
    throw DomainError(o.str());
  }
  const Vec6 c = fam.coefficients(R, parity);
  std::vector<std::pair<Vec3i, double>> out;
  for (int p = 0; p < 6; ++p) {
    if (c[p] < 0.0) {
      std::ostringstream o;
      o << "geometric_decompose: negative coefficient " << c[p] << " for k = " << fam.direction(parity, 2 * p).k.transpose();
      throw DomainError(o.str());
    }
    const double g = std::sqrt(c[p]);
    out.emplace_back(fam.direction(parity, 2 * p).k, g);
    out.emplace_back(fam.direction(parity, 2 * p + 1).k, g);
  }
  return out;
}

Mat3 recompose(const std::vector<std::pair<Vec3i, double>>& gammas) {
  Mat3 R = Mat3::Zero();
  for (const auto& [k, g] : gammas) R += 0.5 * g * g * projector(k);
  return R;
}

const BeltramiDirection& find_direction(const BeltramiFamily& fam, const Vec3i& k, int* parity) {
  for (int par = 0; par < 2; ++par)
    for (const auto& d : fam.families[par])
      if (d.k == k) {
        if (parity) *parity = par;
        return d;
      }
  std::ostringstream o;
  o << "direction " << k.transpose() << " is not in the Beltrami families";
  throw ParameterError(o.str());
}

SpectralField make_beltrami_wave(const std::vector<std::pair<Vec3i, cplx>>& amplitudes, const BeltramiFamily& fam,
                                 int lam, const FourierGrid& grid) {
  if (lam < 1) throw ParameterError("make_beltrami_wave: lam must be >= 1");
  int parity = -1;
  for (const auto& [k, a] : amplitudes) {
    int p = -1;
    find_direction(fam, k, &p);
    if (parity >= 0 && p != parity) throw ParameterError("make_beltrami_wave: amplitudes span both families");
    parity = p;
    const cplx* partner = nullptr;
    for (const auto& [k2, a2] : amplitudes)
      if (k2 == -k) partner = &a2;
    const cplx pa = partner ? *partner : cplx(0.0);
    if (std::abs(pa - std::conj(a)) > 1e-14 * (1.0 + std::abs(a)))
      throw SymmetryError("make_beltrami_wave: a_{-k} must equal conj(a_k)");
  }
  SpectralField w(grid, Rank::vector3);
  for (const auto& [k, a] : amplitudes) {
    if (k[2] < 0 || (k[2] == 0 && (k[0] < 0 || (k[0] == 0 && k[1] < 0)))) continue;  // partner sets it
    const Vec3i lk = lam * k;
    if (!grid.retained(lk[0], lk[1], lk[2])) throw ResolutionError("make_beltrami_wave: lam*k outside the retained cube");
    const auto& d = find_direction(fam, k);
    for (int j = 0; j < 3; ++j) w.set_coeff(lk, j, a * d.B[j]);
  }
  return w;
}

double max_gamma_sum(const BeltramiFamily& fam, int samples, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double best = 0.0;
  for (int par = 0; par < 2; ++par) best = std::max(best, 2.0 * fam.systems[par].baseline.cwiseSqrt().sum());
  for (int s = 0; s < samples; ++s) {
    const Mat3 R = Mat3::Identity() + fam.r0 * std::cbrt(u(rng)) * random_unit_sym(rng);
    for (int par = 0; par < 2; ++par)
      best = std::max(best, 2.0 * fam.coefficients(R, par).cwiseMax(0.0).cwiseSqrt().sum());
  }
  return best;
}

double empirical_positivity_radius(const BeltramiFamily& fam, int parity, int samples, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  const auto& s = fam.systems[parity];
  double radius = 1e300;
  for (int i = 0; i < samples; ++i) {
    const Vec6 d = s.inverse * BeltramiFamily::sym6(random_unit_sym(rng));
    for (int p = 0; p < 6; ++p)
      if (d[p] < 0.0) radius = std::min(radius, s.baseline[p] / -d[p]);
  }
  return radius;
}

std::string family_fixture_json(const BeltramiFamily& fam) {
  nlohmann::ordered_json j;
  j["shell_k_squared"] = 5;
  j["lambda_bar_geom"] = fam.lambda_bar_geom;
  j["r0"] = fam.r0;
  const char* names[2] = {"even", "odd"};
  for (int par = 0; par < 2; ++par) {
    nlohmann::ordered_json f;
    for (const auto& d : fam.families[par]) {
      f["directions"].push_back({{"k", {d.k[0], d.k[1], d.k[2]}},
                                 {"A", {d.A[0], d.A[1], d.A[2]}},
                                 {"B_re", {d.B[0].real(), d.B[1].real(), d.B[2].real()}},
                                 {"B_im", {d.B[0].imag(), d.B[1].imag(), d.B[2].imag()}}});
    }
    const auto& s = fam.systems[par];
    for (int r = 0; r < 6; ++r) {
      std::vector<double> row(6), irow(6);
      for (int c = 0; c < 6; ++c) {
        row[c] = s.matrix(r, c);
        irow[c] = s.inverse(r, c);
      }
      f["system_matrix"].push_back(row);
      f["system_inverse"].push_back(irow);
    }
    f["condition_number"] = s.condition;
    f["baseline_coefficients"] = std::vector<double>(s.baseline.data(), s.baseline.data() + 6);
    j[names[par]] = f;
  }
  return j.dump(2);
}

}  // namespace cilab
