#include "cilab/snapshot.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

namespace cilab {

static_assert(std::endian::native == std::endian::little, "CINS1 I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'I', 'N', 'S'};
constexpr size_t kHeaderBytes = 4 + 1 + 1 + 4 + 8 + 8;

template <class T>
void put(std::string& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.append(b, sizeof(T));
}

template <class T>
T get(const std::string& buf, size_t& at) {
  if (at + sizeof(T) > buf.size()) throw FormatError("CINS1: truncated file at byte offset " + std::to_string(at));
  T v;
  std::memcpy(&v, buf.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

uint8_t rank_code(Rank r) {
  switch (r) {
    case Rank::scalar: return 0;
    case Rank::vector3: return 1;
    case Rank::symtensor3: return 2;
    default: throw RankError("CINS1 stores scalar, vector3 or symtensor3 fields only");
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

void write_snapshot(const std::string& path, const SpectralField& f, double time, double alpha, const SnapshotMeta& meta) {
  const auto& g = f.grid();
  const int K = g.kmax(), nc = f.components();
  std::string buf;
  buf.reserve(kHeaderBytes + size_t(g.span()) * g.span() * g.span() * nc * 16);
  buf.append(kMagic, 4);
  put<uint8_t>(buf, 1);
  put<uint8_t>(buf, rank_code(f.rank()));
  put<uint32_t>(buf, uint32_t(g.n()));
  put<double>(buf, time);
  put<double>(buf, alpha);
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2)
      for (int k3 = -K; k3 <= K; ++k3)
        for (int c = 0; c < nc; ++c) {
          const cplx v = f.coeff({k1, k2, k3}, c);
          put<double>(buf, v.real());
          put<double>(buf, v.imag());
        }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("CINS1: cannot open " + path + " for writing");
  out.write(buf.data(), std::streamsize(buf.size()));

  nlohmann::ordered_json j;
  j["format"] = "CINS1";
  j["stage"] = meta.stage;
  j["schedule_hash"] = meta.schedule_hash;
  j["energy_profile_id"] = meta.profile_id;
  j["quantity"] = meta.quantity;
  j["dealias_fraction"] = g.dealias_fraction();
  j["kmax"] = K;
  std::ofstream side(path + ".meta.json");
  side << j.dump(2) << "\n";
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("CINS1: cannot open " + path);
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  size_t at = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("CINS1: bad magic at byte offset 0");
  at = 4;
  const auto version = get<uint8_t>(buf, at);
  if (version != 1) throw FormatError("CINS1: unsupported version at byte offset 4");
  const auto rc = get<uint8_t>(buf, at);
  if (rc > 2) throw FormatError("CINS1: invalid rank code at byte offset 5");
  const Rank rank = rc == 0 ? Rank::scalar : rc == 1 ? Rank::vector3 : Rank::symtensor3;
  const auto n = get<uint32_t>(buf, at);
  Snapshot s;
  s.time = get<double>(buf, at);
  s.alpha = get<double>(buf, at);

  double dealias = 2.0 / 3.0;
  if (std::ifstream side(path + ".meta.json"); side) {
    try {
      const auto j = nlohmann::json::parse(side);
      dealias = j.value("dealias_fraction", dealias);
      s.meta.stage = j.value("stage", 0);
      s.meta.schedule_hash = j.value("schedule_hash", "");
      s.meta.profile_id = j.value("energy_profile_id", "");
      s.meta.quantity = j.value("quantity", "");
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("CINS1 sidecar: ") + e.what());
    }
  }
  FourierGrid grid;
  try {
    grid = FourierGrid(int(n), dealias);
  } catch (const ParameterError&) {
    throw FormatError("CINS1: invalid n_per_axis at byte offset 6");
  }
  const int K = grid.kmax(), nc = num_components(rank);
  const size_t expected = kHeaderBytes + size_t(grid.span()) * grid.span() * grid.span() * nc * 16;
  if (buf.size() != expected)
    throw FormatError("CINS1: payload size mismatch at byte offset " + std::to_string(std::min(buf.size(), expected)));
  s.field = SpectralField(grid, rank);
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2)
      for (int k3 = -K; k3 <= K; ++k3)
        for (int c = 0; c < nc; ++c) {
          const size_t off = at;
          const double re = get<double>(buf, at), im = get<double>(buf, at);
          if (!std::isfinite(re) || !std::isfinite(im))
            throw FormatError("CINS1: non-finite coefficient at byte offset " + std::to_string(off));
          if (k3 >= 0) s.field.coeffs()(grid.mode_index(k1, k2, k3), c) = cplx(re, im);
        }
  // Second pass: the lower half must mirror the stored half.
  at = kHeaderBytes;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2)
      for (int k3 = -K; k3 <= K; ++k3)
        for (int c = 0; c < nc; ++c) {
          const size_t off = at;
          const double re = get<double>(buf, at);
          const cplx v(re, get<double>(buf, at));
          if (std::abs(v - s.field.coeff({k1, k2, k3}, c)) > 1e-12 * (1.0 + std::abs(v)))
            throw FormatError("CINS1: conjugate symmetry violated at byte offset " + std::to_string(off));
        }
  return s;
}

}  // namespace cilab
