#pragma once

#include <string>

#include "cilab/field.hpp"

namespace cilab {

struct SnapshotMeta {
  int stage = 0;
  std::string schedule_hash;
  std::string profile_id;
  std::string quantity;  // "v", "p", "stress", ...
};

struct Snapshot {
  SpectralField field;
  double time = 0.0;
  double alpha = 0.0;
  SnapshotMeta meta;
};

/// CINS1: "CINS", u8 version = 1, u8 rank (0 scalar, 1 vector, 2 symtensor),
/// u32 n, f64 time, f64 alpha, then little-endian complex f64 coefficients
/// for every k of the retained cube in lexicographic (k1, k2, k3) order,
/// components innermost. Sidecar "<path>.meta.json" carries the metadata.
void write_snapshot(const std::string& path, const SpectralField& f, double time, double alpha, const SnapshotMeta& meta);
Snapshot read_snapshot(const std::string& path);

// 64-bit FNV-1a of a string, hex encoded.
std::string fnv1a_hex(const std::string& s);

}  // namespace cilab
