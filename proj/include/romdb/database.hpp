// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/manifold.hpp"
#include "romdb/rbf.hpp"

#include <boost/crc.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace romdb {

// ---------------------------------------------------------------------------
// Entries and the database container
// ---------------------------------------------------------------------------

/// One local reduced model: A_r, b_r at mu and optionally the trial basis V it
/// was projected with.
struct RomEntry {
  Vector mu;
  Matrix matrix;  ///< A_r, k x k
  Vector rhs;     ///< b_r, k
  Matrix basis;   ///< V, N_w x k; empty when not stored

  bool has_basis() const { return basis.size() > 0; }
  Index dimension() const { return matrix.rows(); }

  friend bool operator==(const RomEntry& a, const RomEntry& b) {
    auto same = [](const auto& x, const auto& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    return same(a.mu, b.mu) && same(a.matrix, b.matrix) && same(a.rhs, b.rhs) && same(a.basis, b.basis);
  }
};

/// Append-only set of local reduced models sharing the reduced dimension k.
class RomDatabase {
 public:
  RomDatabase() = default;
  explicit RomDatabase(ParamBounds bounds, double theta = 0.0, ManifoldKind matrix_kind = ManifoldKind::Real)
      : bounds_(std::move(bounds)), matrix_kind_(matrix_kind) {
    bounds_.validate();
    theta_ = theta > 0 ? theta : default_shape_parameter(bounds_);
  }

  void append(RomEntry entry) {
    require(entry.mu.size() == bounds_.size(), "database entry parameter has the wrong length");
    require(bounds_.contains(entry.mu), "database entry parameter lies outside the bounds");
    const Index k = entry.matrix.rows();
    require(k >= 1 && entry.matrix.cols() == k && entry.rhs.size() == k, "database entry has inconsistent shapes");
    if (!entries_.empty()) {
      require(k == dimension(), "database entries must share the reduced dimension");
      require(entry.has_basis() == stores_bases(), "either every database entry stores its basis or none does");
    }
    if (entry.has_basis()) {
      require(entry.basis.cols() == k, "stored basis column count must equal the reduced dimension");
      if (!entries_.empty()) require(entry.basis.rows() == entries_.front().basis.rows(), "basis row counts differ");
    }
    for (std::size_t c = 0; c < entries_.size(); ++c)
      if (bounds_.normalized_distance(entries_[c].mu, entry.mu) <= 1e-14)
        throw ConfigError("parameter point already present in the database (entry " + std::to_string(c) + ")");
    entries_.push_back(std::move(entry));
  }

  Index size() const { return static_cast<Index>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const RomEntry& operator[](Index c) const { return entries_.at(static_cast<std::size_t>(c)); }
  const std::vector<RomEntry>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  const ParamBounds& bounds() const { return bounds_; }
  Index n_params() const { return bounds_.size(); }
  Index dimension() const { return entries_.empty() ? 0 : entries_.front().dimension(); }
  bool stores_bases() const { return !entries_.empty() && entries_.front().has_basis(); }
  Index full_dimension() const { return stores_bases() ? entries_.front().basis.rows() : 0; }
  double theta() const { return theta_; }
  ManifoldKind matrix_kind() const { return matrix_kind_; }
  void set_matrix_kind(ManifoldKind kind) { matrix_kind_ = kind; }

  std::vector<Vector> parameters() const {
    std::vector<Vector> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.mu);
    return out;
  }

  /// Entry closest to mu in normalized distance; ties go to the lowest index.
  Index nearest(const Vector& mu) const {
    require(!entries_.empty(), "nearest entry of an empty database");
    Index best = 0;
    double best_d = kInf;
    for (Index c = 0; c < size(); ++c) {
      const double d = bounds_.normalized_distance(entries_[c].mu, mu);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

  friend bool operator==(const RomDatabase& a, const RomDatabase& b) {
    return a.bounds_ == b.bounds_ && std::bit_cast<std::uint64_t>(a.theta_) == std::bit_cast<std::uint64_t>(b.theta_) &&
           a.matrix_kind_ == b.matrix_kind_ && a.entries_ == b.entries_;
  }

 private:
  ParamBounds bounds_;
  double theta_ = 0.0;
  ManifoldKind matrix_kind_ = ManifoldKind::Real;
  std::vector<RomEntry> entries_;
};

// ---------------------------------------------------------------------------
// Binary persistence
// ---------------------------------------------------------------------------
//
//   "ROMDB\x01"  u16 version  u32 N_p  u32 N_mu  u32 k  u32 N_w  u32 flags
//   f64 theta  f64 lower[N_mu]  f64 upper[N_mu]
//   per entry: f64 mu[N_mu]  f64 A_r[k*k] (row-major)  f64 b_r[k]  [f64 V[N_w*k] (column-major)]
//   u32 CRC32 of every preceding byte
//
// All integers and floats little-endian. flags bit 0: bases stored; bits 1-2:
// manifold kind of A_r.

inline constexpr std::uint16_t kDatabaseVersion = 1;
inline constexpr char kDatabaseMagic[6] = {'R', 'O', 'M', 'D', 'B', '\x01'};

namespace detail {

class ByteWriter {
 public:
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<char>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  std::uint64_t get(int n) {
    if (remaining() < static_cast<std::size_t>(n)) throw FormatError("database file is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32(const char* data, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

}  // namespace detail

inline std::vector<char> serialize(const RomDatabase& db) {
  require(!db.empty(), "cannot serialize an empty database");
  const Index k = db.dimension();
  const Index p = db.n_params();
  detail::ByteWriter w;
  w.raw(kDatabaseMagic, sizeof kDatabaseMagic);
  w.u16(kDatabaseVersion);
  w.u32(static_cast<std::uint32_t>(db.size()));
  w.u32(static_cast<std::uint32_t>(p));
  w.u32(static_cast<std::uint32_t>(k));
  w.u32(static_cast<std::uint32_t>(db.full_dimension()));
  w.u32((db.stores_bases() ? 1u : 0u) | (static_cast<std::uint32_t>(db.matrix_kind()) << 1));
  w.f64(db.theta());
  for (Index i = 0; i < p; ++i) w.f64(db.bounds().lower(i));
  for (Index i = 0; i < p; ++i) w.f64(db.bounds().upper(i));
  for (const auto& e : db) {
    for (Index i = 0; i < p; ++i) w.f64(e.mu(i));
    for (Index r = 0; r < k; ++r)
      for (Index c = 0; c < k; ++c) w.f64(e.matrix(r, c));
    for (Index r = 0; r < k; ++r) w.f64(e.rhs(r));
    if (e.has_basis())
      for (Index c = 0; c < k; ++c)
        for (Index r = 0; r < e.basis.rows(); ++r) w.f64(e.basis(r, c));
  }
  auto& bytes = w.bytes();
  w.u32(detail::crc32(bytes.data(), bytes.size()));
  return std::move(bytes);
}

inline RomDatabase deserialize(const std::vector<char>& bytes) {
  constexpr std::size_t magic_len = sizeof kDatabaseMagic;
  if (bytes.size() < magic_len || !std::equal(kDatabaseMagic, kDatabaseMagic + magic_len - 1, bytes.begin()))
    throw FormatError("not a reduced-model database (bad magic bytes)");
  if (bytes[magic_len - 1] != kDatabaseMagic[magic_len - 1])
    throw FormatError("unsupported database format revision " +
                      std::to_string(static_cast<unsigned char>(bytes[magic_len - 1])));
  if (bytes.size() < magic_len + 2 + 4) throw FormatError("database file is truncated");

  detail::ByteReader r(bytes.data() + magic_len, bytes.size() - magic_len);
  const std::uint16_t version = r.u16();
  if (version > kDatabaseVersion)
    throw FormatError("database file version " + std::to_string(version) + " is newer than supported version " +
                      std::to_string(kDatabaseVersion));
  if (version == 0) throw FormatError("database file version 0 is invalid");

  const std::size_t body = bytes.size() - 4;
  const std::uint32_t stored_crc = detail::ByteReader(bytes.data() + body, 4).u32();

  const std::uint32_t n_p = r.u32();
  const std::uint32_t n_mu = r.u32();
  const std::uint32_t k = r.u32();
  const std::uint32_t n_w = r.u32();
  const std::uint32_t flags = r.u32();
  const bool has_bases = flags & 1u;
  const std::uint32_t kind = (flags >> 1) & 3u;
  if (kind > 2 || (flags >> 3) != 0) throw FormatError("database header carries unknown flags");
  if (n_p == 0 || n_mu == 0 || k == 0) throw FormatError("database header has zero dimensions");

  const std::uint64_t per_entry =
      8ull * (n_mu + static_cast<std::uint64_t>(k) * k + k + (has_bases ? static_cast<std::uint64_t>(n_w) * k : 0));
  const std::uint64_t expected = magic_len + 2 + 20 + 8 + 16ull * n_mu + per_entry * n_p + 4;
  if (bytes.size() < expected) throw FormatError("database file is truncated");
  if (bytes.size() > expected) throw FormatError("database file has trailing bytes");
  if (detail::crc32(bytes.data(), body) != stored_crc) throw FormatError("database checksum mismatch");

  const double theta = r.f64();
  Vector lower(n_mu), upper(n_mu);
  for (auto& v : lower) v = r.f64();
  for (auto& v : upper) v = r.f64();
  RomDatabase db(ParamBounds(lower, upper), theta, static_cast<ManifoldKind>(kind));
  for (std::uint32_t c = 0; c < n_p; ++c) {
    RomEntry e;
    e.mu.resize(n_mu);
    for (auto& v : e.mu) v = r.f64();
    e.matrix.resize(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) e.matrix(i, j) = r.f64();
    e.rhs.resize(k);
    for (auto& v : e.rhs) v = r.f64();
    if (has_bases) {
      e.basis.resize(n_w, k);
      for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < n_w; ++i) e.basis(i, j) = r.f64();
    }
    db.append(std::move(e));
  }
  return db;
}

inline void save(const RomDatabase& db, const std::filesystem::path& path) {
  const auto bytes = serialize(db);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write database file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing database file " + path.string());
}

inline RomDatabase load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open database file " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

// ---------------------------------------------------------------------------
// A priori samplers
// ---------------------------------------------------------------------------

/// Cartesian product of equispaced levels (endpoints included). The first
/// axis varies fastest.
inline std::vector<Vector> full_factorial(const ParamBounds& bounds, const std::vector<int>& levels,
                                          std::size_t cap = 1'000'000) {
  require(static_cast<Index>(levels.size()) == bounds.size(), "one level count per parameter is required");
  std::size_t total = 1;
  for (int l : levels) {
    require(l >= 2, "full factorial design needs at least two levels per axis");
    if (total > cap / static_cast<std::size_t>(l))
      throw ConfigError("full factorial design exceeds the configured cap of " + std::to_string(cap) + " points");
    total *= static_cast<std::size_t>(l);
  }
  std::vector<Vector> points;
  points.reserve(total);
  std::vector<int> idx(levels.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vector mu(bounds.size());
    for (Index i = 0; i < bounds.size(); ++i)
      mu(i) = bounds.lower(i) + (bounds.upper(i) - bounds.lower(i)) * idx[i] / (levels[i] - 1);
    points.push_back(std::move(mu));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (++idx[i] < levels[i]) break;
      idx[i] = 0;
    }
  }
  return points;
}

/// M points, one per equal-width stratum on every axis, uniformly placed
/// within the stratum.
inline std::vector<Vector> latin_hypercube(const ParamBounds& bounds, int m, std::uint64_t seed) {
  require(m >= 1, "latin hypercube needs at least one point");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> points(m, Vector(bounds.size()));
  std::vector<int> perm(m);
  for (Index i = 0; i < bounds.size(); ++i) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const double width = (bounds.upper(i) - bounds.lower(i)) / m;
    for (int j = 0; j < m; ++j) points[j](i) = bounds.lower(i) + width * (perm[j] + unit(rng));
  }
  return points;
}

}  // namespace romdb
