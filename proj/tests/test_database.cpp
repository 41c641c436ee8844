// SPDX-License-Identifier: Apache-2.0

#include "romdb/database.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <fstream>

using namespace romdb;
using namespace romdb::testing;

namespace {

RomDatabase random_database(Rng& rng, Index n_entries, Index k, Index n_w, ManifoldKind kind = ManifoldKind::Spd) {
  const auto b = ParamBounds(Vector::Constant(3, -1.0), Vector::Constant(3, 2.0));
  RomDatabase db(b, 0.0, kind);
  for (Index c = 0; c < n_entries; ++c) {
    RomEntry e{random_point(rng, b), random_spd(rng, k), random_vector(rng, k), Matrix()};
    if (n_w > 0) e.basis = pod_basis(random_matrix(rng, n_w, k), k);
    db.append(std::move(e));
  }
  return db;
}

void put_u32(std::vector<char>& bytes, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

/// Recompute the trailing checksum after a deliberate edit.
void reseal(std::vector<char>& bytes) {
  put_u32(bytes, bytes.size() - 4, detail::crc32(bytes.data(), bytes.size() - 4));
}

constexpr std::size_t kFlagsOffset = 6 + 2 + 16;

}  // namespace

TEST(RomDatabase, AppendValidatesShapesAndDuplicates) {
  RomDatabase db(ParamBounds::uniform(2, 0, 1));
  db.append({Vector::Constant(2, 0.5), Matrix::Identity(2, 2), Vector::Ones(2), Matrix()});
  EXPECT_THROW(db.append({Vector::Constant(2, 0.5), Matrix::Identity(2, 2), Vector::Ones(2), Matrix()}), ConfigError);
  EXPECT_THROW(db.append({Vector::Constant(2, 0.1), Matrix::Identity(3, 3), Vector::Ones(3), Matrix()}), ConfigError);
  EXPECT_THROW(db.append({Vector::Constant(3, 0.1), Matrix::Identity(2, 2), Vector::Ones(2), Matrix()}), ConfigError);
  EXPECT_THROW(db.append({Vector::Constant(2, 2.0), Matrix::Identity(2, 2), Vector::Ones(2), Matrix()}), ConfigError);
  EXPECT_THROW(db.append({Vector::Constant(2, 0.1), Matrix::Identity(2, 2), Vector::Ones(2), Matrix::Identity(4, 2)}),
               ConfigError);
  EXPECT_EQ(db.size(), 1);
}

TEST(RomDatabase, NearestUsesNormalizedDistanceAndBreaksTiesLow) {
  RomDatabase db(ParamBounds(Vector::Zero(2), (Vector(2) << 1.0, 100.0).finished()));
  db.append({(Vector(2) << 0.0, 50.0).finished(), Matrix::Identity(1, 1), Vector::Ones(1), Matrix()});
  db.append({(Vector(2) << 0.5, 0.0).finished(), Matrix::Identity(1, 1), Vector::Ones(1), Matrix()});
  // Raw distance would pick entry 0 (10.05 vs 40); scaled to the box, entry 1 is closer.
  EXPECT_EQ(db.nearest((Vector(2) << 1.0, 40.0).finished()), 1);
  EXPECT_EQ(db.nearest((Vector(2) << 0.25, 25.0).finished()), 0);
}

TEST(Persistence, RoundTripIsBitExact) {
  Rng rng(1);
  for (Index n_w : {Index(0), Index(17)}) {
    const RomDatabase db = random_database(rng, 9, 4, n_w, n_w ? ManifoldKind::Spd : ManifoldKind::Nonsingular);
    const auto bytes = serialize(db);
    const RomDatabase back = deserialize(bytes);
    EXPECT_TRUE(back == db);
    EXPECT_EQ(serialize(back), bytes);
    EXPECT_EQ(back.matrix_kind(), db.matrix_kind());
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.theta()), std::bit_cast<std::uint64_t>(db.theta()));
  }
}

TEST(Persistence, LayoutMatchesTheDocumentedSize) {
  Rng rng(2);
  const Index p = 5, k = 3, n_w = 11;
  const auto bytes = serialize(random_database(rng, p, k, n_w));
  const std::size_t header = 6 + 2 + 5 * 4 + 8 + 2 * 3 * 8;
  const std::size_t entry = 8 * (3 + k * k + k + n_w * k);
  EXPECT_EQ(bytes.size(), header + p * entry + 4);
  EXPECT_EQ(std::string(bytes.data(), 5), "ROMDB");
  EXPECT_EQ(bytes[5], '\x01');
  EXPECT_EQ(bytes[6], '\x01');
  EXPECT_EQ(bytes[7], '\x00');
  // bases stored, kind spd
  EXPECT_EQ(static_cast<unsigned char>(bytes[kFlagsOffset]), 1u | (2u << 1));
}

TEST(Persistence, SaveAndLoadThroughAFile) {
  Rng rng(3);
  TempDir dir;
  const RomDatabase db = random_database(rng, 4, 2, 6);
  save(db, dir.path() / "db.romdb");
  EXPECT_TRUE(load(dir.path() / "db.romdb") == db);
  EXPECT_THROW(load(dir.path() / "missing.romdb"), ConfigError);
}

TEST(Persistence, CorruptFilesRaiseFormatErrors) {
  Rng rng(4);
  const auto good = serialize(random_database(rng, 3, 2, 5));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize(bad_magic), FormatError);

  auto revision = good;
  revision[5] = '\x02';
  EXPECT_THROW(deserialize(revision), FormatError);

  auto future = good;
  future[6] = 2;
  reseal(future);
  EXPECT_THROW(deserialize(future), FormatError);

  auto truncated = good;
  truncated.resize(good.size() - 9);
  EXPECT_THROW(deserialize(truncated), FormatError);

  auto trailing = good;
  trailing.push_back('\0');
  EXPECT_THROW(deserialize(trailing), FormatError);

  auto flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize(flipped), FormatError);

  auto flags = good;
  flags[kFlagsOffset] = static_cast<char>(1u | (3u << 1));
  reseal(flags);
  EXPECT_THROW(deserialize(flags), FormatError);

  EXPECT_THROW(deserialize({}), FormatError);
}

TEST(Persistence, EmptyDatabaseCannotBeSaved) {
  EXPECT_THROW(serialize(RomDatabase(ParamBounds::uniform(1, 0, 1))), ConfigError);
}

TEST(Samplers, FullFactorialCoversTheGridFirstAxisFastest) {
  const auto b = ParamBounds(Vector::Zero(2), (Vector(2) << 1.0, 10.0).finished());
  const auto pts = full_factorial(b, {3, 2});
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0], (Vector(2) << 0.0, 0.0).finished());
  EXPECT_EQ(pts[1], (Vector(2) << 0.5, 0.0).finished());
  EXPECT_EQ(pts[2], (Vector(2) << 1.0, 0.0).finished());
  EXPECT_EQ(pts[3], (Vector(2) << 0.0, 10.0).finished());
  EXPECT_EQ(pts[5], (Vector(2) << 1.0, 10.0).finished());
  EXPECT_THROW(full_factorial(b, {1, 2}), ConfigError);
  EXPECT_THROW(full_factorial(b, {3}), ConfigError);
  EXPECT_THROW(full_factorial(b, {1000, 1000}, 1000), ConfigError);
}

TEST(Samplers, LatinHypercubeHasOnePointPerStratum) {
  const auto b = ParamBounds(Vector::Constant(3, -2.0), Vector::Constant(3, 6.0));
  for (int m : {1, 7, 40}) {
    const auto pts = latin_hypercube(b, m, 99);
    ASSERT_EQ(pts.size(), static_cast<std::size_t>(m));
    for (Index i = 0; i < 3; ++i) {
      std::vector<int> hits(m, 0);
      for (const auto& p : pts) {
        const int s = static_cast<int>((p(i) + 2.0) / 8.0 * m);
        ASSERT_GE(s, 0);
        ASSERT_LT(s, m);
        ++hits[s];
      }
      for (int h : hits) EXPECT_EQ(h, 1);
    }
  }
}

TEST(Samplers, LatinHypercubeIsDeterministicPerSeed) {
  const auto b = ParamBounds::uniform(2, 0, 1);
  EXPECT_EQ(latin_hypercube(b, 10, 5), latin_hypercube(b, 10, 5));
  EXPECT_NE(latin_hypercube(b, 10, 5), latin_hypercube(b, 10, 6));
}
