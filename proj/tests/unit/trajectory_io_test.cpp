// Copyright 2026 The QKM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "qkm/trajectory_io.hpp"

namespace qkm {
namespace {

TrajectoryDataset sample() {
    TrajectoryDataset ds;
    ds.kind = PayloadKind::RawState;
    ds.dims = {2, 3};
    ds.steps = 1;
    ds.dt = 0.25;
    ds.metadata = {{"system", "test"}, {"seed", "7"}};
    ds.values = {1.0, -2.0, 0.5, 1e-300, -0.0, 3.25, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};
    return ds;
}

void put_u(std::vector<std::uint8_t> &out, std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_str(std::vector<std::uint8_t> &out, const std::string &s) {
    put_u(out, s.size(), 4);
    out.insert(out.end(), s.begin(), s.end());
}

// Byte image written by hand from the container description.
std::vector<std::uint8_t> reference_bytes(const TrajectoryDataset &ds) {
    std::vector<std::uint8_t> out{'Q', 'K', 'T', 'R', 'A', 'J', 0};
    put_u(out, 1, 4);
    put_u(out, static_cast<std::uint8_t>(ds.kind), 1);
    put_u(out, ds.dims.size(), 1);
    for (auto d : ds.dims) put_u(out, d, 8);
    put_u(out, ds.steps, 8);
    put_u(out, std::bit_cast<std::uint64_t>(ds.dt), 8);
    put_u(out, ds.metadata.size(), 4);
    for (const auto &[k, v] : ds.metadata) {
        put_str(out, k);
        put_str(out, v);
    }
    for (double v : ds.values) put_u(out, std::bit_cast<std::uint64_t>(v), 8);
    return out;
}

std::size_t expect_format_error(const std::vector<std::uint8_t> &bytes) {
    try {
        decode_trajectory(bytes);
    } catch (const FormatError &e) {
        return e.offset();
    }
    ADD_FAILURE() << "no FormatError";
    return SIZE_MAX;
}

TEST(TrajectoryFormat, MatchesHandWrittenLayout) {
    EXPECT_EQ(encode_trajectory(sample()), reference_bytes(sample()));
}

TEST(TrajectoryFormat, RoundTripIsBitExact) {
    const auto ds = sample();
    const auto back = decode_trajectory(encode_trajectory(ds));
    EXPECT_TRUE(bit_identical(ds, back));
    EXPECT_TRUE(std::signbit(back.values[4]));
    EXPECT_EQ(back.meta("seed"), std::optional<std::string>("7"));

    const auto path = std::filesystem::temp_directory_path() / "qkm_io_roundtrip.qktraj";
    write_trajectory(path, ds);
    EXPECT_TRUE(bit_identical(ds, read_trajectory(path)));
    std::filesystem::remove(path);
}

TEST(TrajectoryFormat, CorruptionOffsets) {
    const auto good = encode_trajectory(sample());

    auto bad_magic = good;
    bad_magic[2] = 'X';
    EXPECT_EQ(expect_format_error(bad_magic), 0u);

    auto bad_version = good;
    bad_version[7] = 2;
    EXPECT_EQ(expect_format_error(bad_version), 7u);

    auto bad_kind = good;
    bad_kind[11] = 5;
    EXPECT_EQ(expect_format_error(bad_kind), 11u);

    auto zero_rank = good;
    zero_rank[12] = 0;
    EXPECT_EQ(expect_format_error(zero_rank), 12u);

    const std::size_t payload_at = good.size() - 12 * 8;
    auto truncated = good;
    truncated.resize(truncated.size() - 3);
    EXPECT_EQ(expect_format_error(truncated), payload_at);

    auto extended = good;
    extended.push_back(0);
    EXPECT_EQ(expect_format_error(extended), payload_at);

    auto header_only = good;
    header_only.resize(20);
    EXPECT_EQ(expect_format_error(header_only), 13u);

    EXPECT_EQ(expect_format_error({}), 0u);
}

TEST(TrajectoryFormat, PayloadMismatchMessage) {
    auto bytes = encode_trajectory(sample());
    bytes.resize(bytes.size() - 8);
    try {
        decode_trajectory(bytes);
        FAIL();
    } catch (const FormatError &e) {
        EXPECT_NE(std::string(e.what()).find("header declares 96 bytes, file has 88"), std::string::npos);
    }
}

TEST(TrajectoryFormat, ValidateRejectsBadDatasets) {
    auto ds = sample();
    ds.values.pop_back();
    EXPECT_THROW(encode_trajectory(ds), ShapeError);
    ds = sample();
    ds.values[3] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(encode_trajectory(ds), DomainError);
    ds = sample();
    ds.dt = 0.0;
    EXPECT_THROW(encode_trajectory(ds), DomainError);
}

TEST(CsvManifest, ImportsGridSnapshots) {
    const auto dir = std::filesystem::temp_directory_path() / "qkm_csv_manifest";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "s0.csv") << "1,2,3\n4,5,6\n";
    std::ofstream(dir / "s1.csv") << "7,8,9\n10,11,12\n";
    std::ofstream(dir / "manifest.txt") << "# two snapshots\ndt = 0.5\ns0.csv\ns1.csv\n";
    const auto ds = import_csv_manifest(dir / "manifest.txt");
    EXPECT_EQ(ds.dims, (std::vector<std::uint64_t>{2, 3}));
    EXPECT_EQ(ds.steps, 1u);
    EXPECT_EQ(ds.dt, 0.5);
    EXPECT_EQ(ds.values.back(), 12.0);

    std::ofstream(dir / "s2.csv") << "1,2\n";
    std::ofstream(dir / "bad.txt") << "dt = 0.5\ns0.csv\ns2.csv\n";
    EXPECT_THROW(import_csv_manifest(dir / "bad.txt"), ShapeError);
    std::ofstream(dir / "nodt.txt") << "s0.csv\n";
    EXPECT_THROW(import_csv_manifest(dir / "nodt.txt"), ConfigError);
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace qkm
