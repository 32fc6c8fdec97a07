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

#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qkm/errors.hpp"

namespace qkm {

enum class PayloadKind : std::uint8_t { RawState = 0, Latent = 1 };

/// T+1 snapshots of a fixed-shape real field sampled every dt. Values are
/// stored time-major, row-major within a snapshot.
struct TrajectoryDataset {
    PayloadKind kind = PayloadKind::RawState;
    std::vector<std::uint64_t> dims;
    std::uint64_t steps = 0;
    double dt = 1.0;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<double> values;

    std::size_t snapshot_size() const {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
    }
    std::size_t snapshot_count() const { return static_cast<std::size_t>(steps) + 1; }

    std::span<const double> snapshot(std::size_t k) const {
        return std::span<const double>(values).subspan(k * snapshot_size(), snapshot_size());
    }
    std::span<double> snapshot(std::size_t k) {
        return std::span<double>(values).subspan(k * snapshot_size(), snapshot_size());
    }

    std::optional<std::string> meta(const std::string &key) const {
        for (const auto &[k, v] : metadata)
            if (k == key) return v;
        return std::nullopt;
    }
    void set_meta(const std::string &key, std::string value) {
        for (auto &[k, v] : metadata) {
            if (k == key) {
                v = std::move(value);
                return;
            }
        }
        metadata.emplace_back(key, std::move(value));
    }

    /// Throws ShapeError / DomainError when the invariants do not hold.
    void validate() const {
        if (dims.empty() || dims.size() > 255) throw ShapeError("trajectory rank must be 1..255");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("trajectory dt must be positive and finite");
        if (values.size() != snapshot_count() * snapshot_size()) {
            throw ShapeError("trajectory holds " + std::to_string(values.size()) + " values, expected " +
                             std::to_string(snapshot_count() * snapshot_size()));
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i])) {
                throw DomainError("non-finite value in snapshot " + std::to_string(i / snapshot_size()));
            }
        }
    }
};

/// Equality on the exact bit patterns of every stored double.
inline bool bit_identical(const TrajectoryDataset &a, const TrajectoryDataset &b) {
    if (a.kind != b.kind || a.dims != b.dims || a.steps != b.steps || a.metadata != b.metadata) return false;
    if (std::bit_cast<std::uint64_t>(a.dt) != std::bit_cast<std::uint64_t>(b.dt)) return false;
    return a.values.size() == b.values.size() &&
           std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------
// QKTRAJ binary container (little-endian)
//
//   "QKTRAJ\0"  u32 version=1
//   u8 kind  u8 rank  u64 dims[rank]  u64 T  f64 dt
//   u32 pair_count, then per pair: u32 len, key bytes, u32 len, value bytes
//   f64 payload[(T+1) * prod(dims)]

inline constexpr char kTrajectoryMagic[7] = {'Q', 'K', 'T', 'R', 'A', 'J', '\0'};
inline constexpr std::uint32_t kTrajectoryVersion = 1;

namespace detail {

class ByteWriter {
   public:
    void raw(const void *p, std::size_t n) {
        const auto *b = static_cast<const std::uint8_t *>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    template <typename U>
    void le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string &s) {
        le(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    std::vector<std::uint8_t> bytes;
};

class ByteReader {
   public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    void need(std::size_t n, const char *what) const {
        if (remaining() < n) {
            throw FormatError(std::string("truncated ") + what + ": need " + std::to_string(n) +
                                  " bytes, " + std::to_string(remaining()) + " left",
                              pos_);
        }
    }
    template <typename U>
    U le(const char *what) {
        need(sizeof(U), what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }
    double f64(const char *what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }
    std::string str(const char *what) {
        const auto n = le<std::uint32_t>(what);
        need(n, what);
        std::string s(reinterpret_cast<const char *>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::span<const std::uint8_t> bytes(std::size_t n, const char *what) {
        need(n, what);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

   private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_trajectory(const TrajectoryDataset &ds) {
    ds.validate();
    detail::ByteWriter w;
    w.raw(kTrajectoryMagic, sizeof(kTrajectoryMagic));
    w.le(kTrajectoryVersion);
    w.le(static_cast<std::uint8_t>(ds.kind));
    w.le(static_cast<std::uint8_t>(ds.dims.size()));
    for (auto d : ds.dims) w.le(d);
    w.le(ds.steps);
    w.f64(ds.dt);
    w.le(static_cast<std::uint32_t>(ds.metadata.size()));
    for (const auto &[k, v] : ds.metadata) {
        w.str(k);
        w.str(v);
    }
    w.bytes.reserve(w.bytes.size() + ds.values.size() * 8);
    for (double v : ds.values) w.f64(v);
    return std::move(w.bytes);
}

inline TrajectoryDataset decode_trajectory(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    auto magic = r.bytes(sizeof(kTrajectoryMagic), "magic");
    if (!std::equal(magic.begin(), magic.end(), kTrajectoryMagic)) throw FormatError("bad magic, not a QKTRAJ file", 0);
    const std::size_t version_at = r.offset();
    const auto version = r.le<std::uint32_t>("version");
    if (version != kTrajectoryVersion) {
        throw FormatError("unsupported version " + std::to_string(version), version_at);
    }
    TrajectoryDataset ds;
    const std::size_t kind_at = r.offset();
    const auto kind = r.le<std::uint8_t>("payload kind");
    if (kind > 1) throw FormatError("unknown payload kind " + std::to_string(kind), kind_at);
    ds.kind = static_cast<PayloadKind>(kind);
    const std::size_t rank_at = r.offset();
    const auto rank = r.le<std::uint8_t>("rank");
    if (rank == 0) throw FormatError("rank must be at least 1", rank_at);
    for (unsigned i = 0; i < rank; ++i) {
        const std::size_t at = r.offset();
        const auto d = r.le<std::uint64_t>("dims");
        if (d == 0) throw FormatError("zero-length dimension", at);
        ds.dims.push_back(d);
    }
    ds.steps = r.le<std::uint64_t>("step count");
    ds.dt = r.f64("dt");
    const auto pairs = r.le<std::uint32_t>("metadata count");
    for (std::uint32_t i = 0; i < pairs; ++i) {
        auto key = r.str("metadata key");
        auto value = r.str("metadata value");
        ds.metadata.emplace_back(std::move(key), std::move(value));
    }
    const std::size_t payload_at = r.offset();
    // Sizes come from an untrusted header; guard the products.
    std::size_t expected_values = ds.steps + 1;
    for (auto d : ds.dims) {
        if (d != 0 && expected_values > (SIZE_MAX / 8) / d) throw FormatError("declared payload too large", payload_at);
        expected_values *= d;
    }
    if (ds.steps + 1 == 0 || r.remaining() != expected_values * 8) {
        throw FormatError("payload length mismatch: header declares " + std::to_string(expected_values * 8) +
                              " bytes, file has " + std::to_string(r.remaining()),
                          payload_at);
    }
    ds.values.resize(expected_values);
    for (auto &v : ds.values) v = r.f64("payload");
    if (!(ds.dt > 0.0) || !std::isfinite(ds.dt)) throw FormatError("dt must be positive and finite", payload_at);
    return ds;
}

inline void write_trajectory(const std::filesystem::path &path, const TrajectoryDataset &ds) {
    const auto bytes = encode_trajectory(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("short write to " + path.string());
}

inline TrajectoryDataset read_trajectory(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trajectory file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_trajectory(bytes);
}

// ---------------------------------------------------------------------------
// CSV import
//
// Manifest: '#' comments, one `dt = <value>` line, then one snapshot file per
// line in time order (paths relative to the manifest). Each snapshot file is
// comma-separated numbers; a single row gives a rank-1 field, several rows a
// rows x cols grid.

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline double parse_double(const std::string &token, const std::string &where) {
    const std::string t = trim(token);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError("cannot parse number '" + t + "' in " + where);
    }
    return v;
}

}  // namespace detail

inline TrajectoryDataset import_csv_manifest(const std::filesystem::path &manifest) {
    std::ifstream in(manifest);
    if (!in) throw ConfigError("cannot open manifest " + manifest.string());
    std::optional<double> dt;
    std::vector<std::filesystem::path> files;
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (const auto eq = line.find('='); eq != std::string::npos) {
            if (detail::trim(line.substr(0, eq)) != "dt") throw ConfigError("unknown manifest key in '" + line + "'");
            dt = detail::parse_double(line.substr(eq + 1), manifest.string());
            continue;
        }
        files.push_back(manifest.parent_path() / line);
    }
    if (!dt) throw ConfigError("manifest " + manifest.string() + " does not declare dt");
    if (files.empty()) throw ConfigError("manifest " + manifest.string() + " lists no snapshots");

    TrajectoryDataset ds;
    ds.dt = *dt;
    ds.steps = files.size() - 1;
    ds.set_meta("system", "csv-import");
    ds.set_meta("source", manifest.filename().string());
    for (std::size_t k = 0; k < files.size(); ++k) {
        std::ifstream f(files[k]);
        if (!f) throw ConfigError("cannot open snapshot " + files[k].string());
        std::vector<std::vector<double>> rows;
        while (std::getline(f, line)) {
            if (detail::trim(line).empty()) continue;
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) row.push_back(detail::parse_double(cell, files[k].string()));
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw ConfigError("snapshot " + files[k].string() + " is empty");
        std::vector<std::uint64_t> dims;
        if (rows.size() == 1) {
            dims = {rows[0].size()};
        } else {
            dims = {rows.size(), rows[0].size()};
        }
        for (const auto &row : rows) {
            if (row.size() != rows[0].size()) throw ShapeError("ragged rows in " + files[k].string());
        }
        if (k == 0) {
            ds.dims = dims;
        } else if (dims != ds.dims) {
            throw ShapeError("snapshot " + files[k].string() + " changes the field shape");
        }
        for (const auto &row : rows) ds.values.insert(ds.values.end(), row.begin(), row.end());
    }
    ds.validate();
    return ds;
}

}  // namespace qkm
