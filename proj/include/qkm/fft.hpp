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

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "qkm/errors.hpp"

namespace qkm::fft {

// Thin FFTW wrapper. Unnormalized forward transform, 1/N inverse.
//
// Plans are created once per (shape, direction) under a mutex and executed
// through the new-array interface on fftw_malloc'd scratch, so every call sees
// identical alignment and produces bit-identical output.

namespace detail {

struct PlanDeleter {
    void operator()(fftw_plan_s *p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct Buffer {
    explicit Buffer(std::size_t n)
        : data(static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * (n ? n : 1)))) {}
    ~Buffer() { fftw_free(data); }
    Buffer(const Buffer &) = delete;
    Buffer &operator=(const Buffer &) = delete;
    fftw_complex *data;
};

inline std::mutex &planner_mutex() {
    static std::mutex m;
    return m;
}

inline fftw_plan_s *plan_for(std::size_t rows, std::size_t cols, int sign) {
    static std::map<std::tuple<std::size_t, std::size_t, int>, Plan> cache;
    std::lock_guard lock(planner_mutex());
    auto key = std::make_tuple(rows, cols, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second.get();
    Buffer in(rows * cols), out(rows * cols);
    fftw_plan p = rows == 1 ? fftw_plan_dft_1d(static_cast<int>(cols), in.data, out.data, sign,
                                               FFTW_ESTIMATE)
                            : fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols),
                                               in.data, out.data, sign, FFTW_ESTIMATE);
    if (p == nullptr) throw ShapeError("FFTW could not plan the requested transform");
    return cache.emplace(key, Plan(p)).first->second.get();
}

inline std::vector<std::complex<double>> run(std::span<const std::complex<double>> input,
                                             std::size_t rows, std::size_t cols, int sign) {
    if (input.size() != rows * cols || input.empty()) {
        throw ShapeError("transform input has " + std::to_string(input.size()) + " values, shape needs " +
                         std::to_string(rows * cols));
    }
    fftw_plan_s *plan = plan_for(rows, cols, sign);
    Buffer in(input.size()), out(input.size());
    std::memcpy(in.data, input.data(), sizeof(fftw_complex) * input.size());
    fftw_execute_dft(plan, in.data, out.data);
    std::vector<std::complex<double>> result(input.size());
    for (std::size_t i = 0; i < result.size(); ++i) result[i] = {out.data[i][0], out.data[i][1]};
    return result;
}

}  // namespace detail

inline std::vector<std::complex<double>> forward(std::span<const std::complex<double>> x) {
    return detail::run(x, 1, x.size(), FFTW_FORWARD);
}

inline std::vector<std::complex<double>> forward(std::span<const double> x) {
    std::vector<std::complex<double>> c(x.begin(), x.end());
    return forward(c);
}

inline std::vector<std::complex<double>> inverse(std::span<const std::complex<double>> spectrum) {
    auto out = detail::run(spectrum, 1, spectrum.size(), FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(spectrum.size());
    for (auto &v : out) v *= scale;
    return out;
}

/// Row-major 2D forward transform of a rows x cols grid.
inline std::vector<std::complex<double>> forward_2d(std::span<const double> grid, std::size_t rows,
                                                    std::size_t cols) {
    std::vector<std::complex<double>> c(grid.begin(), grid.end());
    return detail::run(c, rows, cols, FFTW_FORWARD);
}

/// Integer wavenumber of DFT bin m on a length-n grid: 0..n/2 then -n/2+1..-1.
/// The Nyquist bin (even n) is assigned +n/2.
inline long wavenumber(std::size_t m, std::size_t n) {
    const auto sm = static_cast<long>(m);
    const auto sn = static_cast<long>(n);
    return sm <= sn / 2 ? sm : sm - sn;
}

}  // namespace qkm::fft
