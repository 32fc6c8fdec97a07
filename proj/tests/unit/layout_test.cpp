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

#include <cmath>
#include <numbers>
#include <vector>

#include "qkm/layout.hpp"

namespace qkm {
namespace {

TEST(BuildLayout, HalvingDimensions) {
    const auto layout = build_layout(16384, 16, 4);
    EXPECT_EQ(layout.dims(), (std::vector<std::uint64_t>{262144, 131072, 65536, 32768}));
    EXPECT_EQ(layout.qubits(), (std::vector<unsigned>{18, 17, 16, 15}));
    EXPECT_EQ(layout.total(), 491520u);
    EXPECT_EQ(layout.offset(1), 0u);
    EXPECT_EQ(layout.offset(4), 262144u + 131072u + 65536u);
}

TEST(BuildLayout, SmallCase) {
    const auto layout = build_layout(4, 2, 3);
    EXPECT_EQ(layout.dims(), (std::vector<std::uint64_t>{8, 4, 2}));
    EXPECT_EQ(layout.total(), 14u);
    EXPECT_EQ(layout.qubit_count(3), 1u);
}

TEST(BuildLayout, TotalMatchesClosedForm) {
    for (std::uint64_t cd : {2, 4, 16, 1024}) {
        const unsigned n1 = static_cast<unsigned>(std::log2(cd));
        for (std::uint64_t h = 1; h <= n1; ++h) {
            const auto layout = build_layout(cd, 1, h);
            const double closed = (2.0 - std::pow(2.0, 1.0 - static_cast<double>(h))) * static_cast<double>(cd);
            EXPECT_EQ(static_cast<double>(layout.total()), closed);
        }
    }
}

TEST(BuildLayout, Rejections) {
    EXPECT_THROW(build_layout(12, 1, 1), LayoutError);
    EXPECT_THROW(build_layout(6, 2, 1), LayoutError);
    EXPECT_THROW(build_layout(8, 1, 4), LayoutError);
    EXPECT_THROW(build_layout(0, 1, 1), LayoutError);
    EXPECT_NO_THROW(build_layout(8, 1, 3));
}

TEST(BuildLayout, IndexOutOfRange) {
    const auto layout = build_layout(8, 1, 2);
    EXPECT_THROW(layout.dim(0), IndexError);
    EXPECT_THROW(layout.dim(3), IndexError);
}

TEST(WrapPhase, Range) {
    EXPECT_DOUBLE_EQ(wrap_phase(std::numbers::pi), std::numbers::pi);
    EXPECT_NEAR(wrap_phase(-std::numbers::pi), std::numbers::pi, 1e-15);
    EXPECT_NEAR(wrap_phase(6.0), 6.0 - 2 * std::numbers::pi, 1e-15);
    EXPECT_NEAR(wrap_phase(7 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-14);
}

TEST(Observable, AssembleAndValidate) {
    const std::vector<double> r{1.0, 2.0};
    const std::vector<double> phi{0.0, std::numbers::pi / 2};
    const auto z = assemble_observable(r, phi);
    EXPECT_NEAR(z[0].real(), 1.0, 1e-15);
    EXPECT_NEAR(z[1].imag(), 2.0, 1e-15);
    EXPECT_NEAR(z[1].real(), 0.0, 1e-15);
    EXPECT_THROW(assemble_observable(std::vector<double>{1.0}, phi), ShapeError);
    EXPECT_THROW(assemble_observable(std::vector<double>{-1.0, 1.0}, phi), DomainError);
}

TEST(Observable, SplitBlocks) {
    const auto layout = build_layout(4, 2, 3);
    std::vector<double> r(14), phi(14);
    for (int i = 0; i < 14; ++i) {
        r[i] = i;
        phi[i] = -i * 0.1;
    }
    const ObservableState state(layout, r, phi);
    const auto view = split_observable(state, 2);
    ASSERT_EQ(view.modulus.size(), 4u);
    EXPECT_EQ(view.modulus[0], 8.0);
    EXPECT_DOUBLE_EQ(view.phase[3], -1.1);
    EXPECT_THROW(ObservableState(layout, std::vector<double>(13), std::vector<double>(13)), ShapeError);
}

TEST(BuildLayout, SingleSubsystem) {
    const auto layout = build_layout(8, 2, 1);
    EXPECT_EQ(layout.dims(), (std::vector<std::uint64_t>{16}));
    EXPECT_EQ(layout.total(), 16u);
}

TEST(Observable, PolarCases) {
    const auto one = assemble_observable(std::vector<double>{1.0}, std::vector<double>{0.0});
    EXPECT_EQ(one[0], Complex(1.0, 0.0));
    const auto zero = assemble_observable(std::vector<double>{0.0}, std::vector<double>{1.234});
    EXPECT_EQ(std::abs(zero[0]), 0.0);
}

TEST(Observable, SplitRoundTrip) {
    const auto whole = build_layout(8, 1, 1);
    const ObservableState s1(whole, std::vector<double>(8, 2.0), std::vector<double>(8, 0.5));
    EXPECT_EQ(split_observable(s1, 1).modulus.size(), 8u);

    const auto layout = build_layout(4, 2, 3);
    std::vector<double> r(14), phi(14);
    for (int i = 0; i < 14; ++i) {
        r[i] = 1.0 + i;
        phi[i] = 0.01 * i;
    }
    const ObservableState s(layout, r, phi);
    std::vector<double> rr, pp;
    for (std::size_t j = 1; j <= 3; ++j) {
        const auto v = split_observable(s, j);
        rr.insert(rr.end(), v.modulus.begin(), v.modulus.end());
        pp.insert(pp.end(), v.phase.begin(), v.phase.end());
    }
    EXPECT_EQ(rr, r);
    EXPECT_EQ(pp, phi);
    EXPECT_EQ(split_observable(s, 2).modulus.data(), s.modulus().data() + 8);
}

}  // namespace
}  // namespace qkm
