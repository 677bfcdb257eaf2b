// Copyright 2026 The weakqubit Authors
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
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "weakqubit/dsp.hpp"

namespace dsp = weakqubit::dsp;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double mean = 0.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> d(mean, 1.0);
    std::vector<double> v(n);
    for (auto &x : v) x = d(g);
    return v;
}

}  // namespace

TEST(SplitBatches, CoversRangeContiguously) {
    const auto b = dsp::split_batches(7, 107, 3);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0].begin, 7u);
    EXPECT_EQ(b[0].end, 40u);
    EXPECT_EQ(b[1].begin, 40u);
    EXPECT_EQ(b[2].end, 107u);
    EXPECT_EQ(b[2].size(), 34u);
}

TEST(NextPow2, Values) {
    EXPECT_EQ(dsp::next_pow2(1), 1u);
    EXPECT_EQ(dsp::next_pow2(5), 8u);
    EXPECT_EQ(dsp::next_pow2(1024), 1024u);
    EXPECT_EQ(dsp::next_pow2(1025), 2048u);
}

TEST(CrossCorrelation, FftPathMatchesDirectSums) {
    const std::size_t n = 150000, lag = 300;
    const auto x = noise(n, 1, 0.4), y = noise(n, 2, -0.2);
    const auto fast = dsp::batched_cross_correlation(x, 0.4, y, -0.2, lag, 7, 1234);
    const auto slow = dsp::batched_cross_correlation_direct(x, 0.4, y, -0.2, lag, 7, 1234);
    for (std::size_t s = 0; s < 7; ++s)
        for (std::size_t m = 0; m <= lag; ++m) {
            EXPECT_EQ(fast.counts[s][m], slow.counts[s][m]);
            EXPECT_NEAR(fast.sums[s][m], slow.sums[s][m], 1e-8 * (1 + std::abs(slow.sums[s][m])));
        }
}

TEST(CrossCorrelation, DirectSumOfKnownSequence) {
    const std::vector<double> x = {1, 2, 3, 4};
    const auto bc = dsp::batched_cross_correlation_direct(x, 0.0, x, 0.0, 2, 1);
    EXPECT_EQ(bc.sums[0][0], 30.0);
    EXPECT_EQ(bc.sums[0][1], 20.0);  // 1*2 + 2*3 + 3*4
    EXPECT_EQ(bc.sums[0][2], 11.0);  // 1*3 + 2*4
    EXPECT_EQ(bc.counts[0][2], 2.0);
    EXPECT_DOUBLE_EQ(bc.mean(1), 20.0 / 3.0);
}

TEST(StreamValidCorrelation, MatchesDirectConvolution) {
    const std::size_t n = 40000, K = 513;
    const auto re = noise(n, 3), im = noise(n, 4), ker = noise(K, 5);
    std::vector<std::complex<double>> got(n - K + 1);
    std::size_t calls = 0, last = 0;
    dsp::stream_valid_correlation(
        n, [&](std::size_t i) { return std::complex<double>(re[i], im[i]); }, ker,
        [&](std::size_t j, std::complex<double> v) {
            if (calls > 0) {
                EXPECT_EQ(j, last + 1);
            }
            last = j;
            ++calls;
            got[j] = v;
        });
    ASSERT_EQ(calls, n - K + 1);
    for (std::size_t j = 0; j < got.size(); j += 997) {
        std::complex<double> want = 0;
        for (std::size_t m = 0; m < K; ++m) want += ker[m] * std::complex<double>(re[j + m], im[j + m]);
        EXPECT_NEAR(got[j].real(), want.real(), 1e-9);
        EXPECT_NEAR(got[j].imag(), want.imag(), 1e-9);
    }
}

TEST(Window, PeriodicHannSumsToHalfLength) {
    const auto w = dsp::hann_window(1000);
    EXPECT_EQ(w[0], 0.0);
    EXPECT_NEAR(w[500], 1.0, 1e-15);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 500.0, 1e-9);
    double s2 = 0;
    for (double v : w) s2 += v * v;
    EXPECT_NEAR(s2, 375.0, 1e-9);
}

TEST(Trapezoid, ExactForLinearAndConvergentForSmooth) {
    const std::vector<double> lin = {0, 1, 2, 3};
    EXPECT_DOUBLE_EQ(dsp::trapezoid(lin, 0.5), 2.25);
    std::vector<double> s(1001);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(M_PI * i / 1000.0);
    EXPECT_NEAR(dsp::trapezoid(s, M_PI / 1000.0), 2.0, 1e-5);
}

TEST(BatchStats, MeanAndStandardError) {
    const std::vector<double> v = {1, 2, 3, 4};
    const auto r = dsp::batch_mean_stderr(v);
    EXPECT_DOUBLE_EQ(r.mean, 2.5);
    EXPECT_NEAR(r.sem, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
    EXPECT_EQ(dsp::batch_mean_stderr(std::vector<double>{7}).sem, 0.0);
}
