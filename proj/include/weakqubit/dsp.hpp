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

#pragma once

// FFT building blocks on top of FFTW3. Plans are created with FFTW_ESTIMATE
// on fftw_malloc'ed buffers, which makes results reproducible run to run.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstring>
#include <mutex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace weakqubit::dsp {

/// The FFTW planner is not thread safe.
inline std::mutex &planner_mutex() {
    static std::mutex m;
    return m;
}

template <typename T>
class FftwBuffer {
   public:
    explicit FftwBuffer(std::size_t n) : n_(n), p_(static_cast<T *>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)))) {
        if (!p_) throw std::bad_alloc();
        zero();
    }
    ~FftwBuffer() { fftw_free(p_); }
    FftwBuffer(const FftwBuffer &) = delete;
    FftwBuffer &operator=(const FftwBuffer &) = delete;

    T *data() { return p_; }
    const T *data() const { return p_; }
    std::size_t size() const { return n_; }
    T &operator[](std::size_t i) { return p_[i]; }
    const T &operator[](std::size_t i) const { return p_[i]; }
    void zero() { std::memset(static_cast<void *>(p_), 0, sizeof(T) * n_); }

   private:
    std::size_t n_;
    T *p_;
};

class FftwPlan {
   public:
    FftwPlan() = default;
    explicit FftwPlan(fftw_plan p) : p_(p) {
        if (!p_) throw std::runtime_error("FFTW planning failed");
    }
    ~FftwPlan() { reset(); }
    FftwPlan(FftwPlan &&o) noexcept : p_(o.p_) { o.p_ = nullptr; }
    FftwPlan &operator=(FftwPlan &&o) noexcept {
        if (this != &o) {
            reset();
            p_ = o.p_;
            o.p_ = nullptr;
        }
        return *this;
    }
    void execute() const { fftw_execute(p_); }

   private:
    void reset() {
        if (p_) {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(p_);
        }
        p_ = nullptr;
    }
    fftw_plan p_ = nullptr;
};

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Real forward transform of fixed size n with an owned input/output pair.
class RealFft {
   public:
    explicit RealFft(std::size_t n) : n_(n), in_(n), out_(n / 2 + 1) {
        std::lock_guard lock(planner_mutex());
        plan_ = FftwPlan(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.data(), out_.data(), FFTW_ESTIMATE));
    }
    std::size_t size() const { return n_; }
    double *input() { return in_.data(); }
    std::complex<double> bin(std::size_t k) const { return {out_[k][0], out_[k][1]}; }
    void execute() { plan_.execute(); }

   private:
    std::size_t n_;
    FftwBuffer<double> in_;
    FftwBuffer<fftw_complex> out_;
    FftwPlan plan_;
};

/// Half-open sample range [begin, end).
struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

/// Splits [first, n) into `count` contiguous batches; the last one absorbs the remainder.
inline std::vector<Range> split_batches(std::size_t first, std::size_t n, std::size_t count) {
    std::vector<Range> out;
    const std::size_t len = (n - first) / count;
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t b = first + s * len;
        out.push_back({b, s + 1 == count ? n : b + len});
    }
    return out;
}

/// Lagged products accumulated per batch: sums[s][m] = sum over n in batch s
/// with n + m < N of x_n y_{n+m}, for m = 0..maxLag.
struct BatchedCorrelation {
    std::size_t maxLag = 0;
    std::vector<Range> batches;
    std::vector<std::vector<double>> sums;
    std::vector<std::vector<double>> counts;

    double batch_mean(std::size_t s, std::size_t m) const { return sums[s][m] / counts[s][m]; }
    double mean(std::size_t m) const {
        double num = 0.0, den = 0.0;
        for (std::size_t s = 0; s < sums.size(); ++s) {
            num += sums[s][m];
            den += counts[s][m];
        }
        return num / den;
    }
};

/// Direct O(N * maxLag) evaluation. Independent of the FFT path; used for
/// short records and in tests.
inline BatchedCorrelation batched_cross_correlation_direct(std::span<const double> x, double xOffset,
                                                           std::span<const double> y, double yOffset,
                                                           std::size_t maxLag, std::size_t batches,
                                                           std::size_t first = 0) {
    const std::size_t n = x.size();
    BatchedCorrelation bc;
    bc.maxLag = maxLag;
    bc.batches = split_batches(first, n, batches);
    bc.sums.assign(batches, std::vector<double>(maxLag + 1, 0.0));
    bc.counts.assign(batches, std::vector<double>(maxLag + 1, 0.0));
    for (std::size_t s = 0; s < batches; ++s) {
        const Range r = bc.batches[s];
        for (std::size_t m = 0; m <= maxLag; ++m) {
            double acc = 0.0;
            std::size_t cnt = 0;
            for (std::size_t i = r.begin; i < r.end && i + m < n; ++i, ++cnt) acc += (x[i] - xOffset) * (y[i + m] - yOffset);
            bc.sums[s][m] = acc;
            bc.counts[s][m] = static_cast<double>(cnt);
        }
    }
    return bc;
}

/// Same quantity as batched_cross_correlation_direct, computed block-wise with
/// zero-padded FFTs: for a block x[c, c+b) and y[c, c+b+maxLag) of an FFT of
/// size P >= b + maxLag, IFFT(conj(X) Y)[m] / P holds the lag-m sum with no
/// circular wrap for m <= maxLag.
inline BatchedCorrelation batched_cross_correlation(std::span<const double> x, double xOffset,
                                                    std::span<const double> y, double yOffset, std::size_t maxLag,
                                                    std::size_t batches, std::size_t first = 0) {
    if (x.size() != y.size()) throw std::invalid_argument("cross correlation needs equal lengths");
    const std::size_t n = x.size();
    if (maxLag < 32 || n < 16 * (maxLag + 1))
        return batched_cross_correlation_direct(x, xOffset, y, yOffset, maxLag, batches, first);

    const std::size_t P = next_pow2(std::max<std::size_t>(4 * (maxLag + 1), std::size_t{1} << 15));
    const std::size_t B = P - maxLag;
    const std::size_t nc = P / 2 + 1;
    FftwBuffer<double> xin(P), yin(P), rout(P);
    FftwBuffer<fftw_complex> X(nc), Y(nc);
    FftwPlan px, py, pinv;
    {
        std::lock_guard lock(planner_mutex());
        px = FftwPlan(fftw_plan_dft_r2c_1d(static_cast<int>(P), xin.data(), X.data(), FFTW_ESTIMATE));
        py = FftwPlan(fftw_plan_dft_r2c_1d(static_cast<int>(P), yin.data(), Y.data(), FFTW_ESTIMATE));
        pinv = FftwPlan(fftw_plan_dft_c2r_1d(static_cast<int>(P), X.data(), rout.data(), FFTW_ESTIMATE));
    }

    BatchedCorrelation bc;
    bc.maxLag = maxLag;
    bc.batches = split_batches(first, n, batches);
    bc.sums.assign(batches, std::vector<double>(maxLag + 1, 0.0));
    bc.counts.assign(batches, std::vector<double>(maxLag + 1, 0.0));
    const double inv = 1.0 / static_cast<double>(P);

    for (std::size_t s = 0; s < batches; ++s) {
        const Range r = bc.batches[s];
        for (std::size_t m = 0; m <= maxLag; ++m) {
            const std::size_t last = std::min(r.end, n - std::min(n, m));
            bc.counts[s][m] = last > r.begin ? static_cast<double>(last - r.begin) : 0.0;
        }
        for (std::size_t c = r.begin; c < r.end; c += B) {
            const std::size_t b = std::min(B, r.end - c);
            const std::size_t yb = std::min(b + maxLag, n - c);
            for (std::size_t i = 0; i < P; ++i) {
                xin[i] = i < b ? x[c + i] - xOffset : 0.0;
                yin[i] = i < yb ? y[c + i] - yOffset : 0.0;
            }
            px.execute();
            py.execute();
            for (std::size_t k = 0; k < nc; ++k) {
                const double xr = X[k][0], xi = X[k][1], yr = Y[k][0], yi = Y[k][1];
                // conj(X) * Y, written back into X (input of the inverse plan).
                X[k][0] = xr * yr + xi * yi;
                X[k][1] = xr * yi - xi * yr;
            }
            pinv.execute();
            auto &acc = bc.sums[s];
            for (std::size_t m = 0; m <= maxLag; ++m) acc[m] += rout[m] * inv;
        }
    }
    return bc;
}

/// Streams the valid-mode correlation out[j] = sum_m kernel[m] z[j + m],
/// j = 0..N-K, to sink(j, out[j]) in increasing j. `z(i)` produces sample i
/// on demand so the complex input never has to be materialized.
template <typename Source, typename Sink>
void stream_valid_correlation(std::size_t n, Source &&z, std::span<const double> kernel, Sink &&sink) {
    const std::size_t K = kernel.size();
    if (K == 0 || n < K) return;
    const std::size_t outputs = n - K + 1;
    const std::size_t P = next_pow2(std::max<std::size_t>(4 * K, std::size_t{1} << 14));
    const std::size_t B = P - K + 1;
    FftwBuffer<fftw_complex> kin(P), kf(P), zin(P), zf(P), rout(P);
    FftwPlan pk, pz, pinv;
    {
        std::lock_guard lock(planner_mutex());
        pk = FftwPlan(fftw_plan_dft_1d(static_cast<int>(P), kin.data(), kf.data(), FFTW_FORWARD, FFTW_ESTIMATE));
        pz = FftwPlan(fftw_plan_dft_1d(static_cast<int>(P), zin.data(), zf.data(), FFTW_FORWARD, FFTW_ESTIMATE));
        pinv = FftwPlan(fftw_plan_dft_1d(static_cast<int>(P), zf.data(), rout.data(), FFTW_BACKWARD, FFTW_ESTIMATE));
    }
    for (std::size_t m = 0; m < K; ++m) kin[m][0] = kernel[m];
    pk.execute();
    const double inv = 1.0 / static_cast<double>(P);
    for (std::size_t o = 0; o < outputs; o += B) {
        const std::size_t b = std::min(B, outputs - o);
        const std::size_t len = b + K - 1;
        for (std::size_t i = 0; i < P; ++i) {
            if (i < len) {
                const std::complex<double> v = z(o + i);
                zin[i][0] = v.real();
                zin[i][1] = v.imag();
            } else {
                zin[i][0] = zin[i][1] = 0.0;
            }
        }
        pz.execute();
        for (std::size_t k = 0; k < P; ++k) {
            // conj(Kf) * Zf
            const double kr = kf[k][0], ki = kf[k][1], zr = zf[k][0], zi = zf[k][1];
            zf[k][0] = kr * zr + ki * zi;
            zf[k][1] = kr * zi - ki * zr;
        }
        pinv.execute();
        for (std::size_t j = 0; j < b; ++j) sink(o + j, std::complex<double>(rout[j][0] * inv, rout[j][1] * inv));
    }
}

/// Periodic Hann window of length n.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

/// Trapezoidal rule on a uniform grid.
inline double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

/// Mean and standard error of the mean of independent batch values.
struct MeanStderr {
    double mean = 0.0;
    double sem = 0.0;
};

inline MeanStderr batch_mean_stderr(std::span<const double> v) {
    MeanStderr out;
    const double n = static_cast<double>(v.size());
    if (v.empty()) return out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) return out;
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sem = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

}  // namespace weakqubit::dsp
