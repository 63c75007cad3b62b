// Kolmogorov-Smirnov statistics and asymptotic critical values.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <vector>

namespace schedkit::stats {

/// Phi(x) for the standard normal distribution.
inline double standard_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace detail {

// LSD radix sort on the order-preserving integer image of finite doubles;
// the ensembles sorted here are large enough that comparison sorting is the
// dominant cost of a verification run.
inline void sort_doubles(std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 4096) {
        std::sort(values.begin(), values.end());
        return;
    }
    std::vector<std::uint64_t> keys(n), scratch(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &values[i], sizeof(bits));
        keys[i] = bits ^ ((bits >> 63) ? ~std::uint64_t{0} : (std::uint64_t{1} << 63));
    }
    for (int shift = 0; shift < 64; shift += 8) {
        std::size_t histogram[256] = {};
        for (std::size_t i = 0; i < n; ++i) ++histogram[(keys[i] >> shift) & 0xff];
        std::size_t offset = 0;
        for (std::size_t bucket = 0; bucket < 256; ++bucket) {
            const std::size_t count = histogram[bucket];
            histogram[bucket] = offset;
            offset += count;
        }
        for (std::size_t i = 0; i < n; ++i)
            scratch[histogram[(keys[i] >> shift) & 0xff]++] = keys[i];
        keys.swap(scratch);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t key = keys[i];
        const std::uint64_t bits =
            key ^ ((key >> 63) ? (std::uint64_t{1} << 63) : ~std::uint64_t{0});
        std::memcpy(&values[i], &bits, sizeof(bits));
    }
}

} // namespace detail

/// Max gap between the empirical CDFs of two samples (sorted internally).
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.size() < 1 || b.size() < 1)
        throw std::invalid_argument("ks_two_sample: empty sample");
    detail::sort_doubles(a);
    detail::sort_doubles(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Max gap between the empirical CDF of a sample and a reference CDF.
inline double ks_one_sample(std::vector<double> x,
                            const std::function<double(double)>& cdf) {
    if (x.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
    detail::sort_doubles(x);
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        const double below = f - static_cast<double>(i) / n;
        const double above = static_cast<double>(i + 1) / n - f;
        d = std::max(d, std::max(below, above));
    }
    return d;
}

/// c(alpha) = sqrt(-ln(alpha/2) / 2); c(0.01) ~ 1.628.
inline double ks_critical_scale(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("ks_critical_scale: alpha must lie in (0, 1)");
    return std::sqrt(-0.5 * std::log(0.5 * alpha));
}

/// Asymptotic two-sample critical value c(alpha) sqrt((n + m) / (n m)).
inline double ks_two_sample_threshold(double alpha, std::size_t n, std::size_t m) {
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    return ks_critical_scale(alpha) * std::sqrt((dn + dm) / (dn * dm));
}

/// Asymptotic one-sample critical value c(alpha) / sqrt(n).
inline double ks_one_sample_threshold(double alpha, std::size_t n) {
    return ks_critical_scale(alpha) / std::sqrt(static_cast<double>(n));
}

} // namespace schedkit::stats
