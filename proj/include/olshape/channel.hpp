// Discrete ISI channel models: the two built-in microstrip responses, taps
// loaded from file, and the continuous-time impulse model they derive from.
#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "olshape/common.hpp"

namespace olshape {

struct ChannelModel {
    std::vector<double> taps;  // voltage gain, taps[0] is the cursor
    double symbol_rate = 0.0;  // symbols/sec, metadata only

    std::size_t span() const { return taps.size(); }
    double h0() const { return taps[0]; }
    // Un-shaped i.i.d. received power for unit-power input.
    double iid_receive_power() const {
        double s = 0.0;
        for (double h : taps) s += h * h;
        return s;
    }
};

inline ChannelModel make_channel(std::vector<double> taps, double symbol_rate = 0.0) {
    require(!taps.empty(), "channel: empty tap vector");
    for (double h : taps) require(std::isfinite(h), "channel: non-finite tap");
    return ChannelModel{std::move(taps), symbol_rate};
}

inline ChannelModel builtin_channel(char name) {
    if (name == 'A' || name == 'a') {
        return make_channel(
            {0.13,   0.19,   0.14,   0.09,   0.07,   0.05,   0.037,  0.031,
             0.025,  0.02,   0.016,  0.014,  0.013,  0.012,  0.011,  0.01,
             0.009,  0.008,  0.0075, 0.0072, 0.0065, 0.0071, 0.0057, 0.0055,
             0.0044, 0.0044, 0.0033, 0.0033, 0.0032, 0.0029},
            112e9);
    }
    if (name == 'B' || name == 'b') {
        return make_channel(
            {0.069,   0.1,     0.11,    0.098,   0.08,    0.06,    0.05,
             0.04,    0.038,   0.032,   0.028,   0.024,   0.021,   0.019,
             0.017,   0.015,   0.014,   0.013,   0.0118,  0.0108,  0.01,
             0.0092,  0.0086,  0.008,   0.0075,  0.007,   0.0066,  0.0062,
             0.0058,  0.0055,  0.0052,  0.00498, 0.00474, 0.00451, 0.00429,
             0.0041,  0.0039,  0.0037,  0.0036,  0.0034,  0.0037,  0.0034,
             0.0029,  0.0028,  0.0028,  0.0025,  0.0023,  0.0023,  0.002,
             0.0017},
            224e9);
    }
    throw std::invalid_argument(std::string("unknown built-in channel: ") + name);
}

// One tap per line, decimal floats. Blank lines and '#' comments are skipped.
inline ChannelModel load_taps(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open tap file: " + path);
    std::vector<double> taps;
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        double v;
        if (ls >> v) taps.push_back(v);
    }
    require(!taps.empty(), "tap file holds no taps: " + path);
    return make_channel(std::move(taps));
}

// Resolves "A", "B" or a file path.
inline ChannelModel resolve_channel(const std::string& sel) {
    if (sel.size() == 1 && (sel[0] == 'A' || sel[0] == 'a' || sel[0] == 'B' || sel[0] == 'b'))
        return builtin_channel(sel[0]);
    return load_taps(sel);
}

// Parameters of the two-factor continuous impulse model of a microstrip
// trace.  Defaults are the 50 cm chip-to-chip trace values.
struct ContinuousImpulseParams {
    double t0 = 7.7e-13;  // sec
    double A = 1e-6;      // sqrt(sec)
    double B = 8.8e-12;   // sec
};

namespace detail {

inline double impulse_factor1(double u, const ContinuousImpulseParams& p) {
    const double v = p.t0 + u;
    return p.A / (std::sqrt(v * v * v) * std::exp(M_PI * p.A * p.A / v));
}

inline double impulse_factor2(double u, const ContinuousImpulseParams& p) {
    const double v = p.t0 + u;
    return 2.0 * p.B / (M_PI * (v * v + p.B * p.B));
}

// Adaptive Simpson with relative tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double eps,
                               int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps * (std::abs(left) + std::abs(right)))
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol) {
    if (b <= a) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, rel_tol, 48);
}

}  // namespace detail

// h(t): convolution of the two model factors, evaluated by adaptive
// quadrature over [0, min(t, 20*B)] at relative tolerance 1e-8.
inline double continuous_impulse(double t, const ContinuousImpulseParams& p = {}) {
    require(t >= 0.0, "continuous_impulse: t must be non-negative");
    if (t == 0.0) return 0.0;
    const double hi = std::min(t, 20.0 * p.B);
    auto integrand = [&](double tau) {
        return detail::impulse_factor1(t - tau, p) * detail::impulse_factor2(tau, p);
    };
    return detail::integrate(integrand, 0.0, hi, 1e-8);
}

// Samples h(t0 + (n+phase)/fs) and normalizes to unit sum over norm_span
// samples.  The sampling phase that lines up with the printed Channel-A
// table is about 0.25 of a symbol period; the exact normalization used for
// the printed tables is not recoverable, so agreement is approximate.
inline std::vector<double> sample_impulse_taps(const ContinuousImpulseParams& p, double fs,
                                               std::size_t count, double phase = 0.25,
                                               std::size_t norm_span = 256) {
    require(fs > 0.0, "sample_impulse_taps: fs must be positive");
    require(count > 0, "sample_impulse_taps: count must be positive");
    const std::size_t n = std::max(count, norm_span);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = continuous_impulse(p.t0 + (static_cast<double>(i) + phase) / fs, p);
    const double sum = std::accumulate(g.begin(), g.begin() + static_cast<long>(norm_span), 0.0);
    std::vector<double> taps(g.begin(), g.begin() + static_cast<long>(count));
    for (double& v : taps) v /= sum;
    return taps;
}

}  // namespace olshape
