// Link equation, noise calibration and the PAPR/SNDR/ENOB metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "olshape/channel.hpp"
#include "olshape/common.hpp"
#include "olshape/rng.hpp"

namespace olshape {

// Two independent one-dimensional white Gaussian sources: thermal noise with
// variance N0/2 and ADC noise with variance NA/2.
struct NoiseSpec {
    double N0 = 0.0;
    double NA = 0.0;

    double total_variance() const { return 0.5 * (N0 + NA); }
};

// TSTNR = Pt/N0 and SNDR = 2*Pr/NA, both given in dB.
inline NoiseSpec calibrate_noise(double pt_measured, double tstnr_db, double pr_measured,
                                 double sndr_db) {
    require(pt_measured > 0.0 && pr_measured > 0.0, "calibrate_noise: powers must be positive");
    NoiseSpec n;
    n.N0 = pt_measured / db_to_lin(tstnr_db);
    n.NA = 2.0 * pr_measured / db_to_lin(sndr_db);
    return n;
}

struct PropagateResult {
    std::vector<double> r;  // noiseless channel output
    std::vector<double> y;  // r + z + eta
};

// y_n = sum_i h_i x_{n-i} + z_n + eta_n, zero prehistory before sample 0.
inline PropagateResult propagate(std::span<const double> x, const ChannelModel& ch,
                                 const NoiseSpec& noise, RandomStream& rng) {
    require(!x.empty(), "propagate: empty frame");
    const std::size_t n = x.size();
    const std::size_t L = ch.span();
    PropagateResult out;
    out.r.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const std::size_t kmax = std::min(L, i + 1);
        for (std::size_t k = 0; k < kmax; ++k) acc += ch.taps[k] * x[i - k];
        out.r[i] = acc;
    }
    out.y = out.r;
    const double sz = std::sqrt(0.5 * noise.N0);
    const double sa = std::sqrt(0.5 * noise.NA);
    for (std::size_t i = 0; i < n; ++i) out.y[i] += rng.gaussian(sz) + rng.gaussian(sa);
    return out;
}

// ENOB = (SNDR_dB + PAPR_dB - 4.76) / 6
inline double enob_bits(double sndr_db, double papr_db) {
    require(std::isfinite(sndr_db) && std::isfinite(papr_db), "enob: non-finite input");
    return (sndr_db + papr_db - 4.76) / 6.0;
}

// PAPR as the (1-epsilon)-quantile of instantaneous power over its mean.
// Quantile convention: lower-interpolation order statistic, 1-based index
// ceil((1-eps)*n).
inline double empirical_papr(std::span<const double> power, double epsilon) {
    require(epsilon > 0.0 && epsilon < 1.0, "empirical_papr: epsilon out of (0,1)");
    const double n = static_cast<double>(power.size());
    if (n * epsilon < 1.0)
        throw std::invalid_argument("empirical_papr: too few samples for this epsilon");
    std::vector<double> sorted(power.begin(), power.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t idx1 = static_cast<std::size_t>(std::ceil((1.0 - epsilon) * n));
    idx1 = std::max<std::size_t>(1, std::min<std::size_t>(idx1, sorted.size()));
    const double peak = sorted[idx1 - 1];
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    return peak / mean;
}

struct LinkMetrics {
    double Pr = 0.0;     // received average power
    double Pt = 0.0;     // transmit average power
    double papr = 1.0;   // linear
    double sndr = 0.0;   // linear
    double snr = 0.0;    // linear
    double tstnr = 0.0;  // linear
    double enob = 0.0;   // bits
};

inline LinkMetrics link_metrics(double pt, double pr, double papr_lin, const NoiseSpec& noise) {
    LinkMetrics m;
    m.Pt = pt;
    m.Pr = pr;
    m.papr = papr_lin;
    m.snr = 2.0 * pr / (noise.NA + noise.N0);
    m.sndr = noise.NA > 0.0 ? 2.0 * pr / noise.NA : kPosInf;
    m.tstnr = noise.N0 > 0.0 ? pt / noise.N0 : kPosInf;
    m.enob = enob_bits(lin_to_db(m.sndr), lin_to_db(m.papr));
    return m;
}

}  // namespace olshape
