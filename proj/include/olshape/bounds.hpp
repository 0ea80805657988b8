// Theoretical analysis: Gaussian capacity under joint transmit/receive power
// constraints via two Lagrange multipliers, the K-sweep rate bound, the
// truncated-Gaussian PAPR estimate, and the composite shaping gain.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "olshape/channel.hpp"
#include "olshape/common.hpp"
#include "olshape/signal.hpp"

namespace olshape {

struct SpectrumAllocation {
    std::vector<double> q;   // energy spectral components, >= 0
    std::vector<double> H2;  // |H_i|^2 of the channel
    int N = 0;
};

// |DFT|^2 of the tap vector, zero-padded to N points.
inline std::vector<double> dft_mag2(const std::vector<double>& taps, int N) {
    std::vector<double> H2(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        double re = 0.0, im = 0.0;
        for (std::size_t k = 0; k < taps.size(); ++k) {
            const double ang = -2.0 * M_PI * i * static_cast<double>(k) / N;
            re += taps[k] * std::cos(ang);
            im += taps[k] * std::sin(ang);
        }
        H2[static_cast<std::size_t>(i)] = re * re + im * im;
    }
    return H2;
}

// C_N = (1/2N) sum log2(1 + 2 q_i |H_i|^2 / (N_A + N_0))
inline double capacity(const SpectrumAllocation& a, const NoiseSpec& noise) {
    const double ns = noise.NA + noise.N0;
    double acc = 0.0;
    for (int i = 0; i < a.N; ++i)
        acc += std::log2(1.0 + 2.0 * a.q[static_cast<std::size_t>(i)] *
                                   a.H2[static_cast<std::size_t>(i)] / ns);
    return acc / (2.0 * a.N);
}

namespace detail {

// q_i(alpha, beta) = max(0, 1/(alpha H2 + beta) - ns/(2 H2))
inline void fill_allocation(std::vector<double>& q, const std::vector<double>& H2, double ns,
                            double alpha, double beta) {
    for (std::size_t i = 0; i < H2.size(); ++i) {
        const double denom = alpha * H2[i] + beta;
        if (denom <= 0.0 || H2[i] <= 0.0) {
            q[i] = (denom <= 0.0 && H2[i] > 0.0) ? kPosInf : 0.0;
            continue;
        }
        q[i] = std::max(0.0, 1.0 / denom - ns / (2.0 * H2[i]));
    }
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double mean_weighted(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
    return s / static_cast<double>(v.size());
}

// Smallest beta >= 0 with mean(q) <= P; transmit power decreases in beta.
inline double solve_beta(const std::vector<double>& H2, double ns, double alpha, double P,
                         std::vector<double>& scratch) {
    if (alpha > 0.0) {
        fill_allocation(scratch, H2, ns, alpha, 0.0);
        const double t = mean(scratch);
        if (std::isfinite(t) && t <= P) return 0.0;
    }
    double lo = 0.0, hi = 1.0;
    for (;;) {
        fill_allocation(scratch, H2, ns, alpha, hi);
        if (mean(scratch) <= P) break;
        hi *= 2.0;
    }
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        fill_allocation(scratch, H2, ns, alpha, mid);
        if (mean(scratch) > P)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

}  // namespace detail

struct AllocationResult {
    SpectrumAllocation allocation;
    double alpha = 0.0;
    double beta = 0.0;
};

// Maximizing allocation under mean(q) <= P and mean(q |H|^2) <= K.  Each
// constraint ends up tight (multiplier > 0) or slack (multiplier = 0).
inline AllocationResult optimal_allocation(const std::vector<double>& H2, const NoiseSpec& noise,
                                           double P, double K) {
    require(P > 0.0 && K > 0.0, "optimal_allocation: P and K must be positive");
    bool any = false;
    for (double h : H2)
        if (h > 0.0) any = true;
    require(any, "optimal_allocation: channel has no energy");
    const double ns = noise.NA + noise.N0;
    const int N = static_cast<int>(H2.size());
    std::vector<double> q(H2.size());

    AllocationResult res;
    res.allocation.H2 = H2;
    res.allocation.N = N;

    // water-pouring case: transmit constraint only
    const double beta0 = detail::solve_beta(H2, ns, 0.0, P, q);
    detail::fill_allocation(q, H2, ns, 0.0, beta0);
    if (detail::mean_weighted(q, H2) <= K * (1.0 + 1e-12)) {
        res.allocation.q = q;
        res.alpha = 0.0;
        res.beta = beta0;
        return res;
    }

    // receive constraint active: outer bisection on alpha with the transmit
    // constraint enforced by the inner solve
    auto rx_power = [&](double alpha, double& beta_out) {
        beta_out = detail::solve_beta(H2, ns, alpha, P, q);
        detail::fill_allocation(q, H2, ns, alpha, beta_out);
        return detail::mean_weighted(q, H2);
    };
    double beta = 0.0;
    double lo = 0.0, hi = 1.0;
    while (rx_power(hi, beta) >= K) hi *= 2.0;
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (rx_power(mid, beta) > K)
            lo = mid;
        else
            hi = mid;
    }
    rx_power(hi, beta);
    res.allocation.q = q;
    res.alpha = hi;
    res.beta = beta;
    return res;
}

inline constexpr int kBoundsDftSize = 4096;

// Capacity at fixed (SNDR, TSTNR) for a receive-power budget K: transmit
// power is normalized to 1, N0 = 1/TSTNR, and N_A = 2K/SNDR so the target
// SNDR holds at the budget.
inline double capacity_at_K(const std::vector<double>& H2, double tstnr_db, double sndr_db,
                            double K) {
    NoiseSpec noise;
    noise.N0 = 1.0 / db_to_lin(tstnr_db);
    noise.NA = 2.0 * K / db_to_lin(sndr_db);
    const auto res = optimal_allocation(H2, noise, 1.0, K);
    return capacity(res.allocation, noise);
}

struct CapacityPoint {
    double rate = 0.0;      // bits/symbol
    double K_o_db = 0.0;    // maximizing receive power budget
    double tstnr_db = 0.0;
    double sndr_db = 0.0;
};

// C_o = max_K C_N |(SNDR, TSTNR), golden-section over K in dB.
inline CapacityPoint optimize_over_K(const std::vector<double>& H2, const ChannelModel& ch,
                                     double tstnr_db, double sndr_db) {
    require(std::isfinite(tstnr_db) && std::isfinite(sndr_db), "optimize_over_K: non-finite dB");
    const double s2_db = lin_to_db(ch.iid_receive_power());
    double lo = s2_db - 40.0, hi = s2_db + 10.0;
    auto f = [&](double k_db) { return capacity_at_K(H2, tstnr_db, sndr_db, db_to_lin(k_db)); };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > 0.01) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
        }
    }
    CapacityPoint p;
    p.K_o_db = 0.5 * (lo + hi);
    p.rate = std::max(fc, fd);
    p.tstnr_db = tstnr_db;
    p.sndr_db = sndr_db;
    return p;
}

inline CapacityPoint optimize_over_K(const ChannelModel& ch, double tstnr_db, double sndr_db,
                                     int dft_size = kBoundsDftSize) {
    return optimize_over_K(dft_mag2(ch.taps, dft_size), ch, tstnr_db, sndr_db);
}

// Truncated-Gaussian model of the peak-constrained channel output.
struct TgModel {
    double sigma2 = 0.0;  // un-shaped i.i.d. received power, sum of h_i^2
    double gamma = 0.0;   // peak power constraint, linear
};

inline TgModel tg_model(const ChannelModel& ch, double gamma) {
    require(gamma > 0.0, "tg_model: gamma must be positive");
    return TgModel{ch.iid_receive_power(), gamma};
}

struct TgPapr {
    double K_TG = 0.0;  // average power of the truncated Gaussian
    double papr = 0.0;  // linear
};

// K_TG = sigma^2 - erf(sqrt(g/2s^2))^-1 sqrt(2 g s^2/pi) exp(-g/2s^2);
// PAPR_TG = gamma / K_TG.
inline TgPapr tg_papr(const TgModel& model) {
    require(model.sigma2 > 0.0 && model.gamma > 0.0, "tg_papr: invalid model");
    const double u = model.gamma / (2.0 * model.sigma2);
    const double k = model.sigma2 - (1.0 / std::erf(std::sqrt(u))) *
                                        std::sqrt(2.0 * model.gamma * model.sigma2 / M_PI) *
                                        std::exp(-u);
    TgPapr out;
    out.K_TG = k;
    if (!(k > 0.0)) throw std::runtime_error("tg_papr: non-positive K_TG");
    out.papr = model.gamma / k;
    return out;
}

namespace detail {

// Smallest SNDR (dB) at which f(sndr) reaches the rate; f must be
// non-decreasing in SNDR.  Search range [0, 50] dB at 0.01 dB.
inline double sndr_for_rate(const std::function<double(double)>& f, double rate) {
    double lo = 0.0, hi = 50.0;
    if (f(hi) < rate) throw std::runtime_error("bounds: rate unreachable below 50 dB SNDR");
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < rate)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

struct GainBreakdown {
    double papr_tg_db = 0.0;
    double papr_gain_db = 0.0;
    double sndr_gain_db = 0.0;
    double g_t_db = 0.0;
    double sndr_iid_db = 0.0;
    double sndr_constrained_db = 0.0;
};

// Composite theoretical gain at one gamma: the PAPR drop of the truncated
// Gaussian against the measured uniform PAPR, plus the SNDR relaxation the
// receive-power cut K = K_TG(gamma) buys at the same rate and TSTNR.
inline GainBreakdown theoretical_gain(const ChannelModel& ch, double rate, double tstnr_db,
                                      double gamma, double papr_uniform_db,
                                      int dft_size = kBoundsDftSize) {
    const auto H2 = dft_mag2(ch.taps, dft_size);
    const double s2 = ch.iid_receive_power();
    const TgPapr tg = tg_papr(tg_model(ch, gamma));

    GainBreakdown g;
    g.papr_tg_db = lin_to_db(tg.papr);
    g.papr_gain_db = papr_uniform_db - g.papr_tg_db;

    auto c_iid = [&](double sndr_db) {
        NoiseSpec noise;
        noise.N0 = 1.0 / db_to_lin(tstnr_db);
        noise.NA = 2.0 * s2 / db_to_lin(sndr_db);
        SpectrumAllocation a;
        a.q.assign(H2.size(), 1.0);  // flat transmit spectrum at P = 1
        a.H2 = H2;
        a.N = static_cast<int>(H2.size());
        return capacity(a, noise);
    };
    auto c_con = [&](double sndr_db) { return capacity_at_K(H2, tstnr_db, sndr_db, tg.K_TG); };
    g.sndr_iid_db = detail::sndr_for_rate(c_iid, rate);
    g.sndr_constrained_db = detail::sndr_for_rate(c_con, rate);
    g.sndr_gain_db = g.sndr_iid_db - g.sndr_constrained_db;
    g.g_t_db = g.papr_gain_db + g.sndr_gain_db;
    return g;
}

}  // namespace olshape
