// Parallel-concatenated convolutional code: two memory-4 RSC encoders
// (feed-forward 37, feedback 23, octal), a seeded random interleaver,
// rate-matching puncture masks and iterative log-MAP decoding.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "olshape/common.hpp"
#include "olshape/logsum.hpp"

namespace olshape {

struct RscSpec {
    int memory = 4;
    unsigned feedforward = 037;  // octal digits read MSB-first over D^0..D^memory
    unsigned feedback = 023;
};

// Tabulated transitions of one recursive systematic encoder.
class RscTrellis {
  public:
    explicit RscTrellis(const RscSpec& spec) : spec_(spec) {
        nu_ = spec.memory;
        n_states_ = 1 << nu_;
        // poly bit for D^k: MSB of the (nu+1)-bit word is D^0
        auto coeff = [&](unsigned poly, int k) -> unsigned {
            return (poly >> (nu_ - k)) & 1u;  // k = 0..nu
        };
        require(coeff(spec.feedback, 0) == 1, "rsc: feedback polynomial must be monic in D^0");
        fb_state_mask_ = ff_state_mask_ = 0;
        for (int k = 1; k <= nu_; ++k) {
            // state bit (nu-k) holds the value delayed by k
            if (coeff(spec.feedback, k)) fb_state_mask_ |= 1u << (nu_ - k);
            if (coeff(spec.feedforward, k)) ff_state_mask_ |= 1u << (nu_ - k);
        }
        ff0_ = coeff(spec.feedforward, 0);
        next_.resize(static_cast<std::size_t>(n_states_) * 2);
        parity_.resize(static_cast<std::size_t>(n_states_) * 2);
        term_input_.resize(static_cast<std::size_t>(n_states_));
        for (int s = 0; s < n_states_; ++s) {
            const unsigned fb = parity_of(static_cast<unsigned>(s) & fb_state_mask_);
            term_input_[static_cast<std::size_t>(s)] = static_cast<std::uint8_t>(fb);
            for (unsigned u = 0; u < 2; ++u) {
                const unsigned a = u ^ fb;
                const unsigned p =
                    (ff0_ & a) ^ parity_of(static_cast<unsigned>(s) & ff_state_mask_);
                next_[idx(s, u)] = static_cast<std::uint16_t>(
                    ((a << (nu_ - 1)) | (static_cast<unsigned>(s) >> 1)) & (n_states_ - 1u));
                parity_[idx(s, u)] = static_cast<std::uint8_t>(p);
            }
        }
    }

    int states() const { return n_states_; }
    int memory() const { return nu_; }
    int next_state(int s, int u) const { return next_[idx(s, u)]; }
    int parity(int s, int u) const { return parity_[idx(s, u)]; }
    // Input that zeroes the feedback, driving the register toward state 0.
    int termination_input(int s) const { return term_input_[static_cast<std::size_t>(s)]; }

  private:
    static unsigned parity_of(unsigned v) { return __builtin_parity(v); }
    std::size_t idx(int s, unsigned u) const {
        return static_cast<std::size_t>(s) * 2 + u;
    }

    RscSpec spec_;
    int nu_ = 0;
    int n_states_ = 0;
    unsigned fb_state_mask_ = 0, ff_state_mask_ = 0, ff0_ = 0;
    std::vector<std::uint16_t> next_;
    std::vector<std::uint8_t> parity_;
    std::vector<std::uint8_t> term_input_;
};

// Parity stream of one RSC encoder; optionally appends the termination tail.
inline std::vector<std::uint8_t> rsc_encode(std::span<const std::uint8_t> bits,
                                            const RscSpec& spec, bool terminate = false,
                                            std::vector<std::uint8_t>* tail_sys = nullptr,
                                            std::vector<std::uint8_t>* tail_par = nullptr) {
    RscTrellis tr(spec);
    std::vector<std::uint8_t> parity(bits.size());
    int s = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const int u = bits[i] & 1;
        parity[i] = static_cast<std::uint8_t>(tr.parity(s, u));
        s = tr.next_state(s, u);
    }
    if (terminate) {
        if (tail_sys) tail_sys->clear();
        if (tail_par) tail_par->clear();
        for (int k = 0; k < spec.memory; ++k) {
            const int u = tr.termination_input(s);
            if (tail_sys) tail_sys->push_back(static_cast<std::uint8_t>(u));
            if (tail_par) tail_par->push_back(static_cast<std::uint8_t>(tr.parity(s, u)));
            s = tr.next_state(s, u);
        }
    }
    return parity;
}

// Bresenham-style balanced selection: exactly n_keep of n positions kept,
// evenly spread, period n/gcd(n, n_keep).
inline bool puncture_keeps(std::size_t j, std::size_t n_keep, std::size_t n) {
    return (j + 1) * n_keep / n != j * n_keep / n;
}

struct TurboConfig {
    int block_length = 4096;
    double rate = 0.6;
    std::uint64_t interleaver_seed = 1;
    int align = 1;  // coded length is made divisible by this (bits per symbol)
    RscSpec rsc{};

    // derived
    std::vector<std::int32_t> interleaver;  // encoder 2 input k = info[interleaver[k]]
    int keep_p1 = 0;
    int keep_p2 = 0;
    int coded_length = 0;

    int tail_bits() const { return 2 * rsc.memory; }
    double realized_rate() const { return static_cast<double>(block_length) / coded_length; }
    // mux layout offsets
    int off_sys() const { return 0; }
    int off_p1() const { return block_length; }
    int off_p2() const { return block_length + keep_p1; }
    int off_tail_sys() const { return block_length + keep_p1 + keep_p2; }
    int off_tail_par() const { return off_tail_sys() + rsc.memory; }
};

inline std::vector<std::int32_t> make_interleaver(int n, std::uint64_t seed) {
    std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 gen(seed);
    std::shuffle(perm.begin(), perm.end(), gen);
    return perm;
}

inline TurboConfig make_turbo_config(double rate, int block_length = 4096,
                                     std::uint64_t interleaver_seed = 1, int align = 1) {
    require(rate > 0.0 && rate < 1.0, "turbo: rate out of (0,1)");
    require(block_length > 0, "turbo: block_length must be positive");
    TurboConfig cfg;
    cfg.block_length = block_length;
    cfg.rate = rate;
    cfg.interleaver_seed = interleaver_seed;
    cfg.align = std::max(1, align);
    cfg.interleaver = make_interleaver(block_length, interleaver_seed);
    const int tail = cfg.tail_bits();
    const long base = std::lround(block_length / rate);
    long best_total = -1;
    for (long t = base - cfg.align; t <= base + cfg.align; ++t) {
        if (t % cfg.align != 0) continue;
        if (t - block_length - tail < 0 || t - block_length - tail > 2L * block_length) continue;
        if (best_total < 0 || std::abs(static_cast<double>(block_length) / t - rate) <
                                  std::abs(static_cast<double>(block_length) / best_total - rate))
            best_total = t;
    }
    require(best_total > 0, "turbo: no feasible coded length for this rate");
    const long n_keep = best_total - block_length - tail;
    cfg.keep_p1 = static_cast<int>((n_keep + 1) / 2);
    cfg.keep_p2 = static_cast<int>(n_keep / 2);
    cfg.coded_length = static_cast<int>(best_total);
    require(std::abs(cfg.realized_rate() - rate) <= 0.005 * rate,
            "turbo: realized rate misses target by more than 0.5%");
    return cfg;
}

// Codeword layout: [systematic][parity1 kept][parity2 kept][tail sys][tail par].
inline std::vector<std::uint8_t> turbo_encode(std::span<const std::uint8_t> info,
                                              const TurboConfig& cfg) {
    require(static_cast<int>(info.size()) == cfg.block_length,
            "turbo_encode: info length != block_length");
    const int K = cfg.block_length;
    std::vector<std::uint8_t> tail_sys, tail_par;
    std::vector<std::uint8_t> p1 = rsc_encode(info, cfg.rsc, true, &tail_sys, &tail_par);
    std::vector<std::uint8_t> permuted(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        permuted[static_cast<std::size_t>(k)] = info[static_cast<std::size_t>(cfg.interleaver[static_cast<std::size_t>(k)])];
    std::vector<std::uint8_t> p2 = rsc_encode(permuted, cfg.rsc, false);

    std::vector<std::uint8_t> coded;
    coded.reserve(static_cast<std::size_t>(cfg.coded_length));
    coded.insert(coded.end(), info.begin(), info.end());
    for (int j = 0; j < K; ++j)
        if (puncture_keeps(static_cast<std::size_t>(j), static_cast<std::size_t>(cfg.keep_p1),
                           static_cast<std::size_t>(K)))
            coded.push_back(p1[static_cast<std::size_t>(j)]);
    for (int j = 0; j < K; ++j)
        if (puncture_keeps(static_cast<std::size_t>(j), static_cast<std::size_t>(cfg.keep_p2),
                           static_cast<std::size_t>(K)))
            coded.push_back(p2[static_cast<std::size_t>(j)]);
    coded.insert(coded.end(), tail_sys.begin(), tail_sys.end());
    coded.insert(coded.end(), tail_par.begin(), tail_par.end());
    require(static_cast<int>(coded.size()) == cfg.coded_length, "turbo_encode: length bug");
    return coded;
}

// Exact log-MAP over one RSC component.  LLR sign convention: positive means
// bit 0 is more likely.  Constant terms of the bit log-probabilities cancel
// in every ratio, so branch metrics use +-L/2 directly.
struct BcjrOutputs {
    std::vector<double> ext_info;   // extrinsic on info positions
    std::vector<double> post_info;  // full posterior on info positions
    std::vector<double> ext_par;    // extrinsic on parity positions
    std::vector<double> ext_tail_sys, ext_tail_par;  // termination positions
};

inline BcjrOutputs bcjr_component(const RscTrellis& tr, std::span<const double> sys_llr,
                                  std::span<const double> apriori,
                                  std::span<const double> par_llr, bool terminated,
                                  std::span<const double> tail_sys_llr = {},
                                  std::span<const double> tail_par_llr = {}) {
    const int K = static_cast<int>(sys_llr.size());
    const int S = tr.states();
    const int tail = terminated ? tr.memory() : 0;
    const int T = K + tail;

    auto half = [](double llr, int bit) { return bit ? -0.5 * llr : 0.5 * llr; };

    // gamma(n, s, u)
    std::vector<double> gam(static_cast<std::size_t>(T) * static_cast<std::size_t>(S) * 2, kNegInf);
    auto gidx = [&](int n, int s, int u) {
        return (static_cast<std::size_t>(n) * static_cast<std::size_t>(S) + static_cast<std::size_t>(s)) * 2 +
               static_cast<std::size_t>(u);
    };
    for (int n = 0; n < K; ++n) {
        const double ls = sys_llr[static_cast<std::size_t>(n)] +
                          (apriori.empty() ? 0.0 : apriori[static_cast<std::size_t>(n)]);
        for (int s = 0; s < S; ++s)
            for (int u = 0; u < 2; ++u)
                gam[gidx(n, s, u)] =
                    half(ls, u) + half(par_llr[static_cast<std::size_t>(n)], tr.parity(s, u));
    }
    for (int n = K; n < T; ++n) {
        const int k = n - K;
        for (int s = 0; s < S; ++s) {
            const int u = tr.termination_input(s);  // only the terminating branch exists
            gam[gidx(n, s, u)] = half(tail_sys_llr[static_cast<std::size_t>(k)], u) +
                                 half(tail_par_llr[static_cast<std::size_t>(k)], tr.parity(s, u));
        }
    }

    std::vector<double> alpha(static_cast<std::size_t>(T + 1) * static_cast<std::size_t>(S), kNegInf);
    auto aidx = [&](int n, int s) {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(S) + static_cast<std::size_t>(s);
    };
    alpha[aidx(0, 0)] = 0.0;
    for (int n = 0; n < T; ++n) {
        double mx = kNegInf;
        for (int s = 0; s < S; ++s) {
            const double a = alpha[aidx(n, s)];
            if (a == kNegInf) continue;
            for (int u = 0; u < 2; ++u) {
                const double g = gam[gidx(n, s, u)];
                if (g == kNegInf) continue;
                auto& dst = alpha[aidx(n + 1, tr.next_state(s, u))];
                dst = max_star(dst, a + g);
            }
        }
        for (int s = 0; s < S; ++s) mx = std::max(mx, alpha[aidx(n + 1, s)]);
        for (int s = 0; s < S; ++s) alpha[aidx(n + 1, s)] -= mx;
    }

    std::vector<double> beta(static_cast<std::size_t>(T + 1) * static_cast<std::size_t>(S), kNegInf);
    if (terminated) {
        beta[aidx(T, 0)] = 0.0;
    } else {
        for (int s = 0; s < S; ++s) beta[aidx(T, s)] = 0.0;
    }
    for (int n = T - 1; n >= 0; --n) {
        double mx = kNegInf;
        for (int s = 0; s < S; ++s) {
            double acc = kNegInf;
            for (int u = 0; u < 2; ++u) {
                const double g = gam[gidx(n, s, u)];
                if (g == kNegInf) continue;
                acc = max_star(acc, g + beta[aidx(n + 1, tr.next_state(s, u))]);
            }
            beta[aidx(n, s)] = acc;
            mx = std::max(mx, acc);
        }
        if (mx != kNegInf)
            for (int s = 0; s < S; ++s) beta[aidx(n, s)] -= mx;
    }

    BcjrOutputs out;
    out.ext_info.resize(static_cast<std::size_t>(K));
    out.post_info.resize(static_cast<std::size_t>(K));
    out.ext_par.resize(static_cast<std::size_t>(K));
    out.ext_tail_sys.resize(static_cast<std::size_t>(tail));
    out.ext_tail_par.resize(static_cast<std::size_t>(tail));
    for (int n = 0; n < T; ++n) {
        double num_u = kNegInf, den_u = kNegInf, num_p = kNegInf, den_p = kNegInf;
        for (int s = 0; s < S; ++s) {
            const double a = alpha[aidx(n, s)];
            if (a == kNegInf) continue;
            for (int u = 0; u < 2; ++u) {
                const double g = gam[gidx(n, s, u)];
                if (g == kNegInf) continue;
                const double v = a + g + beta[aidx(n + 1, tr.next_state(s, u))];
                (u == 0 ? num_u : den_u) = max_star(u == 0 ? num_u : den_u, v);
                (tr.parity(s, u) == 0 ? num_p : den_p) =
                    max_star(tr.parity(s, u) == 0 ? num_p : den_p, v);
            }
        }
        const double post_u = num_u - den_u;
        const double post_p = num_p - den_p;
        if (n < K) {
            const double la = apriori.empty() ? 0.0 : apriori[static_cast<std::size_t>(n)];
            out.post_info[static_cast<std::size_t>(n)] = post_u;
            out.ext_info[static_cast<std::size_t>(n)] =
                post_u - sys_llr[static_cast<std::size_t>(n)] - la;
            out.ext_par[static_cast<std::size_t>(n)] =
                post_p - par_llr[static_cast<std::size_t>(n)];
        } else {
            const int k = n - K;
            out.ext_tail_sys[static_cast<std::size_t>(k)] =
                post_u - tail_sys_llr[static_cast<std::size_t>(k)];
            out.ext_tail_par[static_cast<std::size_t>(k)] =
                post_p - tail_par_llr[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

struct TurboDecodeResult {
    std::vector<double> extrinsic;  // per coded position, for the equalizer loop
    std::vector<double> info_llrs;
    std::vector<std::uint8_t> hard_bits;
};

// Iterative decoder; keeps its component extrinsics across calls so a turbo
// equalizer can interleave decoder rounds with equalizer rounds.
class TurboDecoder {
  public:
    explicit TurboDecoder(const TurboConfig& cfg) : cfg_(cfg), trellis_(cfg.rsc) { reset(); }

    void reset() {
        const std::size_t K = static_cast<std::size_t>(cfg_.block_length);
        ext1_.assign(K, 0.0);
        ext2_de_.assign(K, 0.0);
        last_ = BcjrOutputs{};
        last2_ = BcjrOutputs{};
    }

    void set_channel(std::span<const double> coded_llr) {
        require(static_cast<int>(coded_llr.size()) == cfg_.coded_length,
                "turbo decoder: coded LLR frame length mismatch");
        const int K = cfg_.block_length;
        sys_.assign(coded_llr.begin(), coded_llr.begin() + K);
        p1_.assign(static_cast<std::size_t>(K), 0.0);
        p2_.assign(static_cast<std::size_t>(K), 0.0);
        int pos = cfg_.off_p1();
        for (int j = 0; j < K; ++j)
            if (puncture_keeps(static_cast<std::size_t>(j), static_cast<std::size_t>(cfg_.keep_p1),
                               static_cast<std::size_t>(K)))
                p1_[static_cast<std::size_t>(j)] = coded_llr[static_cast<std::size_t>(pos++)];
        pos = cfg_.off_p2();
        for (int j = 0; j < K; ++j)
            if (puncture_keeps(static_cast<std::size_t>(j), static_cast<std::size_t>(cfg_.keep_p2),
                               static_cast<std::size_t>(K)))
                p2_[static_cast<std::size_t>(j)] = coded_llr[static_cast<std::size_t>(pos++)];
        tail_sys_.assign(coded_llr.begin() + cfg_.off_tail_sys(),
                         coded_llr.begin() + cfg_.off_tail_par());
        tail_par_.assign(coded_llr.begin() + cfg_.off_tail_par(), coded_llr.end());
        sys_perm_.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            sys_perm_[static_cast<std::size_t>(k)] =
                sys_[static_cast<std::size_t>(cfg_.interleaver[static_cast<std::size_t>(k)])];
    }

    // One round: component 1 then component 2.
    void iterate() {
        const int K = cfg_.block_length;
        last_ = bcjr_component(trellis_, sys_, ext2_de_, p1_, true, tail_sys_, tail_par_);
        ext1_ = last_.ext_info;
        for (double& v : ext1_) v = clamp_llr(v);
        std::vector<double> ext1_perm(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            ext1_perm[static_cast<std::size_t>(k)] =
                ext1_[static_cast<std::size_t>(cfg_.interleaver[static_cast<std::size_t>(k)])];
        last2_ = bcjr_component(trellis_, sys_perm_, ext1_perm, p2_, false);
        for (int k = 0; k < K; ++k)
            ext2_de_[static_cast<std::size_t>(cfg_.interleaver[static_cast<std::size_t>(k)])] =
                clamp_llr(last2_.ext_info[static_cast<std::size_t>(k)]);
    }

    std::vector<double> info_llrs() const {
        const int K = cfg_.block_length;
        std::vector<double> out(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            out[static_cast<std::size_t>(k)] = sys_[static_cast<std::size_t>(k)] +
                                               ext1_[static_cast<std::size_t>(k)] +
                                               ext2_de_[static_cast<std::size_t>(k)];
        return out;
    }

    std::vector<std::uint8_t> hard_info() const {
        auto llr = info_llrs();
        std::vector<std::uint8_t> bits(llr.size());
        for (std::size_t i = 0; i < llr.size(); ++i) bits[i] = llr[i] < 0.0 ? 1 : 0;
        return bits;
    }

    // Extrinsic LLR for every transmitted coded position.
    std::vector<double> extrinsic_coded() const {
        const int K = cfg_.block_length;
        std::vector<double> out(static_cast<std::size_t>(cfg_.coded_length), 0.0);
        for (int k = 0; k < K; ++k)
            out[static_cast<std::size_t>(k)] =
                clamp_llr(ext1_[static_cast<std::size_t>(k)] + ext2_de_[static_cast<std::size_t>(k)]);
        int pos = cfg_.off_p1();
        for (int j = 0; j < K; ++j)
            if (puncture_keeps(static_cast<std::size_t>(j), static_cast<std::size_t>(cfg_.keep_p1),
                               static_cast<std::size_t>(K)))
                out[static_cast<std::size_t>(pos++)] =
                    clamp_llr(last_.ext_par.empty() ? 0.0 : last_.ext_par[static_cast<std::size_t>(j)]);
        pos = cfg_.off_p2();
        for (int j = 0; j < K; ++j)
            if (puncture_keeps(static_cast<std::size_t>(j), static_cast<std::size_t>(cfg_.keep_p2),
                               static_cast<std::size_t>(K)))
                out[static_cast<std::size_t>(pos++)] =
                    clamp_llr(last2_.ext_par.empty() ? 0.0 : last2_.ext_par[static_cast<std::size_t>(j)]);
        for (int k = 0; k < cfg_.rsc.memory; ++k) {
            if (!last_.ext_tail_sys.empty())
                out[static_cast<std::size_t>(cfg_.off_tail_sys() + k)] =
                    clamp_llr(last_.ext_tail_sys[static_cast<std::size_t>(k)]);
            if (!last_.ext_tail_par.empty())
                out[static_cast<std::size_t>(cfg_.off_tail_par() + k)] =
                    clamp_llr(last_.ext_tail_par[static_cast<std::size_t>(k)]);
        }
        return out;
    }

    const TurboConfig& config() const { return cfg_; }

  private:
    TurboConfig cfg_;
    RscTrellis trellis_;
    std::vector<double> sys_, sys_perm_, p1_, p2_, tail_sys_, tail_par_;
    std::vector<double> ext1_, ext2_de_;
    BcjrOutputs last_, last2_;
};

// One row per position: encoder-2 input index, source info index.
inline void write_interleaver_csv(const TurboConfig& cfg, std::ostream& out) {
    out << "position,source\n";
    for (std::size_t k = 0; k < cfg.interleaver.size(); ++k)
        out << k << ',' << cfg.interleaver[k] << "\n";
}

inline TurboDecodeResult turbo_decode(std::span<const double> apriori, const TurboConfig& cfg,
                                      int iterations) {
    require(iterations >= 1, "turbo_decode: need at least one iteration");
    TurboDecoder dec(cfg);
    dec.set_channel(apriori);
    for (int i = 0; i < iterations; ++i) dec.iterate();
    TurboDecodeResult res;
    res.extrinsic = dec.extrinsic_coded();
    res.info_llrs = dec.info_llrs();
    res.hard_bits = dec.hard_info();
    return res;
}

}  // namespace olshape
