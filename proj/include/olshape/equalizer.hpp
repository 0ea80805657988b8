// Reduced-state M-BCJR over the shaped (or uniform) ISI trellis.  Survivor
// state is the explicit L-1 symbol history; duplicate histories merge by
// log-sum-exp; the backward pass runs on the forward-pruned branch lists.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "olshape/channel.hpp"
#include "olshape/common.hpp"
#include "olshape/constellation.hpp"
#include "olshape/logsum.hpp"
#include "olshape/precoder.hpp"
#include "olshape/signal.hpp"
#include "olshape/turbo.hpp"

namespace olshape {

enum class EqualizerMode { shaped, uniform };

struct EqualizerConfig {
    int M = 16;               // survivors per step
    int max_iterations = 12;  // turbo-equalization loop count
    EqualizerMode mode = EqualizerMode::shaped;
    bool early_stop = true;   // stop once decoder decisions repeat
    // extrinsic damping on both directions of the loop; reduced-state soft
    // output runs optimistic, and undamped exchange can lock onto early
    // errors near threshold
    double eq_extrinsic_scale = 0.75;
    double dec_extrinsic_scale = 0.75;
    int decoder_inner_iterations = 2;  // component-decoder rounds per loop pass
};

// One retained trellis branch.  Label fields are copied from the BranchMeta
// so records stay valid without pointer chasing.
struct TrellisBranch {
    std::int32_t parent = 0;
    std::int32_t child = 0;
    std::int16_t point = 0;
    std::uint32_t known_mask = 0;
    std::uint32_t known_bits = 0;
    double log_probability = 0.0;
    double weight = 0.0;    // gaussian + prior terms
    double log_zeta = 0.0;  // filled by the backward pass
};

struct TrellisStep {
    std::vector<TrellisBranch> branches;
    int survivor_count = 0;
    // log-zeta bound on the hypotheses removed by the top-M cut (the best
    // pruned forward metric continued with the best retained backward
    // metric), normalized like the branch zetas; -inf when nothing was cut
    double z_floor = kNegInf;
};

struct ZetaTable {
    std::vector<TrellisStep> steps;
    double best_path_metric = 0.0;  // un-normalized terminal maximum, diagnostics
};

class TrellisEqualizer {
  public:
    TrellisEqualizer(ChannelModel ch, Constellation c, double gamma, NoiseSpec noise,
                     EqualizerConfig cfg)
        : ch_(std::move(ch)),
          c_(std::move(c)),
          table_(c_),
          gamma_(gamma),
          noise_(noise),
          cfg_(cfg) {
        require(cfg_.M >= 1, "equalizer: M must be >= 1");
        require(noise_.total_variance() > 0.0, "equalizer: N0 + NA must be positive");
        require(cfg_.mode == EqualizerMode::uniform || gamma_ > 0.0,
                "equalizer: shaped mode needs gamma > 0");
    }

    const MappingTable& mapping() const { return table_; }
    const Constellation& constellation() const { return c_; }
    const ChannelModel& channel() const { return ch_; }
    const EqualizerConfig& config() const { return cfg_; }

    // Branch metadata the receiver assumes for a state history (newest
    // first); mirrors the transmitter exactly, including the fallback rule.
    std::vector<BranchMeta> state_metas(std::span<const double> state) const {
        if (cfg_.mode == EqualizerMode::uniform) return table_.row(full_mask(c_.Q)).metas;
        const double tail = isi_tail(ch_, state);
        const ForbiddenMask mask = forbidden_mask_from_tail(tail, ch_.h0(), gamma_, c_);
        if (mask == 0) return {fallback_meta(tail, ch_.h0(), c_)};
        return table_.row(mask).metas;
    }

    // Forward pass, backward pass and per-branch zeta in one sweep.
    // apriori_llr holds one extrinsic LLR per coded bit (m per step).
    ZetaTable run(std::span<const double> y, std::span<const double> apriori_llr) const {
        const std::size_t n_steps = y.size();
        require(n_steps > 0, "equalizer: empty frame");
        require(apriori_llr.size() == n_steps * static_cast<std::size_t>(c_.m),
                "equalizer: a-priori frame must hold m LLRs per symbol");
        const std::size_t hist = ch_.span() - 1;
        const double inv_two_var = 1.0 / (2.0 * noise_.total_variance());

        std::vector<double> lp0(apriori_llr.size()), lp1(apriori_llr.size());
        for (std::size_t i = 0; i < apriori_llr.size(); ++i) {
            lp0[i] = log_p0_from_llr(apriori_llr[i]);
            lp1[i] = log_p1_from_llr(apriori_llr[i]);
        }

        ZetaTable table;
        table.steps.resize(n_steps);
        std::vector<std::vector<double>> parent_alphas(n_steps);

        std::vector<std::int8_t> cur_hist(hist, -1);  // -1 = zero prehistory
        std::vector<double> cur_alpha{0.0};
        int n_surv = 1;
        double norm_total = 0.0;

        struct Extension {
            std::uint64_t key;
            std::int32_t parent;
            std::int16_t point;
            std::uint32_t known_mask, known_bits;
            double log_probability;
            double weight;
        };
        std::vector<Extension> exts;
        std::vector<std::uint64_t> child_keys;
        std::vector<double> child_alpha;
        std::vector<std::int32_t> ext_child, order, child_slot;

        for (std::size_t n = 0; n < n_steps; ++n) {
            exts.clear();
            for (int s = 0; s < n_surv; ++s) {
                const std::int8_t* h = cur_hist.data() + static_cast<std::size_t>(s) * hist;
                double tail = 0.0;
                for (std::size_t k = 0; k < hist; ++k)
                    tail += ch_.taps[k + 1] *
                            (h[k] < 0 ? 0.0 : c_.points[static_cast<std::size_t>(h[k])]);
                // FNV over the history minus its oldest entry; extended by the
                // new point this becomes the child identity (collisions are
                // astronomically unlikely for these sizes).
                std::uint64_t prefix = 1469598103934665603ULL;
                for (std::size_t k = 0; k + 1 < hist; ++k) {
                    prefix ^= static_cast<std::uint8_t>(h[k]);
                    prefix *= 1099511628211ULL;
                }
                const BranchMeta* metas = nullptr;
                std::size_t n_metas = 0;
                BranchMeta fb;
                if (cfg_.mode == EqualizerMode::uniform) {
                    const auto& row = table_.row(full_mask(c_.Q));
                    metas = row.metas.data();
                    n_metas = row.metas.size();
                } else {
                    const ForbiddenMask mask =
                        forbidden_mask_from_tail(tail, ch_.h0(), gamma_, c_);
                    if (mask == 0) {
                        fb = fallback_meta(tail, ch_.h0(), c_);
                        metas = &fb;
                        n_metas = 1;
                    } else {
                        const auto& row = table_.row(mask);
                        metas = row.metas.data();
                        n_metas = row.metas.size();
                    }
                }
                for (std::size_t b = 0; b < n_metas; ++b) {
                    const BranchMeta& meta = metas[b];
                    const double mu = ch_.h0() * meta.symbol + tail;
                    const double d = y[n] - mu;
                    // online branch probability under the current priors:
                    // the exact mass of the labels mapped to this symbol
                    const std::size_t bit0 = n * static_cast<std::size_t>(c_.m);
                    double prior = kNegInf;
                    for (const std::uint8_t lab : meta.labels) {
                        double p = 0.0;
                        for (int l = 0; l < c_.m; ++l)
                            p += (lab >> (c_.m - 1 - l)) & 1
                                     ? lp1[bit0 + static_cast<std::size_t>(l)]
                                     : lp0[bit0 + static_cast<std::size_t>(l)];
                        prior = max_star(prior, p);
                    }
                    // at uniform priors this reduces to log(count/Q), the
                    // stationary transition probability
                    double w = -d * d * inv_two_var + prior;
                    Extension e;
                    e.key = hist == 0
                                ? 0
                                : (prefix ^ static_cast<std::uint64_t>(meta.point_index)) *
                                      1099511628211ULL;
                    e.parent = s;
                    e.point = static_cast<std::int16_t>(meta.point_index);
                    e.known_mask = meta.known_mask;
                    e.known_bits = meta.known_bits;
                    e.log_probability = meta.log_probability;
                    e.weight = w;
                    exts.push_back(e);
                }
            }

            // merge extensions with identical child histories
            child_keys.clear();
            child_alpha.clear();
            ext_child.assign(exts.size(), -1);
            for (std::size_t e = 0; e < exts.size(); ++e) {
                const double contrib =
                    cur_alpha[static_cast<std::size_t>(exts[e].parent)] + exts[e].weight;
                std::int32_t ci = -1;
                for (std::size_t j = 0; j < child_keys.size(); ++j)
                    if (child_keys[j] == exts[e].key) {
                        ci = static_cast<std::int32_t>(j);
                        break;
                    }
                if (ci < 0) {
                    child_keys.push_back(exts[e].key);
                    child_alpha.push_back(contrib);
                    ci = static_cast<std::int32_t>(child_keys.size() - 1);
                } else {
                    child_alpha[static_cast<std::size_t>(ci)] =
                        max_star(child_alpha[static_cast<std::size_t>(ci)], contrib);
                }
                ext_child[e] = ci;
            }

            bool any_finite = false;
            for (double a : child_alpha)
                if (a != kNegInf) any_finite = true;
            if (!any_finite) throw std::runtime_error("equalizer: all branch weights are -inf");

            // keep the top M children, metrics normalized to max 0
            order.resize(child_alpha.size());
            std::iota(order.begin(), order.end(), 0);
            const std::size_t keep =
                std::min<std::size_t>(static_cast<std::size_t>(cfg_.M), order.size());
            std::partial_sort(order.begin(), order.begin() + static_cast<long>(keep), order.end(),
                              [&](std::int32_t a, std::int32_t b) {
                                  return child_alpha[static_cast<std::size_t>(a)] >
                                         child_alpha[static_cast<std::size_t>(b)];
                              });
            child_slot.assign(child_alpha.size(), -1);
            for (std::size_t j = 0; j < keep; ++j)
                child_slot[static_cast<std::size_t>(order[j])] = static_cast<std::int32_t>(j);

            std::vector<std::int8_t> new_hist(keep * hist, -1);
            std::vector<double> new_alpha(keep);
            double mx = kNegInf;
            for (std::size_t j = 0; j < keep; ++j) {
                new_alpha[j] = child_alpha[static_cast<std::size_t>(order[j])];
                mx = std::max(mx, new_alpha[j]);
            }
            for (double& a : new_alpha) a -= mx;
            norm_total += mx;

            auto& step = table.steps[n];
            step.branches.reserve(exts.size());
            for (std::size_t e = 0; e < exts.size(); ++e) {
                const std::int32_t slot = child_slot[static_cast<std::size_t>(ext_child[e])];
                if (slot < 0) continue;
                TrellisBranch br;
                br.parent = exts[e].parent;
                br.child = slot;
                br.point = exts[e].point;
                br.known_mask = exts[e].known_mask;
                br.known_bits = exts[e].known_bits;
                br.log_probability = exts[e].log_probability;
                br.weight = exts[e].weight;
                step.branches.push_back(br);
                if (hist > 0) {
                    std::int8_t* dst = new_hist.data() + static_cast<std::size_t>(slot) * hist;
                    if (dst[0] == -1) {
                        const std::int8_t* src =
                            cur_hist.data() + static_cast<std::size_t>(exts[e].parent) * hist;
                        dst[0] = static_cast<std::int8_t>(exts[e].point);
                        for (std::size_t k = 1; k < hist; ++k) dst[k] = src[k - 1];
                    }
                }
            }
            step.survivor_count = static_cast<int>(keep);
            // forward metric of the best child that did NOT survive, in the
            // same (un-normalized) units as pa[parent] + weight
            double pruned_best = kNegInf;
            for (std::size_t j = 0; j < child_alpha.size(); ++j)
                if (child_slot[j] < 0) pruned_best = std::max(pruned_best, child_alpha[j]);
            step.z_floor = pruned_best;  // completed during the backward pass
            parent_alphas[n] = cur_alpha;
            cur_hist.swap(new_hist);
            cur_alpha.swap(new_alpha);
            n_surv = static_cast<int>(keep);
        }
        table.best_path_metric =
            norm_total + *std::max_element(cur_alpha.begin(), cur_alpha.end());

        // backward recursion restricted to the retained branches; terminal
        // metrics uniform over the retained states
        std::vector<double> beta(cur_alpha.size(), 0.0);
        for (std::size_t n = n_steps; n-- > 0;) {
            auto& step = table.steps[n];
            const auto& pa = parent_alphas[n];
            std::vector<double> beta_prev(pa.size(), kNegInf);
            double beta_best = kNegInf;
            for (double b : beta) beta_best = std::max(beta_best, b);
            for (auto& br : step.branches) {
                const double bchild = beta[static_cast<std::size_t>(br.child)];
                beta_prev[static_cast<std::size_t>(br.parent)] =
                    max_star(beta_prev[static_cast<std::size_t>(br.parent)], br.weight + bchild);
                br.log_zeta = pa[static_cast<std::size_t>(br.parent)] + br.weight + bchild;
            }
            double zsum = kNegInf;
            for (const auto& br : step.branches) zsum = max_star(zsum, br.log_zeta);
            for (auto& br : step.branches) br.log_zeta -= zsum;
            step.z_floor = step.z_floor == kNegInf ? kNegInf
                                                   : step.z_floor + beta_best - zsum;
            double bmax = kNegInf;
            for (double b : beta_prev) bmax = std::max(bmax, b);
            if (bmax != kNegInf)
                for (double& b : beta_prev) b -= bmax;
            beta.swap(beta_prev);
        }
        return table;
    }

    // Eq.-(10)-style bit LLRs: erasure positions pull in the a-priori bit
    // probabilities, and the incoming extrinsic is subtracted at the end.
    std::vector<double> compute_bit_llrs(const ZetaTable& zeta,
                                         std::span<const double> apriori_llr) const {
        const std::size_t n_steps = zeta.steps.size();
        require(apriori_llr.size() == n_steps * static_cast<std::size_t>(c_.m),
                "compute_bit_llrs: shape mismatch");
        std::vector<double> out(apriori_llr.size(), 0.0);
        for (std::size_t n = 0; n < n_steps; ++n) {
            // Survivor pruning removes hypotheses entirely; without a floor
            // the ratio saturates and reports certainty the evidence does
            // not carry.  Bound the unseen mass by the worst retained zeta,
            // treated as one erased-label branch at the pruning cut.
            const double z_cut = zeta.steps[n].z_floor;
            const bool pruned_any = z_cut != kNegInf;
            for (int l = 0; l < c_.m; ++l) {
                const std::size_t bitpos =
                    n * static_cast<std::size_t>(c_.m) + static_cast<std::size_t>(l);
                const double la = apriori_llr[bitpos];
                const double alp0 = log_p0_from_llr(la), alp1 = log_p1_from_llr(la);
                const std::uint32_t sel = 1u << (c_.m - 1 - l);
                double num = kNegInf, den = kNegInf;
                for (const auto& br : zeta.steps[n].branches) {
                    if (br.known_mask & sel) {
                        if (br.known_bits & sel)
                            den = max_star(den, br.log_zeta);
                        else
                            num = max_star(num, br.log_zeta);
                    } else {
                        num = max_star(num, br.log_zeta + alp0);
                        den = max_star(den, br.log_zeta + alp1);
                    }
                }
                if (num == kNegInf && den == kNegInf) {
                    out[bitpos] = 0.0;  // total erasure
                    continue;
                }
                if (pruned_any) {
                    num = max_star(num, z_cut + alp0);
                    den = max_star(den, z_cut + alp1);
                }
                // extrinsic comes off the un-clamped ratio, or a decided
                // branch would zero its own output; clamp only at the end
                double raw;
                if (num == kNegInf)
                    raw = -4.0 * kLlrClamp;
                else if (den == kNegInf)
                    raw = 4.0 * kLlrClamp;
                else
                    raw = num - den;
                out[bitpos] = clamp_llr(raw - la);
            }
        }
        return out;
    }

    std::vector<double> equalize(std::span<const double> y,
                                 std::span<const double> apriori_llr) const {
        return compute_bit_llrs(run(y, apriori_llr), apriori_llr);
    }

  private:
    ChannelModel ch_;
    Constellation c_;
    MappingTable table_;
    double gamma_;
    NoiseSpec noise_;
    EqualizerConfig cfg_;
};

struct ReceiveResult {
    std::vector<std::uint8_t> info_bits;
    int iterations = 0;
    std::vector<double> iteration_ber;  // per outer iteration, when truth given
};

// Alternates the trellis equalizer and the turbo decoder, exchanging
// extrinsic LLRs, until the iteration budget or decoder convergence.
inline ReceiveResult iterative_receive(std::span<const double> y, const TrellisEqualizer& eq,
                                       const TurboConfig& turbo_cfg,
                                       const EqualizerConfig& eq_cfg,
                                       std::span<const std::uint8_t> truth = {}) {
    const int m = eq.constellation().m;
    require(static_cast<int>(y.size()) * m == turbo_cfg.coded_length,
            "iterative_receive: frame length does not match coded length");
    std::vector<double> dec_ext(static_cast<std::size_t>(turbo_cfg.coded_length), 0.0);
    TurboDecoder decoder(turbo_cfg);
    ReceiveResult res;
    std::vector<std::uint8_t> prev_hard;
    for (int it = 0; it < eq_cfg.max_iterations; ++it) {
        std::vector<double> eq_ext = eq.equalize(y, dec_ext);
        if (eq_cfg.eq_extrinsic_scale != 1.0)
            for (double& v : eq_ext) v *= eq_cfg.eq_extrinsic_scale;
        decoder.set_channel(eq_ext);
        for (int r = 0; r < std::max(1, eq_cfg.decoder_inner_iterations); ++r) decoder.iterate();
        std::vector<std::uint8_t> hard = decoder.hard_info();
        ++res.iterations;
        if (!truth.empty()) {
            std::size_t errs = 0;
            for (std::size_t i = 0; i < truth.size(); ++i) errs += truth[i] != hard[i];
            res.iteration_ber.push_back(static_cast<double>(errs) /
                                        static_cast<double>(truth.size()));
        }
        const bool stable = eq_cfg.early_stop && !prev_hard.empty() && hard == prev_hard;
        prev_hard = hard;
        res.info_bits = std::move(hard);
        if (stable) break;
        if (it + 1 < eq_cfg.max_iterations) {
            dec_ext = decoder.extrinsic_coded();
            if (eq_cfg.dec_extrinsic_scale != 1.0)
                for (double& v : dec_ext) v *= eq_cfg.dec_extrinsic_scale;
        }
    }
    if (!truth.empty())
        while (static_cast<int>(res.iteration_ber.size()) < eq_cfg.max_iterations)
            res.iteration_ber.push_back(res.iteration_ber.back());
    return res;
}

}  // namespace olshape
