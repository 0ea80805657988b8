// Online shaping precoder: per-state forbidden sets, the 2^Q-row mapping
// table with Gray-label reassignment, and the branch metadata (merged labels
// with erasures, transition probabilities) shared with the receiver.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "olshape/channel.hpp"
#include "olshape/common.hpp"
#include "olshape/constellation.hpp"

namespace olshape {

// Indicator vector A over the constellation, packed so that A_0 (the lowest
// point) sits in the most significant of the Q bits.  The packed value is
// the mapping-table row index.
using ForbiddenMask = std::uint32_t;

inline bool mask_allows(ForbiddenMask mask, int point_index, int Q) {
    return (mask >> (Q - 1 - point_index)) & 1u;
}

inline ForbiddenMask full_mask(int Q) {
    return (Q >= 32) ? ~0u : ((1u << Q) - 1u);
}

// ISI contribution of the last L-1 symbols (newest first).
inline double isi_tail(const ChannelModel& ch, std::span<const double> state) {
    require(state.size() + 1 == ch.span(), "isi_tail: state length must be L-1");
    double acc = 0.0;
    for (std::size_t k = 0; k < state.size(); ++k) acc += ch.taps[k + 1] * state[k];
    return acc;
}

// A_i = 1  iff  (h_0 x_i + tail)^2 <= gamma.
inline ForbiddenMask forbidden_mask_from_tail(double tail, double h0, double gamma,
                                              const Constellation& c) {
    require(gamma > 0.0, "forbidden_mask: gamma must be positive");
    ForbiddenMask mask = 0;
    for (int i = 0; i < c.Q; ++i) {
        const double v = h0 * c.point(i) + tail;
        if (v * v <= gamma) mask |= 1u << (c.Q - 1 - i);
    }
    return mask;
}

inline ForbiddenMask forbidden_mask(std::span<const double> state, const ChannelModel& ch,
                                    double gamma, const Constellation& c) {
    return forbidden_mask_from_tail(isi_tail(ch, state), ch.h0(), gamma, c);
}

// Point transmitted when every constellation point violates the constraint:
// the one closest to cancelling the tail.
inline int fallback_point(double tail, double h0, const Constellation& c) {
    int best = 0;
    double best_v = kPosInf;
    for (int i = 0; i < c.Q; ++i) {
        const double v = std::abs(h0 * c.point(i) + tail);
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

inline constexpr std::uint32_t kErasureBit = 2;  // label symbol: 0, 1, or X

// One trellis branch of the shaped source: the transmitted point, the merged
// bit label (positions where the underlying labels disagree are erasures),
// the exact set of labels mapped to it, and the transition probability under
// uniform input bits.
struct BranchMeta {
    int point_index = 0;
    double symbol = 0.0;
    std::uint32_t known_mask = 0;  // bit (m-1-l) set when position l is not X
    std::uint32_t known_bits = 0;  // values at known positions, same packing
    std::vector<std::uint8_t> labels;
    int label_count = 0;
    double probability = 0.0;      // label_count / Q
    double log_probability = 0.0;

    // Label symbol at position l (0 = first bit).
    std::uint32_t label_at(int l, int m) const {
        const std::uint32_t sel = 1u << (m - 1 - l);
        if (!(known_mask & sel)) return kErasureBit;
        return (known_bits & sel) ? 1u : 0u;
    }
};

struct MappingRow {
    bool fallback = false;
    std::vector<int> point_of_label;  // label value -> point index
    std::vector<BranchMeta> metas;    // one per transmitted point, ascending
};

// Gray-label reassignment of the forbidden points.  Forbidden labels are
// processed in ascending point order; each goes to the allowed point with
// (1) minimal label Hamming distance, (2) minimal Euclidean distance,
// (3) minimal current assigned-label count, (4) lowest point value.
inline MappingRow build_mapping_row(ForbiddenMask mask, const Constellation& c) {
    MappingRow row;
    if (mask == 0) {
        row.fallback = true;
        return row;
    }
    const int Q = c.Q;
    row.point_of_label.assign(static_cast<std::size_t>(Q), -1);
    std::vector<int> load(static_cast<std::size_t>(Q), 0);
    for (int i = 0; i < Q; ++i) {
        if (!mask_allows(mask, i, Q)) continue;
        row.point_of_label[c.label(i)] = i;
        load[static_cast<std::size_t>(i)] = 1;
    }
    for (int i = 0; i < Q; ++i) {
        if (mask_allows(mask, i, Q)) continue;
        const std::uint32_t lab = c.label(i);
        int best = -1;
        for (int j = 0; j < Q; ++j) {
            if (!mask_allows(mask, j, Q)) continue;
            if (best < 0) {
                best = j;
                continue;
            }
            const int dh_j = hamming_distance(lab, c.label(j));
            const int dh_b = hamming_distance(lab, c.label(best));
            if (dh_j != dh_b) {
                if (dh_j < dh_b) best = j;
                continue;
            }
            // points sit on a uniform grid, so |i - j| orders exactly like
            // the Euclidean distance and avoids float ties
            const int de_j = std::abs(i - j);
            const int de_b = std::abs(i - best);
            if (de_j != de_b) {
                if (de_j < de_b) best = j;
                continue;
            }
            if (load[static_cast<std::size_t>(j)] != load[static_cast<std::size_t>(best)]) {
                if (load[static_cast<std::size_t>(j)] < load[static_cast<std::size_t>(best)])
                    best = j;
                continue;
            }
            // ascending point order makes "lowest value" redundant here, but
            // keep it explicit: j > best means a higher point, never chosen.
        }
        row.point_of_label[lab] = best;
        ++load[static_cast<std::size_t>(best)];
    }
    return row;
}

// Per-symbol merged labels and probabilities of a (non-fallback) row.
inline std::vector<BranchMeta> branch_metas(const MappingRow& row, const Constellation& c) {
    require(!row.fallback, "branch_metas: fallback row has no label map");
    const int Q = c.Q;
    std::vector<BranchMeta> metas;
    for (int p = 0; p < Q; ++p) {
        BranchMeta meta;
        meta.point_index = p;
        meta.symbol = c.point(p);
        bool first = true;
        std::uint32_t agree = 0, disagree = 0;
        for (int lab = 0; lab < Q; ++lab) {
            if (row.point_of_label[static_cast<std::size_t>(lab)] != p) continue;
            ++meta.label_count;
            meta.labels.push_back(static_cast<std::uint8_t>(lab));
            if (first) {
                agree = static_cast<std::uint32_t>(lab);
                first = false;
            } else {
                disagree |= agree ^ static_cast<std::uint32_t>(lab);
            }
        }
        if (meta.label_count == 0) continue;
        const std::uint32_t all = full_mask(Q) & ((1u << c.m) - 1u);
        meta.known_mask = all & ~disagree;
        meta.known_bits = agree & meta.known_mask;
        meta.probability = static_cast<double>(meta.label_count) / Q;
        meta.log_probability = std::log(meta.probability);
        metas.push_back(meta);
    }
    return metas;
}

// The fallback branch: deterministic transmission, every bit an erasure.
inline BranchMeta fallback_meta(double tail, double h0, const Constellation& c) {
    BranchMeta meta;
    meta.point_index = fallback_point(tail, h0, c);
    meta.symbol = c.point(meta.point_index);
    meta.known_mask = 0;
    meta.known_bits = 0;
    meta.label_count = c.Q;
    for (int lab = 0; lab < c.Q; ++lab) meta.labels.push_back(static_cast<std::uint8_t>(lab));
    meta.probability = 1.0;
    meta.log_probability = 0.0;
    return meta;
}

// All 2^Q rows, built once and immutable afterwards; the table does not
// depend on the channel length.
class MappingTable {
  public:
    explicit MappingTable(const Constellation& c) : constellation_(c) {
        rows_.resize(std::size_t{1} << c.Q);
        for (std::size_t mask = 0; mask < rows_.size(); ++mask) {
            rows_[mask] = build_mapping_row(static_cast<ForbiddenMask>(mask), c);
            if (!rows_[mask].fallback) rows_[mask].metas = branch_metas(rows_[mask], c);
        }
    }

    const MappingRow& row(ForbiddenMask mask) const { return rows_[mask]; }
    const Constellation& constellation() const { return constellation_; }

  private:
    Constellation constellation_;
    std::vector<MappingRow> rows_;
};

struct PrecodeResult {
    std::vector<double> symbols;
    std::uint64_t fallback_count = 0;
};

// Maps m coded bits per step to a symbol meeting p_n <= gamma, shifting the
// channel state as it goes.  Zero prehistory at frame start.
inline PrecodeResult precode_frame(std::span<const std::uint8_t> bits, const ChannelModel& ch,
                                   double gamma, const MappingTable& table) {
    const Constellation& c = table.constellation();
    require(bits.size() % static_cast<std::size_t>(c.m) == 0,
            "precode_frame: bit count not divisible by m");
    const std::size_t nsym = bits.size() / static_cast<std::size_t>(c.m);
    const std::size_t hist_len = ch.span() - 1;
    std::vector<double> history(hist_len, 0.0);  // newest first
    PrecodeResult out;
    out.symbols.resize(nsym);
    for (std::size_t n = 0; n < nsym; ++n) {
        const double tail = isi_tail(ch, history);
        const ForbiddenMask mask = forbidden_mask_from_tail(tail, ch.h0(), gamma, c);
        double x;
        if (mask == 0) {
            x = c.point(fallback_point(tail, ch.h0(), c));
            ++out.fallback_count;
        } else {
            std::uint32_t lab = 0;
            for (int l = 0; l < c.m; ++l)
                lab = (lab << 1) | bits[n * static_cast<std::size_t>(c.m) + static_cast<std::size_t>(l)];
            x = c.point(table.row(mask).point_of_label[lab]);
        }
        out.symbols[n] = x;
        if (hist_len > 0) {
            for (std::size_t k = hist_len - 1; k > 0; --k) history[k] = history[k - 1];
            history[0] = x;
        }
    }
    return out;
}

inline PrecodeResult precode_frame(std::span<const std::uint8_t> bits, const ChannelModel& ch,
                                   double gamma, const Constellation& c) {
    return precode_frame(bits, ch, gamma, MappingTable(c));
}

// Plain Gray mapping, m bits per symbol (the un-shaped transmitter).
inline std::vector<double> gray_map(std::span<const std::uint8_t> bits, const Constellation& c) {
    require(bits.size() % static_cast<std::size_t>(c.m) == 0,
            "gray_map: bit count not divisible by m");
    const std::size_t nsym = bits.size() / static_cast<std::size_t>(c.m);
    std::vector<double> symbols(nsym);
    for (std::size_t n = 0; n < nsym; ++n) {
        std::uint32_t lab = 0;
        for (int l = 0; l < c.m; ++l)
            lab = (lab << 1) | bits[n * static_cast<std::size_t>(c.m) + static_cast<std::size_t>(l)];
        symbols[n] = c.point(c.point_of_label[lab]);
    }
    return symbols;
}

}  // namespace olshape
