// Q-PAM constellations with Gray bit labels.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "olshape/common.hpp"

namespace olshape {

// Labels are m-bit values with b0 in the most significant position, matching
// the column order of the published 4-PAM mapping table.
struct Constellation {
    int Q = 0;
    int m = 0;                         // log2(Q)
    double scale = 1.0;                // (-Q+1 .. Q-1) * scale, unit average power
    std::vector<double> points;        // ascending
    std::vector<std::uint32_t> labels; // Gray label of each point
    std::vector<int> point_of_label;   // inverse map

    double point(int i) const { return points[static_cast<std::size_t>(i)]; }
    std::uint32_t label(int i) const { return labels[static_cast<std::size_t>(i)]; }
};

inline int hamming_distance(std::uint32_t a, std::uint32_t b) {
    return __builtin_popcount(a ^ b);
}

inline Constellation make_pam(int Q) {
    require(Q >= 2 && (Q & (Q - 1)) == 0, "make_pam: Q must be a power of two");
    Constellation c;
    c.Q = Q;
    c.m = 0;
    while ((1 << c.m) < Q) ++c.m;
    c.scale = std::sqrt(3.0 / (static_cast<double>(Q) * Q - 1.0));
    c.points.resize(static_cast<std::size_t>(Q));
    for (int i = 0; i < Q; ++i) c.points[static_cast<std::size_t>(i)] = (-Q + 1 + 2 * i) * c.scale;
    if (Q == 4) {
        // fixed to the published table's assignment
        c.labels = {0b10, 0b00, 0b01, 0b11};
    } else {
        c.labels.resize(static_cast<std::size_t>(Q));
        for (int i = 0; i < Q; ++i)
            c.labels[static_cast<std::size_t>(i)] =
                static_cast<std::uint32_t>(i ^ (i >> 1));  // binary-reflected Gray
    }
    c.point_of_label.assign(static_cast<std::size_t>(Q), -1);
    for (int i = 0; i < Q; ++i) c.point_of_label[c.labels[static_cast<std::size_t>(i)]] = i;
    return c;
}

}  // namespace olshape
