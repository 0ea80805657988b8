// Shared small helpers: dB conversions, clamping, numeric constants.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace olshape {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// LLR magnitudes are clamped here to keep exp() well-behaved.
inline constexpr double kLlrClamp = 30.0;

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double clamp_llr(double v) {
    if (v > kLlrClamp) return kLlrClamp;
    if (v < -kLlrClamp) return -kLlrClamp;
    return v;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace olshape
