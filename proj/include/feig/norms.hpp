#pragma once

#include <cstdint>

#include "feig/matrix.hpp"

namespace feig {

inline constexpr int kPowerIterationSteps = 20;
inline constexpr std::uint64_t kPowerIterationSeed = 0x5eed'2a0f'1c3b'7d41ULL;

/// Estimates ||M||_2 of a general matrix by power iteration on M^T M from a
/// seeded random start. Underestimates; relative accuracy ~1e-3 for typical
/// spectra.
Fp norm2_estimate(const Matrix& m, int steps = kPowerIterationSteps,
                  std::uint64_t seed = kPowerIterationSeed);

/// Same for a symmetric matrix, iterating with M itself.
Fp norm2_estimate_symmetric(const Matrix& m, int steps = kPowerIterationSteps,
                            std::uint64_t seed = kPowerIterationSeed);

}  // namespace feig
