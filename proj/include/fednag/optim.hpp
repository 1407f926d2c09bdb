#pragma once

#include "fednag/problems.hpp"
#include "fednag/types.hpp"

namespace fednag {

struct Trace;  // federation.hpp

/// One accelerated step:
///   v' = gamma*v - eta*g
///   w' = w + gamma*v' - eta*g
/// `grad` must be the gradient at state.w. The equivalent form
/// w - gamma*v + (1+gamma)*v' is kept as a cross-check only, so every trace
/// has a single rounding behavior.
OptimState nag_step(const OptimState& state, const Vector& grad, const Hyper& hyper);

/// Plain gradient-descent step; the momentum slot is carried through as zero.
OptimState gd_step(const OptimState& state, const Vector& grad, const Hyper& hyper);

/// Runs `rule` on the global objective from w0 (zeros when empty) for T
/// iterations and records the full trajectory. A non-finite loss or
/// ||w|| > 1e12 truncates the run with a divergence flag instead of aborting.
/// `batch_size` > 0 draws reproducible mini-batches from the pooled data.
Trace run_centralized(const Problem& problem, const Hyper& hyper, int iterations,
                      LocalRule rule, Vector w0 = Vector(), int batch_size = 0,
                      std::uint64_t seed = 0);

/// State norm beyond which a run is declared divergent.
inline constexpr double kDivergenceNorm = 1e12;

}  // namespace fednag
