#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sdeweak/problem.hpp"

namespace sdeweak {

// Per-trajectory MT19937 substream keyed by (master_seed, trajectory_index).
// Identical keys give bit-identical output regardless of worker count or the
// order in which streams are created.
struct RngStream {
    std::uint32_t master_seed = 0;
    std::uint64_t trajectory_index = 0;
    std::mt19937 engine;
};

// SplitMix64 finalizer of master_seed XOR (trajectory_index * golden gamma),
// truncated to 32 bits; this is the MT19937 seed of the substream.
std::uint32_t derive_seed(std::uint32_t master_seed, std::uint64_t trajectory_index);

RngStream derive_stream(std::uint32_t master_seed, std::uint64_t trajectory_index);

// 53-bit uniform on [0, 1) assembled from two 32-bit draws
// (a >> 5, b >> 6; (a * 2^26 + b) / 2^53), the classic res53 layout.
double next_uniform53(RngStream& stream);

// Box-Muller cosine branch: u1 in (0, 1], u2 in [0, 1),
// z = sqrt(-2 ln u1) cos(2 pi u2). Exactly two uniforms per normal; the sine
// branch is discarded to keep the draw layout fixed.
double next_standard_normal(RngStream& stream);

// Brownian increments over a uniform mesh: n_steps vectors of m independent
// N(0, h) entries, drawn step-major then component, each z * sqrt(h).
struct BrownianIncrements {
    int dim_noise = 1;
    double step_size = 0.0;
    std::vector<Vector> values;
};

BrownianIncrements brownian_path(RngStream& stream, int n_steps, int dim_noise,
                                 double step_size);

// Single-step variant used by the integrators; consumes draws in the same
// order as brownian_path.
void fill_increment(RngStream& stream, double sqrt_h, Vector& dW);

}  // namespace sdeweak
