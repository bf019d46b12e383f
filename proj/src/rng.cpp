#include "sdeweak/rng.hpp"

#include <cmath>

namespace sdeweak {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t x) {
    std::uint64_t z = x + kGoldenGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace

std::uint32_t derive_seed(std::uint32_t master_seed, std::uint64_t trajectory_index) {
    const std::uint64_t keyed = static_cast<std::uint64_t>(master_seed) ^
                                (trajectory_index * kGoldenGamma);
    return static_cast<std::uint32_t>(splitmix64(keyed));
}

RngStream derive_stream(std::uint32_t master_seed, std::uint64_t trajectory_index) {
    RngStream s;
    s.master_seed = master_seed;
    s.trajectory_index = trajectory_index;
    s.engine.seed(derive_seed(master_seed, trajectory_index));
    return s;
}

double next_uniform53(RngStream& stream) {
    const std::uint32_t a = stream.engine() >> 5;   // 27 bits
    const std::uint32_t b = stream.engine() >> 6;   // 26 bits
    return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0);
}

double next_standard_normal(RngStream& stream) {
    const double u1 = 1.0 - next_uniform53(stream);  // (0, 1]: log stays finite
    const double u2 = next_uniform53(stream);        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void fill_increment(RngStream& stream, double sqrt_h, Vector& dW) {
    for (Eigen::Index i = 0; i < dW.size(); ++i)
        dW[i] = next_standard_normal(stream) * sqrt_h;
}

BrownianIncrements brownian_path(RngStream& stream, int n_steps, int dim_noise,
                                 double step_size) {
    if (n_steps < 1) throw std::invalid_argument("brownian_path requires n_steps >= 1");
    if (step_size <= 0.0) throw std::invalid_argument("brownian_path requires step_size > 0");
    BrownianIncrements inc;
    inc.dim_noise = dim_noise;
    inc.step_size = step_size;
    inc.values.resize(static_cast<std::size_t>(n_steps), Vector(dim_noise));
    const double sqrt_h = std::sqrt(step_size);
    for (auto& v : inc.values) fill_increment(stream, sqrt_h, v);
    return inc;
}

}  // namespace sdeweak
