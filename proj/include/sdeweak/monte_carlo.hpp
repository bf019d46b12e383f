#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdeweak/problem.hpp"
#include "sdeweak/schemes.hpp"

namespace sdeweak {

struct WeakErrorEstimate {
    std::string scheme_id;
    std::string phi_label;
    double step_size = 0.0;
    long n_trajectories = 0;
    double mean_phi = 0.0;
    double std_error = 0.0;      // sample std / sqrt(n), exploded excluded
    double ci95_halfwidth = 0.0; // 1.96 * std_error exactly
    double weak_error = 0.0;     // |reference - mean_phi|; NaN when n_exploded > 0
    long n_exploded = 0;
    int max_newton_iterations = 0;

    bool reliable() const { return n_exploded == 0; }
};

struct ReferenceValue {
    double value = 0.0;  // high-accuracy estimate of E[phi(X_T)]
    double h_ref = 0.0;
    long n_trajectories = 0;
    double std_error = 0.0;
};

struct ReferenceUnreliable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct McOptions {
    int n_threads = 0;      // 0 = hardware concurrency; never affects results
    int batch_size = 1024;  // trajectories per worker task; changing it regroups
                            // the floating-point reduction (statistics unchanged)
};

// Per-phi accumulated terminal statistics of one (scheme, h) run. Sums are
// over non-exploded trajectories only and are reduced in a fixed batch order,
// so results are bitwise independent of the worker count.
struct TerminalStats {
    long n_total = 0;
    long n_exploded = 0;
    int max_newton_iterations = 0;
    std::vector<double> sum_phi;     // one entry per test function
    std::vector<double> sum_phi_sq;
};

// Simulates trajectory indices [index_offset, index_offset + M) with streams
// derived from master_seed and evaluates every phi on each terminal state.
TerminalStats run_trajectories(const SdeProblem& problem, const SchemeSpec& spec,
                               int n_steps, long M, std::uint32_t master_seed,
                               std::uint64_t index_offset,
                               const std::vector<TestFunction>& phis,
                               const McOptions& options = {});

// Trajectory indices used by benchmark runs start at 0; reference runs are
// offset by 2^63 so the two index ranges are disjoint and the Monte Carlo
// estimates independent.
inline constexpr std::uint64_t kReferenceIndexOffset = 1ull << 63;

// Reference value from M backward-Euler trajectories at h_ref. Throws
// ReferenceUnreliable if any trajectory explodes.
ReferenceValue compute_reference(const SdeProblem& problem, const TestFunction& phi,
                                 double h_ref, long M, std::uint32_t master_seed,
                                 const McOptions& options = {});

// As above but sharing one set of trajectories across several test functions.
std::vector<ReferenceValue> compute_references(const SdeProblem& problem,
                                               const std::vector<TestFunction>& phis,
                                               double h_ref, long M,
                                               std::uint32_t master_seed,
                                               const McOptions& options = {});

WeakErrorEstimate estimate_weak_error(const SdeProblem& problem, const SchemeSpec& spec,
                                      const TestFunction& phi, double h, long M,
                                      std::uint32_t master_seed,
                                      const ReferenceValue& reference,
                                      const McOptions& options = {});

// Shared-trajectory variant: one simulation pass, one estimate per phi.
std::vector<WeakErrorEstimate> estimate_weak_errors(
    const SdeProblem& problem, const SchemeSpec& spec,
    const std::vector<TestFunction>& phis, double h, long M,
    std::uint32_t master_seed, const std::vector<ReferenceValue>& references,
    const McOptions& options = {});

// Statistics helpers shared with the reporting layer.
double mean_from_stats(const TerminalStats& stats, std::size_t phi_idx);
double std_error_from_stats(const TerminalStats& stats, std::size_t phi_idx);

}  // namespace sdeweak
