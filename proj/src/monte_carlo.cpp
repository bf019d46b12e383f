#include "sdeweak/monte_carlo.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "sdeweak/rng.hpp"

namespace sdeweak {

namespace {

int resolve_thread_count(const McOptions& options) {
    if (options.n_threads > 0) return options.n_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void check_mesh(const SdeProblem& problem, double h, const char* what) {
    if (h <= 0.0) throw std::invalid_argument(std::string(what) + " must be positive");
    const double steps = problem.horizon / h;
    const double rounded = std::round(steps);
    if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * std::max(1.0, rounded))
        throw std::invalid_argument(std::string(what) +
                                    " must divide the horizon into whole steps");
}

int steps_for(const SdeProblem& problem, double h) {
    return static_cast<int>(std::llround(problem.horizon / h));
}

// Per-batch partial sums. Batches are keyed by trajectory index, accumulated
// independently, then combined in batch order, so the floating-point totals
// never depend on which worker ran which batch.
struct BatchSums {
    std::vector<double> sum_phi;
    std::vector<double> sum_phi_sq;
    long n_exploded = 0;
    int max_newton_iterations = 0;
};

}  // namespace

TerminalStats run_trajectories(const SdeProblem& problem, const SchemeSpec& spec,
                               int n_steps, long M, std::uint32_t master_seed,
                               std::uint64_t index_offset,
                               const std::vector<TestFunction>& phis,
                               const McOptions& options) {
    if (M < 1) throw std::invalid_argument("run_trajectories requires M >= 1");
    if (n_steps < 1) throw std::invalid_argument("run_trajectories requires n_steps >= 1");
    if (phis.empty()) throw std::invalid_argument("run_trajectories requires a test function");

    const std::size_t n_phi = phis.size();
    const long batch_size = std::max(1, options.batch_size);
    const long n_batches = (M + batch_size - 1) / batch_size;
    std::vector<BatchSums> partial(static_cast<std::size_t>(n_batches));

    std::atomic<long> next_batch{0};
    auto worker = [&]() {
        for (;;) {
            const long b = next_batch.fetch_add(1);
            if (b >= n_batches) break;
            BatchSums acc;
            acc.sum_phi.assign(n_phi, 0.0);
            acc.sum_phi_sq.assign(n_phi, 0.0);
            const long lo = b * batch_size;
            const long hi = std::min(M, lo + batch_size);
            for (long i = lo; i < hi; ++i) {
                RngStream stream =
                    derive_stream(master_seed, index_offset + static_cast<std::uint64_t>(i));
                const PathState path = simulate_trajectory(problem, spec, n_steps, stream);
                acc.max_newton_iterations =
                    std::max(acc.max_newton_iterations, path.max_newton_iterations);
                if (path.exploded) {
                    ++acc.n_exploded;
                    continue;
                }
                for (std::size_t p = 0; p < n_phi; ++p) {
                    const double v = phis[p].eval(path.state);
                    acc.sum_phi[p] += v;
                    acc.sum_phi_sq[p] += v * v;
                }
            }
            partial[static_cast<std::size_t>(b)] = std::move(acc);
        }
    };

    const int n_threads = std::min<long>(resolve_thread_count(options), n_batches);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    TerminalStats stats;
    stats.n_total = M;
    stats.sum_phi.assign(n_phi, 0.0);
    stats.sum_phi_sq.assign(n_phi, 0.0);
    for (const BatchSums& acc : partial) {
        stats.n_exploded += acc.n_exploded;
        stats.max_newton_iterations =
            std::max(stats.max_newton_iterations, acc.max_newton_iterations);
        for (std::size_t p = 0; p < n_phi; ++p) {
            stats.sum_phi[p] += acc.sum_phi[p];
            stats.sum_phi_sq[p] += acc.sum_phi_sq[p];
        }
    }
    return stats;
}

double mean_from_stats(const TerminalStats& stats, std::size_t phi_idx) {
    const long n_valid = stats.n_total - stats.n_exploded;
    if (n_valid < 1) return std::numeric_limits<double>::quiet_NaN();
    return stats.sum_phi[phi_idx] / static_cast<double>(n_valid);
}

double std_error_from_stats(const TerminalStats& stats, std::size_t phi_idx) {
    const long n_valid = stats.n_total - stats.n_exploded;
    // one surviving sample (or none) leaves the formula undefined; report an
    // infinite sentinel rather than a misleading zero
    if (n_valid < 2) return std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(n_valid);
    const double sum = stats.sum_phi[phi_idx];
    double var = (stats.sum_phi_sq[phi_idx] - sum * sum / n) / (n - 1.0);
    if (var < 0.0) var = 0.0;  // rounding guard for near-constant samples
    return std::sqrt(var / n);
}

std::vector<ReferenceValue> compute_references(const SdeProblem& problem,
                                               const std::vector<TestFunction>& phis,
                                               double h_ref, long M,
                                               std::uint32_t master_seed,
                                               const McOptions& options) {
    check_mesh(problem, h_ref, "h_ref");
    SchemeSpec bem;
    bem.kind = SchemeKind::BEM;
    const TerminalStats stats = run_trajectories(problem, bem, steps_for(problem, h_ref), M,
                                                 master_seed, kReferenceIndexOffset, phis,
                                                 options);
    if (stats.n_exploded > 0)
        throw ReferenceUnreliable("reference run had " + std::to_string(stats.n_exploded) +
                                  " exploded trajectories");
    std::vector<ReferenceValue> refs(phis.size());
    for (std::size_t p = 0; p < phis.size(); ++p) {
        refs[p].value = mean_from_stats(stats, p);
        refs[p].h_ref = h_ref;
        refs[p].n_trajectories = M;
        refs[p].std_error = std_error_from_stats(stats, p);
    }
    return refs;
}

ReferenceValue compute_reference(const SdeProblem& problem, const TestFunction& phi,
                                 double h_ref, long M, std::uint32_t master_seed,
                                 const McOptions& options) {
    return compute_references(problem, {phi}, h_ref, M, master_seed, options).front();
}

std::vector<WeakErrorEstimate> estimate_weak_errors(
    const SdeProblem& problem, const SchemeSpec& spec,
    const std::vector<TestFunction>& phis, double h, long M,
    std::uint32_t master_seed, const std::vector<ReferenceValue>& references,
    const McOptions& options) {
    check_mesh(problem, h, "h");
    if (references.size() != phis.size())
        throw std::invalid_argument("one reference value per test function required");
    for (const ReferenceValue& ref : references)
        if (ref.h_ref > 0.0 && h < 4.0 * ref.h_ref * (1.0 - 1e-12))
            throw std::invalid_argument("benchmark h must be at least 4x h_ref");

    const TerminalStats stats =
        run_trajectories(problem, spec, steps_for(problem, h), M, master_seed,
                         /*index_offset=*/0, phis, options);

    std::vector<WeakErrorEstimate> estimates(phis.size());
    for (std::size_t p = 0; p < phis.size(); ++p) {
        WeakErrorEstimate& e = estimates[p];
        e.scheme_id = scheme_id(spec.kind);
        e.phi_label = phis[p].label;
        e.step_size = h;
        e.n_trajectories = M;
        e.mean_phi = mean_from_stats(stats, p);
        e.std_error = std_error_from_stats(stats, p);
        e.ci95_halfwidth = 1.96 * e.std_error;
        e.n_exploded = stats.n_exploded;
        e.max_newton_iterations = stats.max_newton_iterations;
        // explosions poison the estimate; flag it instead of reporting a
        // number that silently ignores diverged mass
        e.weak_error = stats.n_exploded > 0
                           ? std::numeric_limits<double>::quiet_NaN()
                           : std::abs(references[p].value - e.mean_phi);
    }
    return estimates;
}

WeakErrorEstimate estimate_weak_error(const SdeProblem& problem, const SchemeSpec& spec,
                                      const TestFunction& phi, double h, long M,
                                      std::uint32_t master_seed,
                                      const ReferenceValue& reference,
                                      const McOptions& options) {
    return estimate_weak_errors(problem, spec, {phi}, h, M, master_seed, {reference}, options)
        .front();
}

}  // namespace sdeweak
