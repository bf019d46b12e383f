#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sdeweak/problem.hpp"
#include "sdeweak/rng.hpp"

namespace sdeweak {

enum class SchemeKind { EM, FTE1, FTE2, MES, DTE, BS, BTS, BEM };

struct SchemeSpec {
    SchemeKind kind = SchemeKind::EM;
    double alpha1 = 0.5;       // FTE1, in (0, 1/2]
    double alpha2 = 0.5;       // FTE1, in (0, 1/2]
    double vartheta = 0.5;     // FTE2, in (0, 1/2]
    double newton_tol = 1e-6;  // BEM, successive-iterate l2 tolerance
    int newton_max_iter = 50;  // BEM
};

// Validates parameter ranges; throws std::invalid_argument on violation.
SchemeSpec make_scheme_spec(SchemeKind kind, double alpha1 = 0.5, double alpha2 = 0.5,
                            double vartheta = 0.5, double newton_tol = 1e-6,
                            int newton_max_iter = 50);

SchemeKind scheme_kind_from_id(const std::string& id);
std::string scheme_id(SchemeKind kind);
const std::vector<std::string>& scheme_ids();

// Modified drift/diffusion pair (f_bar, g_bar) of the modified Euler template
//   Y_{n+1} = Y_n + f_bar(Y_n) h + g_bar(Y_n) dW_n.
struct ModifiedCoefficients {
    Vector f_bar;  // d
    Matrix g_bar;  // d x m
};

// x + f(x) h + g(x) dW. May produce non-finite values on stiff problems;
// explosion is handled by the trajectory driver, not here.
Vector step_euler_maruyama(const SdeProblem& problem, const Vector& x, double h,
                           const Vector& dW);

// FTE1: D = 1 + h^a1 |f| + h^a2 ||g||_F^2, f_bar = f/D, g_bar = g/D.
ModifiedCoefficients modify_fte1(const SdeProblem& problem, const Vector& x, double h,
                                 const SchemeSpec& spec);
// FTE2: D = 1 + h^vartheta |x|^(2r).
ModifiedCoefficients modify_fte2(const SdeProblem& problem, const Vector& x, double h,
                                 const SchemeSpec& spec);
// MES: D = 1 + h |f|^2.
ModifiedCoefficients modify_mes(const SdeProblem& problem, const Vector& x, double h,
                                const SchemeSpec& spec);
// DTE: f_bar = f / (1 + h |f|), diffusion untouched.
ModifiedCoefficients modify_dte(const SdeProblem& problem, const Vector& x, double h,
                                const SchemeSpec& spec);
// BS: f_bar = tanh(h f)/h componentwise, g_bar = tanh(sqrt(h) g)/sqrt(h) entrywise.
ModifiedCoefficients modify_bs(const SdeProblem& problem, const Vector& x, double h,
                               const SchemeSpec& spec);
// BTS: D = 1 + h |f| + |g(x) dW|; the modifier is random, so it takes the same
// increment that the step will use.
ModifiedCoefficients modify_bts(const SdeProblem& problem, const Vector& x, double h,
                                const Vector& dW, const SchemeSpec& spec);

// Dispatches to the modifier for spec.kind (FTE1/FTE2/MES/DTE/BS/BTS) and
// returns x + f_bar h + g_bar dW.
Vector step_modified_euler(const SdeProblem& problem, const Vector& x, double h,
                           const Vector& dW, const SchemeSpec& spec);

// Backward Euler step: solves Y = x + h f(Y) + g(x) dW by Newton iteration on
// F(Y) = Y - h f(Y) - b with Jacobian I - h Df(Y) (dense LU, partial
// pivoting). Stops when ||Y_{k+1} - Y_k||_2 < newton_tol. Divergence (iterate
// cap or non-finite iterate) is reported via converged=false; the caller marks
// the trajectory exploded.
struct NewtonResult {
    Vector y;
    int iterations = 0;
    bool converged = false;
};
NewtonResult step_backward_euler(const SdeProblem& problem, const Vector& x, double h,
                                 const Vector& dW, const SchemeSpec& spec);

// Trajectory terminal state. Explosion (non-finite component or |Y| > 1e10,
// or a failed Newton solve) is data, not an error.
struct PathState {
    Vector state;
    bool exploded = false;
    int steps_taken = 0;
    int max_newton_iterations = 0;  // 0 for explicit schemes
};

PathState simulate_trajectory(const SdeProblem& problem, const SchemeSpec& spec,
                              int n_steps, RngStream& stream);

// Explosion predicate shared by all drivers.
bool state_exploded(const Vector& y);

}  // namespace sdeweak
