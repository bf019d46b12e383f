#include "sdeweak/schemes.hpp"

#include <cmath>

namespace sdeweak {

namespace {

constexpr double kExplosionThreshold = 1e10;

struct StepConstants {
    double h = 0.0;
    double sqrt_h = 0.0;
    double h_a1 = 0.0;  // h^alpha1 (FTE1)
    double h_a2 = 0.0;  // h^alpha2 (FTE1)
    double h_vt = 0.0;  // h^vartheta (FTE2)
};

StepConstants make_constants(double h, const SchemeSpec& spec) {
    StepConstants c;
    c.h = h;
    c.sqrt_h = std::sqrt(h);
    c.h_a1 = std::pow(h, spec.alpha1);
    c.h_a2 = std::pow(h, spec.alpha2);
    c.h_vt = std::pow(h, spec.vartheta);
    return c;
}

struct StepWorkspace {
    Vector f, gdW, y, fy, F, dy;
    Matrix g, J;
    Eigen::PartialPivLU<Matrix> lu;

    StepWorkspace(int d, int m)
        : f(d), gdW(d), y(d), fy(d), F(d), dy(d), g(d, m), J(d, d) {}
};

// Fills f_bar into ws.f and g_bar into ws.g for the modified-Euler schemes.
// BTS is the one random modifier: it consumes the step's own increment.
void modified_coefficients(const SdeProblem& problem, const Vector& x,
                           const StepConstants& c, const SchemeSpec& spec,
                           const Vector* dW, StepWorkspace& ws) {
    problem.drift_into(x, ws.f);
    problem.diffusion_into(x, ws.g);
    double denom = 1.0;
    switch (spec.kind) {
        case SchemeKind::FTE1:
            denom = 1.0 + c.h_a1 * ws.f.norm() + c.h_a2 * ws.g.squaredNorm();
            ws.f /= denom;
            ws.g /= denom;
            break;
        case SchemeKind::FTE2:
            denom = 1.0 + c.h_vt * std::pow(x.squaredNorm(), problem.growth_r);
            ws.f /= denom;
            ws.g /= denom;
            break;
        case SchemeKind::MES:
            denom = 1.0 + c.h * ws.f.squaredNorm();
            ws.f /= denom;
            ws.g /= denom;
            break;
        case SchemeKind::DTE:
            denom = 1.0 + c.h * ws.f.norm();
            ws.f /= denom;
            break;
        case SchemeKind::BS:
            ws.f = ((c.h * ws.f.array()).tanh() / c.h).matrix();
            ws.g = ((c.sqrt_h * ws.g.array()).tanh() / c.sqrt_h).matrix();
            break;
        case SchemeKind::BTS:
            ws.gdW.noalias() = ws.g * (*dW);
            denom = 1.0 + c.h * ws.f.norm() + ws.gdW.norm();
            ws.f /= denom;
            ws.g /= denom;
            break;
        default:
            throw std::logic_error("modified_coefficients: not a modified-Euler scheme");
    }
}

// One step of the configured scheme, in place. Returns false when a backward
// Euler Newton solve fails (divergence or non-finite iterate); newton_iters
// reports the iteration count for BEM and stays 0 otherwise.
bool step_inplace(const SdeProblem& problem, const SchemeSpec& spec,
                  const StepConstants& c, const Vector& dW, Vector& x,
                  StepWorkspace& ws, int& newton_iters) {
    newton_iters = 0;
    if (spec.kind != SchemeKind::BEM) {
        if (spec.kind == SchemeKind::EM) {
            problem.drift_into(x, ws.f);
            problem.diffusion_into(x, ws.g);
        } else {
            modified_coefficients(problem, x, c, spec, &dW, ws);
        }
        ws.gdW.noalias() = ws.g * dW;
        ws.y = x + ws.f * c.h + ws.gdW;
        x.swap(ws.y);
        return true;
    }

    // backward Euler: solve y = x + h f(y) + g(x) dW via Newton on
    // F(y) = y - h f(y) - b
    problem.diffusion_into(x, ws.g);
    ws.gdW.noalias() = ws.g * dW;
    ws.gdW += x;
    const Vector& b = ws.gdW;
    problem.drift_into(x, ws.f);
    // drift-tamed predictor: agrees with the Euler predictor as h|f| -> 0 but
    // keeps the initial guess within O(1) of b for stiff starts, where the
    // untamed predictor overshoots and costs extra Newton contraction steps
    const double hfn = c.h * ws.f.norm();
    ws.y = b + (c.h / (1.0 + hfn)) * ws.f;

    const int d = problem.dim_state;
    bool converged = false;
    for (int k = 1; k <= spec.newton_max_iter; ++k) {
        newton_iters = k;
        problem.drift_into(ws.y, ws.fy);
        ws.F = ws.y - c.h * ws.fy - b;
        drift_jacobian(problem, ws.y, ws.J);
        ws.J *= -c.h;
        ws.J.diagonal().array() += 1.0;
        if (d == 1) {
            ws.dy[0] = ws.F[0] / ws.J(0, 0);
        } else {
            ws.lu.compute(ws.J);
            ws.dy = ws.lu.solve(ws.F);
        }
        ws.y -= ws.dy;
        if (!ws.y.allFinite()) return false;
        if (ws.dy.norm() < spec.newton_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) return false;
    x.swap(ws.y);
    return true;
}

void require_in_unit_half(double v, const char* name) {
    if (!(v > 0.0 && v <= 0.5))
        throw std::invalid_argument(std::string(name) + " must be in (0, 1/2]");
}

}  // namespace

SchemeSpec make_scheme_spec(SchemeKind kind, double alpha1, double alpha2,
                            double vartheta, double newton_tol, int newton_max_iter) {
    if (kind == SchemeKind::FTE1) {
        require_in_unit_half(alpha1, "alpha1");
        require_in_unit_half(alpha2, "alpha2");
    }
    if (kind == SchemeKind::FTE2) require_in_unit_half(vartheta, "vartheta");
    if (newton_tol <= 0.0) throw std::invalid_argument("newton_tol must be positive");
    if (newton_max_iter < 1) throw std::invalid_argument("newton_max_iter must be >= 1");
    SchemeSpec s;
    s.kind = kind;
    s.alpha1 = alpha1;
    s.alpha2 = alpha2;
    s.vartheta = vartheta;
    s.newton_tol = newton_tol;
    s.newton_max_iter = newton_max_iter;
    return s;
}

const std::vector<std::string>& scheme_ids() {
    static const std::vector<std::string> ids = {"em",  "fte1", "fte2", "mes",
                                                 "dte", "bs",   "bts",  "bem"};
    return ids;
}

SchemeKind scheme_kind_from_id(const std::string& id) {
    if (id == "em") return SchemeKind::EM;
    if (id == "fte1") return SchemeKind::FTE1;
    if (id == "fte2") return SchemeKind::FTE2;
    if (id == "mes") return SchemeKind::MES;
    if (id == "dte") return SchemeKind::DTE;
    if (id == "bs") return SchemeKind::BS;
    if (id == "bts") return SchemeKind::BTS;
    if (id == "bem") return SchemeKind::BEM;
    throw std::invalid_argument("unknown scheme id: " + id);
}

std::string scheme_id(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::EM: return "em";
        case SchemeKind::FTE1: return "fte1";
        case SchemeKind::FTE2: return "fte2";
        case SchemeKind::MES: return "mes";
        case SchemeKind::DTE: return "dte";
        case SchemeKind::BS: return "bs";
        case SchemeKind::BTS: return "bts";
        case SchemeKind::BEM: return "bem";
    }
    throw std::logic_error("unreachable scheme kind");
}

Vector step_euler_maruyama(const SdeProblem& problem, const Vector& x, double h,
                           const Vector& dW) {
    SchemeSpec spec;
    spec.kind = SchemeKind::EM;
    StepWorkspace ws(problem.dim_state, problem.dim_noise);
    Vector y = x;
    int iters = 0;
    step_inplace(problem, spec, make_constants(h, spec), dW, y, ws, iters);
    return y;
}

namespace {
ModifiedCoefficients modified_pair(const SdeProblem& problem, const Vector& x, double h,
                                   SchemeSpec spec, SchemeKind kind, const Vector* dW) {
    spec.kind = kind;
    StepWorkspace ws(problem.dim_state, problem.dim_noise);
    modified_coefficients(problem, x, make_constants(h, spec), spec, dW, ws);
    return {std::move(ws.f), std::move(ws.g)};
}
}  // namespace

ModifiedCoefficients modify_fte1(const SdeProblem& problem, const Vector& x, double h,
                                 const SchemeSpec& spec) {
    return modified_pair(problem, x, h, spec, SchemeKind::FTE1, nullptr);
}

ModifiedCoefficients modify_fte2(const SdeProblem& problem, const Vector& x, double h,
                                 const SchemeSpec& spec) {
    return modified_pair(problem, x, h, spec, SchemeKind::FTE2, nullptr);
}

ModifiedCoefficients modify_mes(const SdeProblem& problem, const Vector& x, double h,
                                const SchemeSpec& spec) {
    return modified_pair(problem, x, h, spec, SchemeKind::MES, nullptr);
}

ModifiedCoefficients modify_dte(const SdeProblem& problem, const Vector& x, double h,
                                const SchemeSpec& spec) {
    return modified_pair(problem, x, h, spec, SchemeKind::DTE, nullptr);
}

ModifiedCoefficients modify_bs(const SdeProblem& problem, const Vector& x, double h,
                               const SchemeSpec& spec) {
    return modified_pair(problem, x, h, spec, SchemeKind::BS, nullptr);
}

ModifiedCoefficients modify_bts(const SdeProblem& problem, const Vector& x, double h,
                                const Vector& dW, const SchemeSpec& spec) {
    return modified_pair(problem, x, h, spec, SchemeKind::BTS, &dW);
}

Vector step_modified_euler(const SdeProblem& problem, const Vector& x, double h,
                           const Vector& dW, const SchemeSpec& spec) {
    switch (spec.kind) {
        case SchemeKind::FTE1:
        case SchemeKind::FTE2:
        case SchemeKind::MES:
        case SchemeKind::DTE:
        case SchemeKind::BS:
        case SchemeKind::BTS:
            break;
        default:
            throw std::invalid_argument(
                "step_modified_euler: scheme is not a modified-Euler variant");
    }
    StepWorkspace ws(problem.dim_state, problem.dim_noise);
    Vector y = x;
    int iters = 0;
    step_inplace(problem, spec, make_constants(h, spec), dW, y, ws, iters);
    return y;
}

NewtonResult step_backward_euler(const SdeProblem& problem, const Vector& x, double h,
                                 const Vector& dW, const SchemeSpec& spec) {
    SchemeSpec s = spec;
    s.kind = SchemeKind::BEM;
    StepWorkspace ws(problem.dim_state, problem.dim_noise);
    NewtonResult result;
    result.y = x;
    result.converged =
        step_inplace(problem, s, make_constants(h, s), dW, result.y, ws, result.iterations);
    return result;
}

bool state_exploded(const Vector& y) {
    return !y.allFinite() || y.norm() > kExplosionThreshold;
}

PathState simulate_trajectory(const SdeProblem& problem, const SchemeSpec& spec,
                              int n_steps, RngStream& stream) {
    if (n_steps < 1) throw std::invalid_argument("simulate_trajectory requires n_steps >= 1");
    const double h = problem.horizon / n_steps;
    const StepConstants c = make_constants(h, spec);
    StepWorkspace ws(problem.dim_state, problem.dim_noise);
    Vector dW(problem.dim_noise);

    PathState path;
    path.state = problem.initial_state;
    for (int n = 0; n < n_steps; ++n) {
        fill_increment(stream, c.sqrt_h, dW);
        int iters = 0;
        const bool ok = step_inplace(problem, spec, c, dW, path.state, ws, iters);
        path.max_newton_iterations = std::max(path.max_newton_iterations, iters);
        path.steps_taken = n + 1;
        if (!ok || state_exploded(path.state)) {
            path.exploded = true;
            break;
        }
    }
    return path;
}

}  // namespace sdeweak
