#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdeweak {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Autonomous Ito SDE  dX = f(X) dt + g(X) dW,  X(0) = x0,  on [0, T].
//
// The *_into callables are the evaluation interface used by the integrators
// (they write into caller-owned storage so hot loops stay allocation-free);
// drift()/diffusion() are convenience wrappers returning fresh objects.
struct SdeProblem {
    int dim_state = 1;   // d
    int dim_noise = 1;   // m

    std::function<void(const Vector&, Vector&)> drift_into;
    std::function<void(const Vector&, Matrix&)> diffusion_into;
    // optional analytic Jacobian of the drift (d x d); implicit steppers fall
    // back to forward differences when absent
    std::function<void(const Vector&, Matrix&)> drift_jacobian_into;

    double growth_r = 0.0;    // drift polynomial-growth exponent r
    double growth_rho = 0.0;  // diffusion growth exponent rho
    Vector initial_state;
    double horizon = 1.0;     // T

    // closed-form terminal moments, present only for the calibration model
    bool has_exact_moments = false;
    double exact_mean = 0.0;
    double exact_second_moment = 0.0;

    Vector drift(const Vector& x) const {
        Vector out(dim_state);
        drift_into(x, out);
        return out;
    }
    Matrix diffusion(const Vector& x) const {
        Matrix out(dim_state, dim_noise);
        diffusion_into(x, out);
        return out;
    }
    bool has_drift_jacobian() const { return static_cast<bool>(drift_jacobian_into); }
};

// Analytic Jacobian when available, otherwise forward differences with
// step 1e-7 * max(1, |x_i|) per coordinate.
void drift_jacobian(const SdeProblem& problem, const Vector& x, Matrix& out);

// Scalar functional of the terminal state defining the weak-error metric.
// The built-in functions act on the first state coordinate.
struct TestFunction {
    std::string label;
    std::function<double(const Vector&)> eval;
};

// dX = (1 - X^5 + X^3) dt + (X^2/10 + 2) dW, r = rho = 2, T = 1.
SdeProblem make_quintic_model(double x0 = 2.0);

// 2-d stochastic FitzHugh-Nagumo:
//   drift (X1 - X1^3 - X2, X1 - X2 + 1), diffusion diag(X1 + 1, X2 + 1),
//   x0 = (0,0), r = rho = 1, T = 1.
SdeProblem make_fhn_model();

// Ornstein-Uhlenbeck calibration model dX = -rate*X dt + vol dW with
// closed-form terminal moments:
//   E[X_T] = x0 exp(-rate T),  Var[X_T] = vol^2 (1 - exp(-2 rate T)) / (2 rate).
SdeProblem make_ou_model(double rate, double vol, double x0, double horizon);

// String-addressable catalog used by the CLI config.
struct ModelOptions {
    std::optional<std::vector<double>> x0;  // initial-state override
    double rate = 2.0;                      // ou only
    double vol = 1.0;                       // ou only
    double horizon = 1.0;                   // ou only
};
SdeProblem make_model(const std::string& id, const ModelOptions& opts = {});
const std::vector<std::string>& model_ids();

// Built-in test functions: identity, square, cos, exp_neg_sq.
TestFunction make_test_function(const std::string& id);
const std::vector<std::string>& test_function_ids();

}  // namespace sdeweak
