#include "sdeweak/problem.hpp"

#include <cmath>

namespace sdeweak {

void drift_jacobian(const SdeProblem& problem, const Vector& x, Matrix& out) {
    const int d = problem.dim_state;
    out.resize(d, d);
    if (problem.drift_jacobian_into) {
        problem.drift_jacobian_into(x, out);
        return;
    }
    // forward differences, step 1e-7 * max(1, |x_i|) per coordinate
    Vector base(d), bumped(d), xp = x;
    problem.drift_into(x, base);
    for (int j = 0; j < d; ++j) {
        const double step = 1e-7 * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + step;
        problem.drift_into(xp, bumped);
        out.col(j) = (bumped - base) / step;
        xp[j] = x[j];
    }
}

SdeProblem make_quintic_model(double x0) {
    SdeProblem p;
    p.dim_state = 1;
    p.dim_noise = 1;
    p.drift_into = [](const Vector& x, Vector& out) {
        const double v = x[0];
        const double v2 = v * v;
        out[0] = 1.0 - v2 * v2 * v + v2 * v;
    };
    p.diffusion_into = [](const Vector& x, Matrix& out) {
        out(0, 0) = x[0] * x[0] / 10.0 + 2.0;
    };
    p.drift_jacobian_into = [](const Vector& x, Matrix& out) {
        const double v = x[0];
        const double v2 = v * v;
        out(0, 0) = -5.0 * v2 * v2 + 3.0 * v2;
    };
    p.growth_r = 2.0;
    p.growth_rho = 2.0;
    p.initial_state = Vector::Constant(1, x0);
    p.horizon = 1.0;
    return p;
}

SdeProblem make_fhn_model() {
    SdeProblem p;
    p.dim_state = 2;
    p.dim_noise = 2;
    p.drift_into = [](const Vector& x, Vector& out) {
        out[0] = x[0] - x[0] * x[0] * x[0] - x[1];
        out[1] = x[0] - x[1] + 1.0;
    };
    p.diffusion_into = [](const Vector& x, Matrix& out) {
        out.setZero();
        out(0, 0) = x[0] + 1.0;
        out(1, 1) = x[1] + 1.0;
    };
    p.drift_jacobian_into = [](const Vector& x, Matrix& out) {
        out(0, 0) = 1.0 - 3.0 * x[0] * x[0];
        out(0, 1) = -1.0;
        out(1, 0) = 1.0;
        out(1, 1) = -1.0;
    };
    p.growth_r = 1.0;
    p.growth_rho = 1.0;
    p.initial_state = Vector::Zero(2);
    p.horizon = 1.0;
    return p;
}

SdeProblem make_ou_model(double rate, double vol, double x0, double horizon) {
    if (rate <= 0.0) throw std::invalid_argument("ou model requires rate > 0");
    if (vol < 0.0) throw std::invalid_argument("ou model requires vol >= 0");
    SdeProblem p;
    p.dim_state = 1;
    p.dim_noise = 1;
    p.drift_into = [rate](const Vector& x, Vector& out) { out[0] = -rate * x[0]; };
    p.diffusion_into = [vol](const Vector&, Matrix& out) { out(0, 0) = vol; };
    p.drift_jacobian_into = [rate](const Vector&, Matrix& out) { out(0, 0) = -rate; };
    p.growth_r = 0.0;
    p.growth_rho = 0.0;
    p.initial_state = Vector::Constant(1, x0);
    p.horizon = horizon;
    p.has_exact_moments = true;
    p.exact_mean = x0 * std::exp(-rate * horizon);
    const double var = vol * vol * (1.0 - std::exp(-2.0 * rate * horizon)) / (2.0 * rate);
    p.exact_second_moment = var + p.exact_mean * p.exact_mean;
    return p;
}

const std::vector<std::string>& model_ids() {
    static const std::vector<std::string> ids = {"quintic", "fhn", "ou"};
    return ids;
}

SdeProblem make_model(const std::string& id, const ModelOptions& opts) {
    SdeProblem p;
    if (id == "quintic") {
        p = make_quintic_model();
    } else if (id == "fhn") {
        p = make_fhn_model();
    } else if (id == "ou") {
        const double x0 = (opts.x0 && !opts.x0->empty()) ? opts.x0->front() : 1.0;
        return make_ou_model(opts.rate, opts.vol, x0, opts.horizon);
    } else {
        throw std::invalid_argument("unknown model id: " + id);
    }
    if (opts.x0) {
        if (static_cast<int>(opts.x0->size()) != p.dim_state)
            throw std::invalid_argument("initial-state override has wrong dimension for " + id);
        for (int i = 0; i < p.dim_state; ++i) p.initial_state[i] = (*opts.x0)[i];
    }
    return p;
}

const std::vector<std::string>& test_function_ids() {
    static const std::vector<std::string> ids = {"identity", "square", "cos", "exp_neg_sq"};
    return ids;
}

TestFunction make_test_function(const std::string& id) {
    // All four act on the first state coordinate (the convention used for the
    // multi-dimensional model; recorded in the report header).
    if (id == "identity") return {"identity", [](const Vector& x) { return x[0]; }};
    if (id == "square") return {"square", [](const Vector& x) { return x[0] * x[0]; }};
    if (id == "cos") return {"cos", [](const Vector& x) { return std::cos(x[0]); }};
    if (id == "exp_neg_sq")
        return {"exp_neg_sq", [](const Vector& x) { return std::exp(-x[0] * x[0]); }};
    throw std::invalid_argument("unknown test function id: " + id);
}

}  // namespace sdeweak
