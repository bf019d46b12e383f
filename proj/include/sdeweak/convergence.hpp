#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdeweak/monte_carlo.hpp"
#include "sdeweak/schemes.hpp"

namespace sdeweak {

struct DegenerateFit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares on (log2 h, log2 error). Requires >= 3 points, all
// errors > 0, all h > 0 and distinct; throws DegenerateFit otherwise. The fit
// is invariant under reordering of the input points.
FitResult fit_order(const std::vector<std::pair<double, double>>& points);

// Theoretical weak order: FTE1 -> min(alpha1, alpha2); FTE2 -> vartheta;
// MES/DTE/BS/BEM -> 1; BTS -> 1/2; EM -> NaN (no guarantee under superlinear
// growth; excluded from pass/fail gating).
double theoretical_order(const SchemeSpec& spec);

struct ConvergencePoint {
    double h = 0.0;
    double weak_error = 0.0;       // NaN when the underlying run had explosions
    double ci95_halfwidth = 0.0;
    bool unreliable = false;       // explosions present; never fitted
    bool used_in_fit = false;
    bool noise_excluded = false;   // ci95 > weak_error / 2
    bool factor10_flagged = false; // ci95 > weak_error / 10
};

struct ConvergenceReport {
    std::string scheme_id;
    std::string phi_label;
    std::vector<ConvergencePoint> points;  // sorted by decreasing h
    bool fit_valid = false;
    std::string fit_message;  // reason when the fit is degenerate
    double fitted_order = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double theoretical_order = 0.0;  // NaN for EM
    bool gated = false;              // participates in pass/fail
    bool passed = false;
    double tolerance = 0.0;
};

struct OrderTolerances {
    double order_one = 0.25;   // |fitted - theoretical| bound, theoretical >= 0.75
    double order_half = 0.20;  // bound for lower-order schemes
};

// Builds the report for one (scheme, phi) series: excludes noise-dominated
// points (ci95 > weak_error/2) and unreliable points (explosions) from the
// fit, flags factor-10 violations of the statistical-error discipline, fits
// the remaining points, and gates against the theoretical order.
ConvergenceReport build_report(const SchemeSpec& spec,
                               const std::vector<WeakErrorEstimate>& estimates,
                               const OrderTolerances& tolerances = {});

// Serialization. write_csv emits the per-point table
//   scheme,phi,h,M,mean_phi,std_error,ci95,weak_error,n_exploded
// write_convergence_json one object per (scheme, phi) report, and
// write_plotdata one gnuplot-ready "<scheme>_<phi>.dat" (log2 h, log2 err)
// per report.
void write_csv(const std::vector<WeakErrorEstimate>& estimates, const std::string& path);
void write_convergence_json(const std::vector<ConvergenceReport>& reports,
                            const std::string& path);
void write_plotdata(const std::vector<ConvergenceReport>& reports,
                    const std::string& directory);

}  // namespace sdeweak
