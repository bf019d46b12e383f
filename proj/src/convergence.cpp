#include "sdeweak/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace sdeweak {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// nlohmann serializes NaN/inf as null, which is exactly the "no reliable
// value" encoding the report wants; this helper just documents the intent
nlohmann::ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

FitResult fit_order(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw DegenerateFit("fit requires at least 3 points");
    std::vector<std::pair<double, double>> sorted = points;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!(sorted[i].first > 0.0)) throw DegenerateFit("step sizes must be positive");
        if (!(sorted[i].second > 0.0)) throw DegenerateFit("errors must be positive");
        if (i > 0 && sorted[i].first == sorted[i - 1].first)
            throw DegenerateFit("step sizes must be distinct");
    }

    const double n = static_cast<double>(sorted.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [h, err] : sorted) {
        mean_x += std::log2(h);
        mean_y += std::log2(err);
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [h, err] : sorted) {
        const double dx = std::log2(h) - mean_x;
        const double dy = std::log2(err) - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }

    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    if (syy <= 0.0) {
        fit.r_squared = 1.0;  // all errors identical: the flat fit is exact
    } else {
        double ss_res = 0.0;
        for (const auto& [h, err] : sorted) {
            const double resid = std::log2(err) - (fit.intercept + fit.slope * std::log2(h));
            ss_res += resid * resid;
        }
        fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return fit;
}

double theoretical_order(const SchemeSpec& spec) {
    switch (spec.kind) {
        case SchemeKind::EM:
            // no weak-order guarantee under superlinear growth
            return std::numeric_limits<double>::quiet_NaN();
        case SchemeKind::FTE1: return std::min(spec.alpha1, spec.alpha2);
        case SchemeKind::FTE2: return spec.vartheta;
        case SchemeKind::MES:
        case SchemeKind::DTE:
        case SchemeKind::BS:
        case SchemeKind::BEM: return 1.0;
        case SchemeKind::BTS: return 0.5;
    }
    throw std::logic_error("unreachable scheme kind");
}

ConvergenceReport build_report(const SchemeSpec& spec,
                               const std::vector<WeakErrorEstimate>& estimates,
                               const OrderTolerances& tolerances) {
    if (estimates.empty()) throw std::invalid_argument("build_report requires estimates");

    ConvergenceReport report;
    report.scheme_id = scheme_id(spec.kind);
    report.phi_label = estimates.front().phi_label;
    report.theoretical_order = theoretical_order(spec);
    report.gated = std::isfinite(report.theoretical_order);
    report.tolerance = report.theoretical_order >= 0.75 ? tolerances.order_one
                                                        : tolerances.order_half;

    std::vector<WeakErrorEstimate> sorted = estimates;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.step_size > b.step_size; });

    std::vector<std::pair<double, double>> fit_points;
    for (const WeakErrorEstimate& e : sorted) {
        ConvergencePoint pt;
        pt.h = e.step_size;
        pt.weak_error = e.weak_error;
        pt.ci95_halfwidth = e.ci95_halfwidth;
        pt.unreliable = e.n_exploded > 0;
        if (!pt.unreliable && std::isfinite(pt.weak_error) && pt.weak_error > 0.0) {
            // points where statistical noise reaches half the measured
            // signal cannot support an order fit
            pt.noise_excluded = pt.ci95_halfwidth > pt.weak_error / 2.0;
            pt.used_in_fit = !pt.noise_excluded;
            pt.factor10_flagged = pt.ci95_halfwidth > pt.weak_error / 10.0;
            if (pt.used_in_fit) fit_points.emplace_back(pt.h, pt.weak_error);
        }
        report.points.push_back(pt);
    }

    if (fit_points.size() < 3) {
        report.fit_valid = false;
        report.fit_message = "fewer than 3 usable points (" +
                             std::to_string(fit_points.size()) + " of " +
                             std::to_string(report.points.size()) + ")";
    } else {
        const FitResult fit = fit_order(fit_points);
        report.fit_valid = true;
        report.fitted_order = fit.slope;
        report.intercept = fit.intercept;
        report.r_squared = fit.r_squared;
    }

    if (!report.gated) {
        report.passed = true;  // vacuous: nothing to gate against
    } else {
        report.passed = report.fit_valid &&
                        std::abs(report.fitted_order - report.theoretical_order) <=
                            report.tolerance;
    }
    return report;
}

void write_csv(const std::vector<WeakErrorEstimate>& estimates, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "scheme,phi,h,M,mean_phi,std_error,ci95,weak_error,n_exploded\n";
    for (const WeakErrorEstimate& e : estimates) {
        out << e.scheme_id << ',' << e.phi_label << ',' << format_double(e.step_size) << ','
            << e.n_trajectories << ',' << format_double(e.mean_phi) << ','
            << format_double(e.std_error) << ',' << format_double(e.ci95_halfwidth) << ','
            << format_double(e.weak_error) << ',' << e.n_exploded << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_convergence_json(const std::vector<ConvergenceReport>& reports,
                            const std::string& path) {
    nlohmann::ordered_json doc;
    doc["note"] =
        "built-in test functions are applied to the first state coordinate of "
        "multi-dimensional models";
    doc["reports"] = nlohmann::ordered_json::array();
    for (const ConvergenceReport& r : reports) {
        nlohmann::ordered_json jr;
        jr["scheme"] = r.scheme_id;
        jr["phi"] = r.phi_label;
        jr["theoretical_order"] = json_number(r.theoretical_order);
        jr["fit_valid"] = r.fit_valid;
        if (r.fit_valid) {
            jr["fitted_order"] = json_number(r.fitted_order);
            jr["intercept"] = json_number(r.intercept);
            jr["r_squared"] = json_number(r.r_squared);
        } else {
            jr["fit_message"] = r.fit_message;
        }
        jr["gated"] = r.gated;
        jr["passed"] = r.passed;
        jr["tolerance"] = r.tolerance;
        jr["points"] = nlohmann::ordered_json::array();
        for (const ConvergencePoint& pt : r.points) {
            nlohmann::ordered_json jp;
            jp["h"] = pt.h;
            jp["weak_error"] = json_number(pt.weak_error);
            jp["ci95_halfwidth"] = json_number(pt.ci95_halfwidth);
            jp["unreliable"] = pt.unreliable;
            jp["used_in_fit"] = pt.used_in_fit;
            jp["noise_excluded"] = pt.noise_excluded;
            jp["factor10_flagged"] = pt.factor10_flagged;
            jr["points"].push_back(jp);
        }
        doc["reports"].push_back(jr);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void write_plotdata(const std::vector<ConvergenceReport>& reports,
                    const std::string& directory) {
    std::filesystem::create_directories(directory);
    for (const ConvergenceReport& r : reports) {
        const std::string path = directory + "/" + r.scheme_id + "_" + r.phi_label + ".dat";
        std::ofstream out(path);
        if (!out) throw IoError("cannot open " + path + " for writing");
        out << "# log2h log2err (" << r.scheme_id << ", phi=" << r.phi_label << ")\n";
        for (const ConvergencePoint& pt : r.points) {
            if (!std::isfinite(pt.weak_error) || pt.weak_error <= 0.0) continue;
            out << format_double(std::log2(pt.h)) << ' '
                << format_double(std::log2(pt.weak_error)) << '\n';
        }
        if (!out) throw IoError("write failed: " + path);
    }
}

}  // namespace sdeweak
