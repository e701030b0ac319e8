// Copyright 2026 The samplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "samplab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "samplab/errors.hpp"
#include "samplab/processes.hpp"

namespace samplab {

namespace {

using nlohmann::json;

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kBoundSlack = 1e-9; ///< slack on exact-arithmetic bounds
constexpr double kMcSigma = 4.0;     ///< MC-vs-exact consistency width
constexpr double kZSigma = 4.0;      ///< reverse-chain z-score threshold
constexpr double kZeroSigma = 3.0;   ///< "statistically zero" width
constexpr double kFdStep = 1e-4;     ///< finite-difference step for scores

std::string kind_key(ExperimentKind kind) {
    return experiment_kind_name(kind);
}

// ---------------------------------------------------------------------------
// config parsing

double require_positive(const json& j, const char* key) {
    if (!j.is_number()) {
        throw ConfigError(std::string("\"") + key + "\" must be a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v) || v <= 0.0) {
        throw ConfigError(std::string("\"") + key +
                          "\" must be finite and > 0");
    }
    return v;
}

std::int64_t require_nonneg_int(const json& j, const char* key) {
    if (!j.is_number_integer() ||
        (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        throw ConfigError(std::string("\"") + key +
                          "\" must be a nonnegative integer");
    }
    return j.get<std::int64_t>();
}

QuadratureConfig parse_quadrature(const json& j) {
    QuadratureConfig q;
    if (!j.is_object()) {
        throw ConfigError("\"quadrature\" must be an object");
    }
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        if (key == "gh_order") {
            q.gh_order = static_cast<int>(
                require_nonneg_int(item.value(), "gh_order"));
        } else if (key == "simpson_tol") {
            q.simpson_tol = require_positive(item.value(), "simpson_tol");
        } else if (key == "mc_samples") {
            q.mc_samples = static_cast<std::uint64_t>(
                require_nonneg_int(item.value(), "mc_samples"));
        } else if (key == "mc_seed") {
            q.mc_seed = static_cast<std::uint64_t>(
                require_nonneg_int(item.value(), "mc_seed"));
        } else {
            throw ConfigError("unknown quadrature key \"" + key + "\"");
        }
    }
    return q;
}

json quadrature_to_json(const QuadratureConfig& q) {
    return json{{"gh_order", q.gh_order},
                {"simpson_tol", q.simpson_tol},
                {"mc_samples", q.mc_samples},
                {"mc_seed", q.mc_seed}};
}

/// Keys each experiment kind understands, on top of the common set.
std::set<std::string> allowed_keys(ExperimentKind kind) {
    std::set<std::string> keys = {"experiment", "target",  "paths",
                                  "seed",       "workers", "out",
                                  "quadrature", "estimator"};
    switch (kind) {
    case ExperimentKind::kDivergence:
        keys.insert({"schedule", "save_trajectories"});
        break;
    case ExperimentKind::kRateStudy:
        keys.insert({"T", "n_grid", "order", "kernel"});
        break;
    case ExperimentKind::kScheduleSweep:
        keys.insert({"T", "n", "alpha_grid"});
        break;
    case ExperimentKind::kReverseCheck:
        keys.insert({"schedule"});
        break;
    case ExperimentKind::kTweedieCheck:
        keys.insert({"time", "y_min", "y_max", "y_points", "tolerance"});
        break;
    case ExperimentKind::kFigure1:
        keys.insert({"schedule", "curve_points"});
        break;
    }
    return keys;
}

std::vector<double> default_alpha_grid(double T, int n) {
    std::vector<double> grid = {0.8, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0};
    if (T * std::log(T) > 1.0) {
        grid.push_back(corollary_alpha(T, n));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) {
                               return std::abs(a - b) <= 1e-12;
                           }),
               grid.end());
    return grid;
}

// ---------------------------------------------------------------------------
// small numerics

struct SlopeFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    int points = 0;
};

/// Least-squares slope of log(est) against log(n).  With per-point standard
/// errors the fit is weighted by the delta-method variance of log(est) and
/// the slope error comes from the weights; without them it is ordinary
/// least squares with the error taken from the residuals.
SlopeFit fit_loglog(const std::vector<double>& n_values,
                    const std::vector<double>& estimates,
                    const std::vector<double>& std_errors, bool weighted) {
    const int m = static_cast<int>(n_values.size());
    SlopeFit fit;
    fit.points = m;
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = std::log(n_values[static_cast<std::size_t>(i)]);
        const double y = std::log(estimates[static_cast<std::size_t>(i)]);
        double w = 1.0;
        if (weighted) {
            const double sigma = std_errors[static_cast<std::size_t>(i)] /
                                 estimates[static_cast<std::size_t>(i)];
            w = 1.0 / (sigma * sigma);
        }
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    const double denom = sw * sxx - sx * sx;
    if (!(denom > 0.0)) {
        throw NumericalError("rate fit is degenerate (grid too small)");
    }
    fit.slope = (sw * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / sw;
    if (weighted) {
        fit.slope_se = std::sqrt(sw / denom);
    } else if (m > 2) {
        double rss = 0.0;
        for (int i = 0; i < m; ++i) {
            const double x = std::log(n_values[static_cast<std::size_t>(i)]);
            const double y =
                std::log(estimates[static_cast<std::size_t>(i)]);
            const double r = y - (fit.intercept + fit.slope * x);
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / (m - 2) * sw / denom);
    }
    return fit;
}

/// log density of the scalar observation a·X + sigma·N at y, from the
/// closed-form marginal of each target family.  Serves as the independent
/// oracle for the score map (which goes through the posterior mean instead).
double log_marginal_1d(const TargetModel& model, double y, double a,
                       double sigma) {
    const double noise_var = sigma * sigma;
    auto log_normal = [](double x, double mean, double var) {
        const double r = x - mean;
        return -0.5 * (r * r / var + std::log(var) + kLogTwoPi);
    };
    switch (model.kind()) {
    case TargetKind::kIsotropicGaussian: {
        const auto& g = std::get<IsotropicGaussian>(model.data());
        return log_normal(y, a * g.mean[0], a * a * g.variance + noise_var);
    }
    case TargetKind::kDiagonalGaussian: {
        const auto& g = std::get<DiagonalGaussian>(model.data());
        return log_normal(y, a * g.mean[0],
                          a * a * g.variances[0] + noise_var);
    }
    case TargetKind::kGaussianMixture: {
        const auto& g = std::get<GaussianMixture>(model.data());
        std::vector<double> terms;
        terms.reserve(g.means.size());
        for (std::size_t j = 0; j < g.means.size(); ++j) {
            terms.push_back(
                std::log(g.weights[static_cast<int>(j)]) +
                log_normal(y, a * g.means[j][0],
                           a * a * g.variances[j] + noise_var));
        }
        return log_sum_exp(terms.data(), static_cast<int>(terms.size()));
    }
    case TargetKind::kAtomMixture: {
        const auto& g = std::get<AtomMixture>(model.data());
        std::vector<double> terms;
        terms.reserve(g.atoms.size());
        for (std::size_t j = 0; j < g.atoms.size(); ++j) {
            terms.push_back(std::log(g.weights[static_cast<int>(j)]) +
                            log_normal(y, a * g.atoms[j][0], noise_var));
        }
        return log_sum_exp(terms.data(), static_cast<int>(terms.size()));
    }
    }
    throw ConfigError("log_marginal_1d: unknown target kind");
}

// ---------------------------------------------------------------------------
// output assembly

/// Everything a runner produces; run_experiment persists it.
struct RunPieces {
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<CheckResult> checks;
    json results = json::object();
    json tolerances = json::object();
    std::vector<std::string> lines;
};

void add_check(RunPieces& pieces, const std::string& name, bool pass,
               std::string detail) {
    pieces.checks.push_back({name, pass, std::move(detail)});
}

std::string join_csv(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            row += ',';
        }
        row += fields[i];
    }
    row += '\n';
    return row;
}

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Minimal self-contained plot of the staircase-vs-curve picture: the
/// decreasing curve, its left-endpoint step function, and the shaded area
/// between them.
std::string figure_svg(const AreaDecomposition& area, double horizon,
                       const std::string& model_label) {
    const double width = 640.0, height = 420.0;
    const double left = 60.0, right = 620.0, top = 50.0, bottom = 370.0;
    double y_max = 0.0;
    for (const auto& p : area.staircase) {
        y_max = std::max(y_max, p.second);
    }
    for (const auto& p : area.curve) {
        y_max = std::max(y_max, p.second);
    }
    if (!(y_max > 0.0)) {
        y_max = 1.0;
    }
    y_max *= 1.05;
    auto px = [&](double s) {
        return left + s / horizon * (right - left);
    };
    auto py = [&](double v) {
        return bottom - v / y_max * (bottom - top);
    };
    auto polyline_points = [&](const std::vector<std::pair<double, double>>&
                                   pts) {
        std::string out;
        for (const auto& p : pts) {
            out += svg_num(px(p.first)) + "," + svg_num(py(p.second)) + " ";
        }
        return out;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
        << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"26\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">"
        << "left-endpoint staircase vs decay curve (" << model_label
        << ")</text>\n";

    // shaded gap: staircase left-to-right, then the curve traced back
    std::string gap_points = polyline_points(area.staircase);
    for (auto it = area.curve.rbegin(); it != area.curve.rend(); ++it) {
        gap_points +=
            svg_num(px(it->first)) + "," + svg_num(py(it->second)) + " ";
    }
    svg << "<polygon points=\"" << gap_points
        << "\" fill=\"#f3c0ba\" stroke=\"none\"/>\n";
    svg << "<polyline points=\"" << polyline_points(area.staircase)
        << "\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1.5\"/>\n";
    svg << "<polyline points=\"" << polyline_points(area.curve)
        << "\" fill=\"none\" stroke=\"#1f6fb4\" stroke-width=\"2\"/>\n";

    // axes with a few labeled ticks
    svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\""
        << right << "\" y2=\"" << bottom
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
        << "\" y2=\"" << bottom
        << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    char label[48];
    for (int i = 0; i <= 5; ++i) {
        const double s = horizon * i / 5.0;
        const double x = px(s);
        svg << "<line x1=\"" << svg_num(x) << "\" y1=\"" << bottom
            << "\" x2=\"" << svg_num(x) << "\" y2=\"" << bottom + 5
            << "\" stroke=\"#000000\"/>\n";
        std::snprintf(label, sizeof label, "%.3g", s);
        svg << "<text x=\"" << svg_num(x) << "\" y=\"" << bottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            << "font-size=\"11\">" << label << "</text>\n";
        const double v = y_max * i / 5.0;
        const double y = py(v);
        svg << "<line x1=\"" << left - 5 << "\" y1=\"" << svg_num(y)
            << "\" x2=\"" << left << "\" y2=\"" << svg_num(y)
            << "\" stroke=\"#000000\"/>\n";
        std::snprintf(label, sizeof label, "%.3g", v);
        svg << "<text x=\"" << left - 8 << "\" y=\"" << svg_num(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            << "font-size=\"11\">" << label << "</text>\n";
    }
    svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\">t</text>\n";

    // legend with the three area values
    const double lx = right - 250.0;
    double ly = top + 12.0;
    auto legend = [&](const char* color, const std::string& text) {
        svg << "<rect x=\"" << lx << "\" y=\"" << ly - 9
            << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        svg << "<text x=\"" << lx + 18 << "\" y=\"" << ly + 2
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << text
            << "</text>\n";
        ly += 18.0;
    };
    std::snprintf(label, sizeof label, "%.6g", area.riemann_area);
    legend("#555555", std::string("staircase area = ") + label);
    std::snprintf(label, sizeof label, "%.6g", area.info_area);
    legend("#1f6fb4", std::string("area under curve = ") + label);
    std::snprintf(label, sizeof label, "%.6g", area.gap_area);
    legend("#f3c0ba", std::string("gap area = ") + label);
    svg << "</svg>\n";
    return svg.str();
}

// ---------------------------------------------------------------------------
// runners

RunPieces run_divergence(const RunConfig& cfg) {
    RunPieces pieces;
    const Schedule& sched = *cfg.schedule;
    DivergenceReport report =
        exact_divergence(cfg.target, sched, cfg.estimator, cfg.quad);
    if (cfg.paths > 0) {
        SimulateOptions opts;
        opts.workers = cfg.workers;
        report.attach_mc(pathwise_kl_estimate(cfg.target, sched,
                                              cfg.estimator, cfg.paths,
                                              cfg.seed, opts));
    }

    std::string csv = report_csv_header() + "\n";
    csv += report_csv_row(cfg.target.label(), sched, cfg.estimator.label(),
                          report) +
           "\n";
    pieces.files.emplace_back("results.csv", csv);

    if (cfg.save_trajectories > 0) {
        SimulateOptions opts;
        opts.workers = cfg.workers;
        TrajectorySet set = simulate_comparison(
            cfg.target, sched, cfg.save_trajectories, cfg.seed, opts);
        std::ostringstream out;
        write_trajectories_csv(set, out);
        pieces.files.emplace_back("trajectories.csv", out.str());
    }

    add_check(pieces, "delta_nonnegative",
              report.delta_exact >= -kBoundSlack,
              "delta_exact = " + format_double(report.delta_exact));
    add_check(pieces, "within_step_size_bound",
              report.delta_exact <= report.step_size_bound + kBoundSlack,
              format_double(report.delta_exact) +
                  " <= " + format_double(report.step_size_bound));
    if (report.geometric_bound) {
        add_check(pieces, "within_ratio_bound",
                  report.delta_exact <= *report.geometric_bound + kBoundSlack,
                  format_double(report.delta_exact) +
                      " <= " + format_double(*report.geometric_bound));
    }
    if (report.mc) {
        const double gap =
            std::abs(report.mc->estimate - report.delta_exact);
        const double width = kMcSigma * report.mc->std_error + 1e-12;
        add_check(pieces, "mc_within_4_sigma", gap <= width,
                  "|mc - delta| = " + format_double(gap) +
                      ", allowed = " + format_double(width));
    }

    pieces.results = {
        {"delta_exact", report.delta_exact},
        {"mmse_riemann_term", report.mmse_riemann_term},
        {"mutual_info_term", report.mutual_info_term},
        {"estimator_error_term", report.estimator_error_term},
        {"step_size_bound", report.step_size_bound},
        {"ratio_bound", report.geometric_bound
                            ? json(*report.geometric_bound)
                            : json(nullptr)},
        {"tv_bound", report.tv_bound},
        {"mc", report.mc ? json{{"estimate", report.mc->estimate},
                                {"std_error", report.mc->std_error},
                                {"paths_used", report.mc->paths_used}}
                         : json(nullptr)},
    };
    pieces.tolerances = {{"bound_slack", kBoundSlack},
                         {"mc_sigma", kMcSigma},
                         {"quadrature", quadrature_to_json(cfg.quad)}};

    pieces.lines.push_back(
        "model=" + cfg.target.label() +
        " schedule=" + schedule_family_name(sched.family) +
        " T=" + format_double(sched.horizon) + " n=" + std::to_string(sched.n) +
        " estimator=" + cfg.estimator.label());
    pieces.lines.push_back(
        "delta_exact=" + format_double(report.delta_exact) +
        " step_size_bound=" + format_double(report.step_size_bound) +
        (report.geometric_bound
             ? " ratio_bound=" + format_double(*report.geometric_bound)
             : std::string()));
    if (report.mc) {
        pieces.lines.push_back(
            "mc_estimate=" + format_double(report.mc->estimate) + " (se=" +
            format_double(report.mc->std_error) +
            ", paths=" + std::to_string(report.mc->paths_used) + ")");
    }
    return pieces;
}

RunPieces run_rate_study(const RunConfig& cfg) {
    RunPieces pieces;
    std::vector<double> n_fit, est_fit, se_fit;
    std::vector<int> zero_n;
    std::string csv = "n,estimate,std_error\n";

    double largest_fit_n = 0.0, largest_fit_est = 0.0, largest_fit_se = 0.0;
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        const int n = cfg.n_grid[i];
        const Schedule sched = uniform_schedule(cfg.horizon, n);
        double est = 0.0, se = 0.0;
        if (cfg.order == 1) {
            est = exact_divergence(cfg.target, sched, cfg.estimator, cfg.quad)
                      .delta_exact;
        } else {
            SimulateOptions opts;
            opts.workers = cfg.workers;
            const PathwiseKl kl = pathwise_kl_estimate(
                cfg.target, sched, *cfg.kernel, cfg.paths,
                cfg.seed + static_cast<std::uint64_t>(i), opts);
            est = kl.estimate;
            se = kl.std_error;
        }
        csv += join_csv({std::to_string(n), format_double(est),
                         format_double(se)});
        // an absolute floor keeps pure rounding residue (an exact kernel
        // still leaves ~1e-16 per path) out of the log-log fit
        const bool resolved =
            cfg.order == 1 ? est > 1e-14
                           : std::abs(est) > kZeroSigma * se &&
                                 std::abs(est) > 1e-12;
        if (resolved && est > 0.0) {
            n_fit.push_back(static_cast<double>(n));
            est_fit.push_back(est);
            se_fit.push_back(se);
            if (n > largest_fit_n) {
                largest_fit_n = n;
                largest_fit_est = est;
                largest_fit_se = se;
            }
        } else {
            zero_n.push_back(n);
        }
    }
    pieces.files.emplace_back("results.csv", csv);

    pieces.tolerances = {{"relative_std_error_max", 0.1},
                         {"zero_sigma", kZeroSigma},
                         {"quadrature", quadrature_to_json(cfg.quad)}};
    pieces.results["statistically_zero"] = zero_n;

    if (n_fit.empty()) {
        pieces.results["fit"] = nullptr;
        pieces.lines.push_back(
            "estimate consistent with zero at every n; no rate to fit");
        return pieces;
    }
    if (n_fit.size() < 3) {
        throw NumericalError(
            "only " + std::to_string(n_fit.size()) +
            " grid points resolve above the noise; increase paths for a "
            "stable rate fit");
    }
    if (cfg.order == 2 && largest_fit_se > 0.1 * largest_fit_est) {
        throw NumericalError(
            "standard error is " +
            format_double(largest_fit_se / largest_fit_est) +
            " of the estimate at n = " +
            std::to_string(static_cast<int>(largest_fit_n)) +
            " (needs < 0.1); increase paths");
    }
    const SlopeFit fit =
        fit_loglog(n_fit, est_fit, se_fit, /*weighted=*/cfg.order == 2);
    pieces.results["fit"] = {
        {"slope", fit.slope},
        {"slope_std_error", fit.slope_se},
        {"intercept", fit.intercept},
        {"points_used", fit.points},
        {"ci95", {fit.slope - 1.96 * fit.slope_se,
                  fit.slope + 1.96 * fit.slope_se}},
    };
    std::ostringstream line;
    line << "slope=" << format_double(fit.slope) << " (se "
         << format_double(fit.slope_se) << ", " << fit.points << " points)";
    pieces.lines.push_back(line.str());
    return pieces;
}

RunPieces run_schedule_sweep(const RunConfig& cfg) {
    RunPieces pieces;
    std::string csv = "alpha,delta_exact,thm2_bound\n";
    std::vector<double> skipped;
    bool have_min = false;
    double min_delta = 0.0, min_bound = 0.0;
    double argmin_delta = 0.0, argmin_bound = 0.0;
    std::vector<std::string> violations;

    for (const double alpha : cfg.alpha_grid) {
        Schedule sched;
        try {
            sched = std::abs(alpha - 1.0) <= 1e-9
                        ? uniform_schedule(cfg.horizon, cfg.sweep_n)
                        : geometric_schedule(cfg.horizon, cfg.sweep_n, alpha);
        } catch (const NumericalError&) {
            // e.g. a decaying ratio whose late times collapse in double
            // precision — recorded, not fatal to the sweep
            skipped.push_back(alpha);
            continue;
        }
        const DivergenceReport report = exact_divergence(
            cfg.target, sched, EstimatorSpec::exact(), cfg.quad);
        const double bound = *report.geometric_bound;
        csv += join_csv({format_double(alpha),
                         format_double(report.delta_exact),
                         format_double(bound)});
        if (!have_min || report.delta_exact < min_delta) {
            min_delta = report.delta_exact;
            argmin_delta = alpha;
        }
        if (!have_min || bound < min_bound) {
            min_bound = bound;
            argmin_bound = alpha;
        }
        have_min = true;
        if (report.delta_exact > bound + kBoundSlack) {
            violations.push_back("alpha=" + format_double(alpha));
        }
    }
    if (!have_min) {
        throw NumericalError(
            "every ratio in the grid failed schedule construction");
    }
    pieces.files.emplace_back("results.csv", csv);

    std::string detail = violations.empty()
                             ? "all rows satisfy delta_exact <= thm2_bound"
                             : "violated at " + violations.front();
    for (std::size_t i = 1; i < violations.size(); ++i) {
        detail += ", " + violations[i];
    }
    add_check(pieces, "rows_within_ratio_bound", violations.empty(), detail);

    pieces.results = {{"argmin_delta_exact", argmin_delta},
                      {"argmin_thm2_bound", argmin_bound},
                      {"skipped_alphas", skipped}};
    pieces.tolerances = {{"bound_slack", kBoundSlack},
                         {"quadrature", quadrature_to_json(cfg.quad)}};
    pieces.lines.push_back(
        "model=" + cfg.target.label() + " T=" + format_double(cfg.horizon) +
        " n=" + std::to_string(cfg.sweep_n) + " (" +
        std::to_string(cfg.alpha_grid.size() - skipped.size()) + " ratios" +
        (skipped.empty()
             ? std::string()
             : ", " + std::to_string(skipped.size()) + " skipped") +
        ")");
    pieces.lines.push_back("argmin delta_exact at alpha=" +
                           format_double(argmin_delta) +
                           ", argmin thm2_bound at alpha=" +
                           format_double(argmin_bound));
    return pieces;
}

RunPieces run_reverse_check(const RunConfig& cfg) {
    RunPieces pieces;
    SimulateOptions opts;
    opts.workers = cfg.workers;
    const ReverseDiagnostics diag = reverse_diagnostics(
        cfg.target, *cfg.schedule, cfg.paths, cfg.seed, opts);
    const Schedule& sched = diag.schedule;
    const int n = sched.n;

    std::string csv = "quantity,k,m,value,std_error,expected,z\n";
    double max_null_z = 0.0, max_var_z = 0.0;
    std::string worst_null = "none", worst_var = "none";
    for (int k = 1; k < n; ++k) {
        for (int m = 1; m <= n; ++m) {
            const double value = diag.cross_cov(k - 1, m - 1);
            const double se = diag.cross_se(k - 1, m - 1);
            // cov(B_k, W_m) vanishes for m > k and has the closed form
            // t_m (sqrt(t_{k+1}/t_k) - sqrt(t_k/t_{k+1})) otherwise
            const double tk = sched.times[static_cast<std::size_t>(k)];
            const double tk1 = sched.times[static_cast<std::size_t>(k + 1)];
            const double expected =
                m > k ? 0.0
                      : sched.times[static_cast<std::size_t>(m)] *
                            (std::sqrt(tk1 / tk) - std::sqrt(tk / tk1));
            const double z = se > 0.0 ? (value - expected) / se
                                      : (value == expected ? 0.0 : INFINITY);
            csv += join_csv({"cross_cov", std::to_string(k),
                             std::to_string(m), format_double(value),
                             format_double(se), format_double(expected),
                             format_double(z)});
            if (m > k && std::abs(z) > max_null_z) {
                max_null_z = std::abs(z);
                worst_null = "k=" + std::to_string(k) +
                             " m=" + std::to_string(m);
            }
        }
    }
    for (int k = 1; k < n; ++k) {
        const double value = diag.b_var[static_cast<std::size_t>(k - 1)];
        const double se = diag.b_var_se[static_cast<std::size_t>(k - 1)];
        const double expected =
            sched.increments[static_cast<std::size_t>(k)]; // delta_{k+1}
        const double z = se > 0.0 ? (value - expected) / se
                                  : (value == expected ? 0.0 : INFINITY);
        csv += join_csv({"innovation_var", std::to_string(k), "",
                         format_double(value), format_double(se),
                         format_double(expected), format_double(z)});
        if (std::abs(z) > max_var_z) {
            max_var_z = std::abs(z);
            worst_var = "k=" + std::to_string(k);
        }
    }
    pieces.files.emplace_back("results.csv", csv);

    add_check(pieces, "null_cross_covariances", max_null_z < kZSigma,
              "max |z| = " + format_double(max_null_z) + " at " + worst_null);
    add_check(pieces, "innovation_variances", max_var_z < kZSigma,
              "max |z| = " + format_double(max_var_z) + " at " + worst_var);
    pieces.results = {{"max_null_z", max_null_z},
                      {"max_innovation_var_z", max_var_z}};
    pieces.tolerances = {{"z_max", kZSigma}};
    pieces.lines.push_back(
        "model=" + cfg.target.label() + " n=" + std::to_string(n) +
        " paths=" + std::to_string(cfg.paths) +
        " max_null_z=" + format_double(max_null_z) +
        " max_var_z=" + format_double(max_var_z));
    return pieces;
}

RunPieces run_tweedie_check(const RunConfig& cfg) {
    RunPieces pieces;
    if (cfg.target.dim() != 1) {
        throw ConfigError(
            "tweedie_check compares against a scalar density grid and "
            "requires a one-dimensional target");
    }
    const double t = cfg.time;
    const double a = t, sigma = std::sqrt(t);

    std::string csv = "y,score,fd_score,abs_dev\n";
    double max_dev = 0.0, argmax_y = cfg.y_min;
    Vec y_vec(1);
    for (int i = 0; i < cfg.y_points; ++i) {
        const double y =
            cfg.y_min + (cfg.y_max - cfg.y_min) * i / (cfg.y_points - 1);
        y_vec[0] = y;
        const double score = tweedie_score(cfg.target, y_vec, a, sigma)[0];
        const double fd =
            (log_marginal_1d(cfg.target, y + kFdStep, a, sigma) -
             log_marginal_1d(cfg.target, y - kFdStep, a, sigma)) /
            (2.0 * kFdStep);
        const double dev = std::abs(score - fd);
        csv += join_csv({format_double(y), format_double(score),
                         format_double(fd), format_double(dev)});
        if (dev > max_dev) {
            max_dev = dev;
            argmax_y = y;
        }
    }
    pieces.files.emplace_back("results.csv", csv);

    add_check(pieces, "score_matches_density_gradient",
              max_dev < cfg.tolerance,
              "max |dev| = " + format_double(max_dev) +
                  " at y = " + format_double(argmax_y));
    pieces.results = {{"max_abs_deviation", max_dev},
                      {"argmax_y", argmax_y}};
    pieces.tolerances = {{"max_abs_deviation", cfg.tolerance},
                         {"fd_step", kFdStep}};
    pieces.lines.push_back("model=" + cfg.target.label() +
                           " t=" + format_double(t) +
                           " max_abs_dev=" + format_double(max_dev));
    return pieces;
}

RunPieces run_figure1(const RunConfig& cfg) {
    RunPieces pieces;
    const Schedule& sched = *cfg.schedule;
    const AreaDecomposition area =
        area_decomposition(cfg.target, sched, cfg.quad, cfg.curve_points);
    const DivergenceReport report =
        exact_divergence(cfg.target, sched, EstimatorSpec::exact(), cfg.quad);

    std::string csv = "riemann_area,info_area,gap_area,delta_exact,tv_bound\n";
    csv += join_csv({format_double(area.riemann_area),
                     format_double(area.info_area),
                     format_double(area.gap_area),
                     format_double(report.delta_exact),
                     format_double(report.tv_bound)});
    pieces.files.emplace_back("results.csv", csv);

    std::string curve_csv = "series,s,value\n";
    for (const auto& p : area.curve) {
        curve_csv += join_csv({"curve", format_double(p.first),
                               format_double(p.second)});
    }
    for (const auto& p : area.staircase) {
        curve_csv += join_csv({"staircase", format_double(p.first),
                               format_double(p.second)});
    }
    pieces.files.emplace_back("curve.csv", curve_csv);
    pieces.files.emplace_back(
        "figure1.svg",
        figure_svg(area, sched.horizon, cfg.target.label()));

    add_check(pieces, "gap_nonnegative", area.gap_area >= -kBoundSlack,
              "gap_area = " + format_double(area.gap_area));
    const double identity_gap =
        std::abs(area.gap_area - 2.0 * report.delta_exact);
    add_check(pieces, "gap_equals_twice_delta",
              identity_gap <= kBoundSlack * std::max(1.0, area.gap_area),
              "|gap - 2 delta| = " + format_double(identity_gap));
    pieces.results = {{"riemann_area", area.riemann_area},
                      {"info_area", area.info_area},
                      {"gap_area", area.gap_area},
                      {"delta_exact", report.delta_exact}};
    pieces.tolerances = {{"area_identity_slack", kBoundSlack},
                         {"quadrature", quadrature_to_json(cfg.quad)}};
    pieces.lines.push_back(
        "model=" + cfg.target.label() +
        " riemann_area=" + format_double(area.riemann_area) +
        " info_area=" + format_double(area.info_area) +
        " gap_area=" + format_double(area.gap_area));
    return pieces;
}

void write_file(const std::filesystem::path& dir, const std::string& name,
                const std::string& content) {
    const std::filesystem::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open " + path.string() + " for writing");
    }
    out << content;
    if (!out) {
        throw ConfigError("failed writing " + path.string());
    }
}

} // namespace

// ---------------------------------------------------------------------------
// public surface

const char* tool_version() { return "0.1.0"; }

ExperimentKind experiment_kind_from_name(const std::string& name) {
    std::string canon = name;
    std::replace(canon.begin(), canon.end(), '-', '_');
    if (canon == "divergence") {
        return ExperimentKind::kDivergence;
    }
    if (canon == "rate_study") {
        return ExperimentKind::kRateStudy;
    }
    if (canon == "schedule_sweep") {
        return ExperimentKind::kScheduleSweep;
    }
    if (canon == "reverse_check") {
        return ExperimentKind::kReverseCheck;
    }
    if (canon == "tweedie_check") {
        return ExperimentKind::kTweedieCheck;
    }
    if (canon == "figure1") {
        return ExperimentKind::kFigure1;
    }
    throw ConfigError("unknown experiment \"" + name + "\"");
}

std::string experiment_kind_name(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::kDivergence:
        return "divergence";
    case ExperimentKind::kRateStudy:
        return "rate_study";
    case ExperimentKind::kScheduleSweep:
        return "schedule_sweep";
    case ExperimentKind::kReverseCheck:
        return "reverse_check";
    case ExperimentKind::kTweedieCheck:
        return "tweedie_check";
    case ExperimentKind::kFigure1:
        return "figure1";
    }
    throw ConfigError("experiment_kind_name: unknown kind");
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string config_digest(const nlohmann::json& canonical) {
    const std::string text = canonical.dump();
    std::uint64_t hash = 1469598103934665603ull; // FNV-1a offset basis
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull; // FNV prime
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(hash));
    return buf;
}

RunConfig parse_run_config(const nlohmann::json& config) {
    if (!config.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    if (!config.contains("experiment") ||
        !config["experiment"].is_string()) {
        throw ConfigError("config requires an \"experiment\" string");
    }
    RunConfig cfg;
    cfg.kind = experiment_kind_from_name(
        config["experiment"].get<std::string>());

    const std::set<std::string> allowed = allowed_keys(cfg.kind);
    for (const auto& item : config.items()) {
        if (allowed.find(item.key()) == allowed.end()) {
            throw ConfigError("key \"" + item.key() +
                              "\" is not understood by the " +
                              kind_key(cfg.kind) + " experiment");
        }
    }

    if (!config.contains("target")) {
        throw ConfigError("config requires a \"target\" object");
    }
    cfg.target = TargetModel::from_json(config["target"]);
    if (config.contains("quadrature")) {
        cfg.quad = parse_quadrature(config["quadrature"]);
    }
    if (config.contains("estimator")) {
        cfg.estimator =
            EstimatorSpec::from_json(config["estimator"], cfg.target.dim());
    }
    if (config.contains("paths")) {
        cfg.paths = require_nonneg_int(config["paths"], "paths");
    }
    if (config.contains("seed")) {
        cfg.seed = static_cast<std::uint64_t>(
            require_nonneg_int(config["seed"], "seed"));
    }
    if (config.contains("workers")) {
        const std::int64_t w = require_nonneg_int(config["workers"],
                                                  "workers");
        if (w < 1 || w > 1024) {
            throw ConfigError("\"workers\" must be between 1 and 1024");
        }
        cfg.workers = static_cast<int>(w);
    }
    cfg.out_dir = "runs/" + kind_key(cfg.kind);
    if (config.contains("out")) {
        if (!config["out"].is_string() ||
            config["out"].get<std::string>().empty()) {
            throw ConfigError("\"out\" must be a nonempty string");
        }
        cfg.out_dir = config["out"].get<std::string>();
    }

    const bool needs_schedule = cfg.kind == ExperimentKind::kDivergence ||
                                cfg.kind == ExperimentKind::kReverseCheck ||
                                cfg.kind == ExperimentKind::kFigure1;
    if (needs_schedule) {
        if (!config.contains("schedule")) {
            throw ConfigError("the " + kind_key(cfg.kind) +
                              " experiment requires a \"schedule\"");
        }
        cfg.schedule = schedule_from_json(config["schedule"]);
    }

    switch (cfg.kind) {
    case ExperimentKind::kDivergence:
        if (config.contains("save_trajectories")) {
            cfg.save_trajectories =
                require_nonneg_int(config["save_trajectories"],
                                   "save_trajectories");
        }
        break;
    case ExperimentKind::kRateStudy: {
        if (config.contains("T")) {
            cfg.horizon = require_positive(config["T"], "T");
        }
        if (config.contains("order")) {
            const std::int64_t order =
                require_nonneg_int(config["order"], "order");
            if (order != 1 && order != 2) {
                throw ConfigError("\"order\" must be 1 or 2");
            }
            cfg.order = static_cast<int>(order);
        }
        if (config.contains("n_grid")) {
            const auto& grid = config["n_grid"];
            if (!grid.is_array() || grid.empty()) {
                throw ConfigError("\"n_grid\" must be a nonempty array");
            }
            cfg.n_grid.clear();
            for (const auto& item : grid) {
                const std::int64_t n = require_nonneg_int(item, "n_grid");
                if (n < 1) {
                    throw ConfigError("\"n_grid\" entries must be >= 1");
                }
                if (!cfg.n_grid.empty() && n <= cfg.n_grid.back()) {
                    throw ConfigError(
                        "\"n_grid\" must be strictly increasing");
                }
                cfg.n_grid.push_back(static_cast<int>(n));
            }
        }
        if (config.contains("kernel")) {
            if (cfg.order != 2) {
                throw ConfigError(
                    "\"kernel\" is only used by rate_study with order 2");
            }
            cfg.kernel = KernelSpec::from_json(config["kernel"]);
        }
        if (cfg.order == 2) {
            if (!cfg.kernel) {
                throw ConfigError(
                    "rate_study with order 2 requires a \"kernel\"");
            }
            if (cfg.paths < 2) {
                throw ConfigError(
                    "rate_study with order 2 needs at least 2 paths");
            }
        }
        break;
    }
    case ExperimentKind::kScheduleSweep: {
        if (cfg.estimator.variant != EstimatorVariant::kExactPosteriorMean) {
            throw ConfigError(
                "schedule_sweep evaluates the ratio bound, which holds for "
                "the exact drift; remove the \"estimator\" override");
        }
        if (config.contains("T")) {
            cfg.horizon = require_positive(config["T"], "T");
        }
        if (config.contains("n")) {
            const std::int64_t n = require_nonneg_int(config["n"], "n");
            if (n < 1) {
                throw ConfigError("\"n\" must be >= 1");
            }
            cfg.sweep_n = static_cast<int>(n);
        }
        if (config.contains("alpha_grid")) {
            const auto& grid = config["alpha_grid"];
            if (!grid.is_array() || grid.empty()) {
                throw ConfigError("\"alpha_grid\" must be a nonempty array");
            }
            for (const auto& item : grid) {
                if (!item.is_number()) {
                    throw ConfigError("\"alpha_grid\" entries must be "
                                      "numbers");
                }
                const double alpha = item.get<double>();
                if (!std::isfinite(alpha) || alpha <= 0.0) {
                    throw ConfigError(
                        "\"alpha_grid\" entries must be finite and > 0");
                }
                cfg.alpha_grid.push_back(alpha);
            }
        } else {
            cfg.alpha_grid = default_alpha_grid(cfg.horizon, cfg.sweep_n);
        }
        break;
    }
    case ExperimentKind::kReverseCheck:
        if (cfg.schedule->n < 2) {
            throw ConfigError(
                "reverse_check needs a schedule with at least 2 steps");
        }
        if (cfg.paths < 2) {
            throw ConfigError("reverse_check needs at least 2 paths");
        }
        break;
    case ExperimentKind::kTweedieCheck: {
        if (config.contains("time")) {
            cfg.time = require_positive(config["time"], "time");
        }
        if (config.contains("y_min")) {
            if (!config["y_min"].is_number()) {
                throw ConfigError("\"y_min\" must be a number");
            }
            cfg.y_min = config["y_min"].get<double>();
        }
        if (config.contains("y_max")) {
            if (!config["y_max"].is_number()) {
                throw ConfigError("\"y_max\" must be a number");
            }
            cfg.y_max = config["y_max"].get<double>();
        }
        if (!std::isfinite(cfg.y_min) || !std::isfinite(cfg.y_max) ||
            cfg.y_max <= cfg.y_min) {
            throw ConfigError("tweedie_check needs y_min < y_max, finite");
        }
        if (config.contains("y_points")) {
            const std::int64_t p =
                require_nonneg_int(config["y_points"], "y_points");
            if (p < 2) {
                throw ConfigError("\"y_points\" must be >= 2");
            }
            cfg.y_points = static_cast<int>(p);
        }
        if (config.contains("tolerance")) {
            cfg.tolerance = require_positive(config["tolerance"],
                                             "tolerance");
        }
        break;
    }
    case ExperimentKind::kFigure1:
        if (config.contains("curve_points")) {
            const std::int64_t p =
                require_nonneg_int(config["curve_points"], "curve_points");
            if (p < 2) {
                throw ConfigError("\"curve_points\" must be >= 2");
            }
            cfg.curve_points = static_cast<int>(p);
        }
        break;
    }

    // canonical resolved form: every effective value, defaults included
    json resolved;
    resolved["experiment"] = kind_key(cfg.kind);
    resolved["target"] = cfg.target.to_json();
    resolved["paths"] = cfg.paths;
    resolved["seed"] = cfg.seed;
    resolved["workers"] = cfg.workers;
    resolved["out"] = cfg.out_dir;
    resolved["quadrature"] = quadrature_to_json(cfg.quad);
    if (cfg.schedule) {
        resolved["schedule"] = schedule_to_json(*cfg.schedule);
    }
    switch (cfg.kind) {
    case ExperimentKind::kDivergence:
        resolved["estimator"] = cfg.estimator.to_json();
        resolved["save_trajectories"] = cfg.save_trajectories;
        break;
    case ExperimentKind::kRateStudy:
        resolved["T"] = cfg.horizon;
        resolved["n_grid"] = cfg.n_grid;
        resolved["order"] = cfg.order;
        if (cfg.order == 1) {
            resolved["estimator"] = cfg.estimator.to_json();
        } else {
            resolved["kernel"] = cfg.kernel->to_json();
        }
        break;
    case ExperimentKind::kScheduleSweep:
        resolved["T"] = cfg.horizon;
        resolved["n"] = cfg.sweep_n;
        resolved["alpha_grid"] = cfg.alpha_grid;
        resolved["estimator"] = cfg.estimator.to_json();
        break;
    case ExperimentKind::kReverseCheck:
        break;
    case ExperimentKind::kTweedieCheck:
        resolved["time"] = cfg.time;
        resolved["y_min"] = cfg.y_min;
        resolved["y_max"] = cfg.y_max;
        resolved["y_points"] = cfg.y_points;
        resolved["tolerance"] = cfg.tolerance;
        break;
    case ExperimentKind::kFigure1:
        resolved["curve_points"] = cfg.curve_points;
        break;
    }
    cfg.resolved = std::move(resolved);
    return cfg;
}

RunResult run_experiment(const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    RunPieces pieces;
    switch (config.kind) {
    case ExperimentKind::kDivergence:
        pieces = run_divergence(config);
        break;
    case ExperimentKind::kRateStudy:
        pieces = run_rate_study(config);
        break;
    case ExperimentKind::kScheduleSweep:
        pieces = run_schedule_sweep(config);
        break;
    case ExperimentKind::kReverseCheck:
        pieces = run_reverse_check(config);
        break;
    case ExperimentKind::kTweedieCheck:
        pieces = run_tweedie_check(config);
        break;
    case ExperimentKind::kFigure1:
        pieces = run_figure1(config);
        break;
    }

    const std::filesystem::path dir(config.out_dir);
    try {
        std::filesystem::create_directories(dir);
        for (const auto& file : pieces.files) {
            write_file(dir, file.first, file.second);
        }
    } catch (const std::filesystem::filesystem_error& e) {
        throw ConfigError(std::string("output directory not writable: ") +
                          e.what());
    }

    RunResult result;
    result.checks = pieces.checks;
    int failed = 0;
    for (const auto& check : pieces.checks) {
        if (!check.pass) {
            ++failed;
        }
    }
    result.exit_code = failed == 0 ? 0 : 2;
    if (failed > 0) {
        result.error = std::to_string(failed) + " check(s) failed";
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();
    json checks_json = json::array();
    for (const auto& check : pieces.checks) {
        checks_json.push_back({{"name", check.name},
                               {"pass", check.pass},
                               {"detail", check.detail}});
    }
    std::vector<std::string> outputs;
    for (const auto& file : pieces.files) {
        outputs.push_back(file.first);
    }
    outputs.push_back("manifest.json");
    result.manifest = {
        {"experiment", kind_key(config.kind)},
        {"config", config.resolved},
        {"config_digest", config_digest(config.resolved)},
        {"seed", config.seed},
        {"tool_version", tool_version()},
        {"wall_clock_seconds", elapsed},
        {"outputs", outputs},
        {"tolerances", pieces.tolerances},
        {"checks", checks_json},
        {"results", pieces.results},
    };
    try {
        write_file(dir, "manifest.json", result.manifest.dump(2) + "\n");
    } catch (const std::filesystem::filesystem_error& e) {
        throw ConfigError(std::string("output directory not writable: ") +
                          e.what());
    }

    std::vector<std::string> lines;
    lines.push_back("experiment: " + kind_key(config.kind));
    lines.insert(lines.end(), pieces.lines.begin(), pieces.lines.end());
    for (const auto& check : pieces.checks) {
        lines.push_back("check " + check.name + ": " +
                        (check.pass ? "PASS" : "FAIL") +
                        (check.detail.empty() ? "" : " (" + check.detail +
                                                         ")"));
    }
    for (const auto& name : outputs) {
        lines.push_back("wrote " + (dir / name).string());
    }
    std::string summary;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) {
            summary += '\n';
        }
        summary += lines[i];
    }
    result.summary = summary;
    return result;
}

RunResult run_experiment_text(const std::string& config_text,
                              const RunOverrides& overrides) {
    RunResult result;
    try {
        json config = json::parse(config_text);
        if (!config.is_object()) {
            throw ConfigError("config must be a JSON object");
        }
        if (overrides.experiment) {
            config["experiment"] = *overrides.experiment;
        }
        if (overrides.out_dir) {
            config["out"] = *overrides.out_dir;
        }
        if (overrides.seed) {
            config["seed"] = *overrides.seed;
        }
        if (overrides.paths) {
            config["paths"] = *overrides.paths;
        }
        if (overrides.workers) {
            config["workers"] = *overrides.workers;
        }
        return run_experiment(parse_run_config(config));
    } catch (const nlohmann::json::exception& e) {
        result.exit_code = 3;
        result.error = std::string("config error: ") + e.what();
    } catch (const ConfigError& e) {
        result.exit_code = 3;
        result.error = std::string("config error: ") + e.what();
    } catch (const NumericalError& e) {
        result.exit_code = 4;
        result.error = std::string("numerical failure: ") + e.what();
    } catch (const std::exception& e) {
        result.exit_code = 1;
        result.error = std::string("unexpected failure: ") + e.what();
    }
    return result;
}

} // namespace samplab
