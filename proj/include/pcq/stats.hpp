#pragma once

#include <optional>
#include <span>
#include <vector>

namespace pcq {

// Sample Pearson correlation; DegenerateInput when either side has zero
// variance or fewer than two samples.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson over fractional ranks; ties receive their average rank.
double spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> fractional_ranks(std::span<const double> x);

double rmse(std::span<const double> prediction, std::span<const double> target);

// Fraction of samples whose residual exceeds the per-sample 95% confidence
// interval; without CI data, residuals are compared against 2 * RMSE.
double outlier_ratio(std::span<const double> prediction, std::span<const double> mos,
                     const std::vector<double>* ci95 = nullptr);

// Monotonic four-parameter logistic q(s) = a + (b-a) / (1 + exp(-c (s-d))).
struct LogisticFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    bool converged = false;
    double sse = 0.0;

    double operator()(double score) const;
    bool degenerate() const { return a == b || c == 0.0; }
};

// Deterministic least-squares fit: fixed initialization (a = min mos,
// b = max mos, d = median score, c = sign of correlation / std of scores),
// Levenberg-Marquardt refinement until the relative SSE change drops below
// 1e-10 or 1000 iterations. Non-convergence returns the best iterate with
// converged = false.
LogisticFit fit_logistic(std::span<const double> scores, std::span<const double> mos);

// Lower quantile of the standard normal distribution (Wichura's AS 241).
double normal_quantile(double p);

struct PccDifference {
    double r1 = 0.0;
    double r2 = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool significant = false;
};

// Confidence interval for the difference of two overlapping dependent
// correlations (both against mos) by Zou's method: Fisher-z limits for each
// correlation combined through the correlation between the two estimates.
PccDifference pcc_difference_significance(std::span<const double> scores_a,
                                          std::span<const double> scores_b,
                                          std::span<const double> mos,
                                          double confidence = 0.95);

}  // namespace pcq
