#include "pcq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcq/errors.hpp"

namespace pcq {

namespace {

void check_paired(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ShapeMismatch("paired vectors differ in length");
    }
    if (x.size() < 2) {
        throw DegenerateInput("need at least two samples");
    }
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1) {
        return v[mid];
    }
    const double hi = v[mid];
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_paired(x, y);
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DegenerateInput("correlation of a zero-variance vector");
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> fractional_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) {
            ++j;
        }
        // Average 1-based rank across the tie group [i, j].
        const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_paired(x, y);
    const std::vector<double> rx = fractional_ranks(x);
    const std::vector<double> ry = fractional_ranks(y);
    return pearson(rx, ry);
}

double rmse(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size() || prediction.empty()) {
        throw ShapeMismatch("rmse needs equal-length non-empty vectors");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double r = prediction[i] - target[i];
        total += r * r;
    }
    return std::sqrt(total / static_cast<double>(prediction.size()));
}

double outlier_ratio(std::span<const double> prediction, std::span<const double> mos,
                     const std::vector<double>* ci95) {
    if (prediction.size() != mos.size() || prediction.empty()) {
        throw ShapeMismatch("outlier_ratio needs equal-length non-empty vectors");
    }
    if (ci95 != nullptr && ci95->size() != prediction.size()) {
        throw ShapeMismatch("CI vector length does not match");
    }
    const double fallback = 2.0 * rmse(prediction, mos);
    std::size_t outliers = 0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double bound = ci95 != nullptr ? (*ci95)[i] : fallback;
        if (std::abs(prediction[i] - mos[i]) > bound) {
            ++outliers;
        }
    }
    return static_cast<double>(outliers) / static_cast<double>(prediction.size());
}

double LogisticFit::operator()(double score) const {
    return a + (b - a) / (1.0 + std::exp(-c * (score - d)));
}

namespace {

double logistic_sse(const LogisticFit& fit, std::span<const double> scores,
                    std::span<const double> mos) {
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double r = fit(scores[i]) - mos[i];
        total += r * r;
    }
    return total;
}

// Solves the damped 4x4 normal equations in place; returns false when the
// system is numerically singular.
bool solve4(double m[4][4], double rhs[4], double out[4]) {
    int perm[4] = {0, 1, 2, 3};
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r) {
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[pivot]][col])) {
                pivot = r;
            }
        }
        std::swap(perm[col], perm[pivot]);
        const double p = m[perm[col]][col];
        if (std::abs(p) < 1e-300) {
            return false;
        }
        for (int r = col + 1; r < 4; ++r) {
            const double f = m[perm[r]][col] / p;
            for (int c = col; c < 4; ++c) {
                m[perm[r]][c] -= f * m[perm[col]][c];
            }
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    for (int col = 3; col >= 0; --col) {
        double v = rhs[perm[col]];
        for (int c = col + 1; c < 4; ++c) {
            v -= m[perm[col]][c] * out[c];
        }
        out[col] = v / m[perm[col]][col];
    }
    return true;
}

}  // namespace

LogisticFit fit_logistic(std::span<const double> scores, std::span<const double> mos) {
    if (scores.size() != mos.size()) {
        throw ShapeMismatch("scores and mos differ in length");
    }
    if (scores.size() < 5) {
        throw DegenerateInput("logistic fitting needs at least 5 samples");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i]) || !std::isfinite(mos[i])) {
            throw InvalidArgument("logistic fitting requires finite inputs");
        }
    }

    LogisticFit fit;
    fit.a = *std::min_element(mos.begin(), mos.end());
    fit.b = *std::max_element(mos.begin(), mos.end());
    fit.d = median_of(std::vector<double>(scores.begin(), scores.end()));

    const double ms = mean(scores);
    double var = 0.0, cov = 0.0;
    const double mm = mean(mos);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        var += (scores[i] - ms) * (scores[i] - ms);
        cov += (scores[i] - ms) * (mos[i] - mm);
    }
    const double sd = std::sqrt(var / static_cast<double>(scores.size()));
    fit.c = sd > 0.0 ? (cov < 0.0 ? -1.0 : 1.0) / sd : 0.0;

    fit.sse = logistic_sse(fit, scores, mos);
    if (sd == 0.0) {
        // Constant scores cannot be refined; keep the flat initial fit.
        fit.converged = false;
        return fit;
    }

    double lambda = 1e-3;
    for (int iter = 0; iter < 1000; ++iter) {
        double jtj[4][4] = {};
        double jtr[4] = {};
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double e = std::exp(-fit.c * (scores[i] - fit.d));
            const double sig = 1.0 / (1.0 + e);
            const double dsig = sig * (1.0 - sig);
            const double jac[4] = {1.0 - sig, sig, (fit.b - fit.a) * dsig * (scores[i] - fit.d),
                                   -(fit.b - fit.a) * dsig * fit.c};
            const double resid = (fit.a + (fit.b - fit.a) * sig) - mos[i];
            for (int r = 0; r < 4; ++r) {
                jtr[r] += jac[r] * resid;
                for (int ccol = 0; ccol < 4; ++ccol) {
                    jtj[r][ccol] += jac[r] * jac[ccol];
                }
            }
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 24 && !stepped; ++attempt) {
            double m[4][4];
            double rhs[4];
            for (int r = 0; r < 4; ++r) {
                rhs[r] = -jtr[r];
                for (int ccol = 0; ccol < 4; ++ccol) {
                    m[r][ccol] = jtj[r][ccol];
                }
                m[r][r] += lambda * (jtj[r][r] != 0.0 ? jtj[r][r] : 1.0);
            }
            double delta[4];
            if (!solve4(m, rhs, delta)) {
                lambda *= 10.0;
                continue;
            }
            LogisticFit trial = fit;
            trial.a += delta[0];
            trial.b += delta[1];
            trial.c += delta[2];
            trial.d += delta[3];
            trial.sse = logistic_sse(trial, scores, mos);
            if (std::isfinite(trial.sse) && trial.sse <= fit.sse) {
                const double rel_change =
                    fit.sse > 0.0 ? (fit.sse - trial.sse) / fit.sse : 0.0;
                fit = trial;
                lambda = std::max(lambda * 0.25, 1e-12);
                stepped = true;
                if (rel_change < 1e-10) {
                    fit.converged = true;
                    return fit;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) {
            // No descent direction left; report the best iterate.
            fit.converged = fit.sse == 0.0;
            return fit;
        }
    }
    fit.converged = false;
    return fit;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidArgument("normal quantile requires p in (0, 1)");
    }
    // Wichura (1988), algorithm AS 241, PPND16.
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

PccDifference pcc_difference_significance(std::span<const double> scores_a,
                                          std::span<const double> scores_b,
                                          std::span<const double> mos, double confidence) {
    if (scores_a.size() != scores_b.size() || scores_a.size() != mos.size()) {
        throw ShapeMismatch("score and mos vectors differ in length");
    }
    const std::size_t n = scores_a.size();
    if (n < 10) {
        throw DegenerateInput("Zou's method needs at least 10 samples");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw InvalidArgument("confidence must lie in (0, 1)");
    }

    PccDifference result;
    result.r1 = pearson(scores_a, mos);
    result.r2 = pearson(scores_b, mos);
    const double r12 = pearson(scores_a, scores_b);

    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double se = 1.0 / std::sqrt(static_cast<double>(n) - 3.0);
    auto fisher_limits = [&](double r, double& lo, double& hi) {
        const double zr = std::atanh(std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15));
        lo = std::tanh(zr - z * se);
        hi = std::tanh(zr + z * se);
    };
    double l1, u1, l2, u2;
    fisher_limits(result.r1, l1, u1);
    fisher_limits(result.r2, l2, u2);

    const double denom = (1.0 - result.r1 * result.r1) * (1.0 - result.r2 * result.r2);
    double corr = 0.0;
    if (denom > 0.0) {
        corr = ((r12 - 0.5 * result.r1 * result.r2) *
                    (1.0 - result.r1 * result.r1 - result.r2 * result.r2 - r12 * r12) +
                r12 * r12 * r12) /
               denom;
    }
    corr = std::clamp(corr, -1.0, 1.0);

    const double diff = result.r1 - result.r2;
    const double low_span = (result.r1 - l1) * (result.r1 - l1) +
                            (u2 - result.r2) * (u2 - result.r2) -
                            2.0 * corr * (result.r1 - l1) * (u2 - result.r2);
    const double high_span = (u1 - result.r1) * (u1 - result.r1) +
                             (result.r2 - l2) * (result.r2 - l2) -
                             2.0 * corr * (u1 - result.r1) * (result.r2 - l2);
    result.ci_low = diff - std::sqrt(std::max(low_span, 0.0));
    result.ci_high = diff + std::sqrt(std::max(high_span, 0.0));
    result.significant = result.ci_low > 0.0 || result.ci_high < 0.0;
    return result;
}

}  // namespace pcq
