#include "disagg/metrics.hpp"

#include "disagg/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace disagg::metrics {

namespace {

void check_pair(const Grid& est, const Grid& truth) {
    if (!est.same_shape(truth)) throw DimensionError("metrics: estimate and truth grids differ in shape");
    if (est.empty()) throw DomainError("metrics: empty grids");
}

std::vector<double> histogram(std::span<const double> xs, int bins, double lo, double hi) {
    std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
    const double width = (hi - lo) / bins;
    for (double x : xs) {
        int b = width > 0.0 ? static_cast<int>(std::floor((x - lo) / width)) : 0;
        b = std::clamp(b, 0, bins - 1);
        h[static_cast<std::size_t>(b)] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(xs.size());
    return h;
}

}  // namespace

double rmse(const Grid& est, const Grid& truth) {
    check_pair(est, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - truth[i]) * (est[i] - truth[i]);
    return std::sqrt(s / static_cast<double>(est.size()));
}

double rmse(const Grid& est, const Grid& truth, const Grid& lc, LandCover cls) {
    check_pair(est, truth);
    if (!lc.same_shape(est)) throw DimensionError("metrics: land-cover grid differs in shape");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        if (static_cast<int>(lc[i]) != static_cast<int>(cls)) continue;
        s += (est[i] - truth[i]) * (est[i] - truth[i]);
        ++n;
    }
    if (n == 0) throw DomainError("metrics::rmse: no pixels of class " + std::string(to_string(cls)));
    return std::sqrt(s / static_cast<double>(n));
}

double error_sd(const Grid& est, const Grid& truth) {
    check_pair(est, truth);
    const double n = static_cast<double>(est.size());
    double m = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) m += est[i] - truth[i];
    m /= n;
    double s = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - truth[i] - m) * (est[i] - truth[i] - m);
    return std::sqrt(s / n);
}

double mean_absolute_error(const Grid& est, const Grid& truth) {
    check_pair(est, truth);
    double s = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) s += std::abs(est[i] - truth[i]);
    return s / static_cast<double>(est.size());
}

HistogramSpec sm_histogram() {
    HistogramSpec h;
    h.bins = 50;
    h.range = std::pair{0.0, 0.5};
    return h;
}

double kld(std::span<const double> est, std::span<const double> truth, const HistogramSpec& spec) {
    if (est.size() < 10 || truth.size() < 10) throw DomainError("metrics::kld: need at least 10 samples per set");
    if (spec.bins < 1) throw DomainError("metrics::kld: bins must be >= 1");
    double lo, hi;
    if (spec.range) {
        std::tie(lo, hi) = *spec.range;
    } else {
        const auto [a, b] = std::minmax_element(est.begin(), est.end());
        const auto [c, d] = std::minmax_element(truth.begin(), truth.end());
        lo = std::min(*a, *c);
        hi = std::max(*b, *d);
    }
    if (!(hi >= lo)) throw DomainError("metrics::kld: empty histogram range");
    const auto pe = histogram(est, spec.bins, lo, hi);
    const auto pt = histogram(truth, spec.bins, lo, hi);
    const auto& p = spec.direction == KlDirection::TruthToEstimate ? pt : pe;
    const auto& q = spec.direction == KlDirection::TruthToEstimate ? pe : pt;
    double zp = 0.0, zq = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        zp += p[b] + spec.epsilon;
        zq += q[b] + spec.epsilon;
    }
    double kl = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        const double pb = (p[b] + spec.epsilon) / zp;
        const double qb = (q[b] + spec.epsilon) / zq;
        kl += pb * std::log(pb / qb);
    }
    return std::max(kl, 0.0);
}

ZTest ztest_threshold(std::span<const double> errors, double threshold, double alpha) {
    if (errors.empty()) throw DomainError("metrics::ztest_threshold: no errors");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("metrics::ztest_threshold: alpha must be in (0,1)");
    const double n = static_cast<double>(errors.size());
    double m = 0.0;
    for (double e : errors) m += std::abs(e);
    m /= n;
    double ss = 0.0;
    for (double e : errors) ss += (std::abs(e) - m) * (std::abs(e) - m);
    const double sd = errors.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    ZTest out;
    if (errors.size() < 30) {
        spdlog::warn("ztest_threshold: only {} samples, using the t distribution", errors.size());
        out.t_approximation = true;
        const double df = std::max(1.0, n - 1.0);
        out.critical = boost::math::quantile(boost::math::students_t(df), 1.0 - alpha);
    } else {
        out.critical = boost::math::quantile(boost::math::normal(), 1.0 - alpha);
    }
    const double diff = m - threshold;
    if (sd > 0.0) {
        out.statistic = diff / (sd / std::sqrt(n));
    } else {
        out.statistic = diff > 0.0 ? std::numeric_limits<double>::infinity()
                        : diff < 0.0 ? -std::numeric_limits<double>::infinity()
                                     : 0.0;
    }
    out.pass = out.statistic < out.critical;
    return out;
}

double error_fraction_below(const Grid& est, const Grid& truth, double level) {
    check_pair(est, truth);
    std::size_t n = 0;
    for (std::size_t i = 0; i < est.size(); ++i) n += std::abs(est[i] - truth[i]) < level ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(est.size());
}

}  // namespace disagg::metrics
