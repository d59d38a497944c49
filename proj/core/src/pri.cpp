#include "disagg/pri.hpp"

#include "disagg/errors.hpp"
#include "disagg/itclust.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace disagg::pri {

int Binning::index(double x) const {
    if (bins <= 1 || !(width > 0.0)) return 0;
    const int b = static_cast<int>(std::floor((x - lo) / width));
    return std::clamp(b, 0, bins - 1);
}

namespace {

Binning make_binning(const Eigen::Ref<const Eigen::VectorXd>& v, int bins) {
    Binning b;
    const double lo = v.minCoeff();
    const double hi = v.maxCoeff();
    b.lo = lo;
    if (hi > lo) {
        b.bins = bins;
        b.width = (hi - lo) / bins;
    } else {
        b.bins = 1;
        b.width = 0.0;
    }
    return b;
}

}  // namespace

double DiscretePosterior::log_score(int c, std::span<const double> x) const {
    if (x.size() != features.size()) throw DimensionError("pri: feature count mismatch");
    double s = std::log(prior[static_cast<std::size_t>(c)]);
    for (std::size_t j = 0; j < features.size(); ++j) s += std::log(conditional[j](features[j].index(x[j]), c));
    return s;
}

int DiscretePosterior::classify(std::span<const double> x) const {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes(); ++c) {
        const double s = log_score(c, x);
        if (s > best_score) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

DiscretePosterior fit_bayes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k, int k_j) {
    if (k < 2 || k_j < 2) throw DomainError("pri::fit_bayes: k and k_j must be >= 2");
    if (X.rows() == 0) throw DomainError("pri::fit_bayes: empty training set");
    if (X.rows() != y.size()) throw DimensionError("pri::fit_bayes: X rows and y length differ");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("pri::fit_bayes: NaN or Inf in training data");

    DiscretePosterior model;
    model.target = make_binning(y, k);
    if (model.target.bins == 1) {
        // A single class: its center is the constant itself.
        model.target.lo = y(0);
    }
    const int classes = model.target.bins;
    std::vector<int> labels(static_cast<std::size_t>(y.size()));
    model.prior.assign(static_cast<std::size_t>(classes), 0.0);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        labels[static_cast<std::size_t>(i)] = model.target.index(y(i));
        model.prior[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += 1.0;
    }
    // Empty classes keep a vanishing prior so log stays finite; they can never win against an observed class.
    for (double& p : model.prior) p = p > 0.0 ? p / static_cast<double>(y.size()) : 1e-300;

    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        Binning b = make_binning(X.col(j), k_j);
        if (b.bins == 1) spdlog::debug("pri::fit_bayes: feature {} is constant; using a single bin", j);
        Eigen::MatrixXd table = Eigen::MatrixXd::Ones(b.bins, classes);
        for (Eigen::Index i = 0; i < X.rows(); ++i) table(b.index(X(i, j)), labels[static_cast<std::size_t>(i)]) += 1.0;
        for (int c = 0; c < classes; ++c) table.col(c) /= table.col(c).sum();
        model.features.push_back(b);
        model.conditional.push_back(std::move(table));
    }
    return model;
}

Eigen::VectorXd bayes_initial(const DiscretePosterior& model, const Eigen::MatrixXd& X) {
    if (static_cast<std::size_t>(X.cols()) != model.feature_count()) throw DimensionError("pri: feature count mismatch");
    Eigen::VectorXd out(X.rows());
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
        out(i) = model.target.center(model.classify(row));
    }
    return out;
}

Grid bayes_initial(const DiscretePosterior& model, const Eigen::MatrixXd& X, const Grid& like) {
    if (static_cast<std::size_t>(X.rows()) != like.size()) throw DimensionError("pri: rows of X must match grid size");
    const Eigen::VectorXd v = bayes_initial(model, X);
    std::vector<double> values(v.data(), v.data() + v.size());
    for (double& x : values) x = std::clamp(x, 0.0, 1.0);
    return Grid(like.rows(), like.cols(), like.cell_size(), Variable::SM, std::move(values));
}

void PriParams::validate() const {
    if (!(beta >= 0.0)) throw DomainError("pri: beta must be >= 0");
    if (iterations < 0) throw DomainError("pri: iterations must be >= 0");
    if (step && !(*step > 0.0)) throw DomainError("pri: step must be > 0");
    if (sigma && !(*sigma > 0.0)) throw DomainError("pri: sigma must be > 0");
    if (max_halvings < 0) throw DomainError("pri: max_halvings must be >= 0");
}

namespace {

// Samples collapsed to distinct values with multiplicities. Identical samples
// receive identical gradients, so they stay together and the collapse is exact.
struct Weighted {
    std::vector<double> x;
    std::vector<double> w;
    double total = 0.0;
};

Weighted collapse(std::span<const double> s) {
    std::map<double, double> counts;
    for (double v : s) counts[v] += 1.0;
    Weighted out;
    for (const auto& [v, c] : counts) {
        out.x.push_back(v);
        out.w.push_back(c);
    }
    out.total = static_cast<double>(s.size());
    return out;
}

double kernel(double d, double sigma) {
    return std::exp(-0.5 * d * d / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double density(double x, const Weighted& s, double sigma) {
    double p = 0.0;
    for (std::size_t b = 0; b < s.x.size(); ++b) p += s.w[b] * kernel(x - s.x[b], sigma);
    return p / s.total;
}

double entropy(const Weighted& s, double sigma) {
    double h = 0.0;
    for (std::size_t a = 0; a < s.x.size(); ++a) h -= s.w[a] * std::log(density(s.x[a], s, sigma));
    return h / s.total;
}

double cross(const Weighted& s, const Weighted& anchor, double sigma) {
    double c = 0.0;
    for (std::size_t a = 0; a < s.x.size(); ++a) c += s.w[a] * std::log(density(s.x[a], anchor, sigma));
    return c / s.total;
}

// H - beta*KL = (1 + beta) H + beta E_m[log q].
double objective(const Weighted& m, const Weighted& anchor, double beta, double sigma) {
    return (1.0 + beta) * entropy(m, sigma) + beta * cross(m, anchor, sigma);
}

// dJ/dm_i for one sample at each distinct value.
std::vector<double> gradient(const Weighted& m, const Weighted& anchor, double beta, double sigma) {
    const std::size_t n = m.x.size();
    const double s2 = sigma * sigma;
    std::vector<double> p(n);
    for (std::size_t a = 0; a < n; ++a) p[a] = density(m.x[a], m, sigma);
    std::vector<double> g(n);
    for (std::size_t a = 0; a < n; ++a) {
        double gh = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double d = m.x[b] - m.x[a];
            gh += m.w[b] * kernel(d, sigma) * d * (1.0 / p[a] + 1.0 / p[b]);
        }
        gh *= -1.0 / (m.total * m.total * s2);

        double q = 0.0, dq = 0.0;
        for (std::size_t e = 0; e < anchor.x.size(); ++e) {
            const double d = m.x[a] - anchor.x[e];
            const double k = anchor.w[e] * kernel(d, sigma);
            q += k;
            dq -= k * d / s2;
        }
        const double gc = (dq / q) / m.total;
        g[a] = (1.0 + beta) * gh + beta * gc;
    }
    return g;
}

double sd_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::optional<double> silverman_1d(std::span<const double> v) {
    if (v.size() < 2) return std::nullopt;
    Eigen::MatrixXd X = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    try {
        const double s = itclust::silverman_sigma(X);
        if (s > 0.0 && std::isfinite(s)) return s;
    } catch (const Error&) {
    }
    return std::nullopt;
}

}  // namespace

double parzen_entropy(std::span<const double> samples, double sigma) {
    if (samples.empty()) throw DomainError("pri: no samples");
    if (!(sigma > 0.0)) throw DomainError("pri: sigma must be > 0");
    return entropy(collapse(samples), sigma);
}

double parzen_kl(std::span<const double> samples, std::span<const double> anchor, double sigma) {
    if (samples.empty() || anchor.empty()) throw DomainError("pri: no samples");
    if (!(sigma > 0.0)) throw DomainError("pri: sigma must be > 0");
    const Weighted m = collapse(samples);
    return -entropy(m, sigma) - cross(m, collapse(anchor), sigma);
}

double pri_objective(std::span<const double> m, std::span<const double> initial, double beta, double sigma) {
    if (m.empty() || initial.empty()) throw DomainError("pri: no samples");
    if (!(sigma > 0.0)) throw DomainError("pri: sigma must be > 0");
    return objective(collapse(m), collapse(initial), beta, sigma);
}

PriResult pri_optimize(const Grid& initial, const Grid& coarse, const PriParams& params) {
    params.validate();
    if (initial.empty() || coarse.empty()) throw DomainError("pri_optimize: empty grid");
    if (initial.rows() % coarse.rows() != 0 || initial.cols() % coarse.cols() != 0 ||
        initial.rows() / coarse.rows() != initial.cols() / coarse.cols()) {
        throw DimensionError("pri_optimize: coarse grid does not tile the initial grid");
    }
    const Grid start = replicate(coarse, initial.rows() / coarse.rows());

    PriResult out;
    out.sigma = params.sigma ? *params.sigma
                             : silverman_1d(initial.values()).value_or(silverman_1d(start.values()).value_or(0.01));
    const double sd = sd_of(initial.values());
    out.step = params.step ? *params.step : 0.05 * (sd > 0.0 ? sd : std::max(sd_of(start.values()), 0.02));

    const Weighted anchor = collapse(initial.values());
    Weighted m = collapse(start.values());
    const std::vector<double> origin = m.x;
    double j = objective(m, anchor, params.beta, out.sigma);
    if (!std::isfinite(j)) throw NumericError("pri_optimize: non-finite objective at the start");
    out.objective.push_back(j);

    for (int it = 0; it < params.iterations; ++it) {
        const std::vector<double> g = gradient(m, anchor, params.beta, out.sigma);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (!(gmax > 0.0)) break;

        double step = out.step;
        bool accepted = false;
        bool finite = true;
        Weighted trial = m;
        for (int h = 0; h <= params.max_halvings; ++h) {
            for (std::size_t a = 0; a < m.x.size(); ++a) trial.x[a] = m.x[a] + step * g[a] / gmax;
            const double jt = objective(trial, anchor, params.beta, out.sigma);
            finite = std::isfinite(jt);
            if (finite && jt >= j) {
                m = trial;
                j = jt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!finite) throw NumericError("pri_optimize: objective stayed non-finite after step halving");
            break;  // no ascent direction at any tried step
        }
        out.objective.push_back(j);
    }

    std::map<double, double> moved;
    for (std::size_t a = 0; a < origin.size(); ++a) moved[origin[a]] = m.x[a];
    std::vector<double> values(start.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::clamp(moved.at(start[i]), 0.0, 1.0);
    out.sm = Grid(start.rows(), start.cols(), initial.cell_size(), Variable::SM, std::move(values));
    return out;
}

Eigen::MatrixXd pri_features(const synth::Scene& scene) {
    scene.validate();
    const Grid coarse = replicate(scene.coarse_sm, scene.coarse_factor());
    const auto n = static_cast<Eigen::Index>(scene.true_sm.size());
    Eigen::MatrixXd X(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto p = static_cast<std::size_t>(i);
        X(i, 0) = scene.lst[p];
        X(i, 1) = scene.ppt[p];
        X(i, 2) = scene.lai[p];
        X(i, 3) = scene.lc[p];
        X(i, 4) = coarse[p];
    }
    return X;
}

Grid pri_day(const synth::Scene& scene, const PriConfig& config) {
    if (scene.insitu.empty()) throw DataError("pri_day: no in-situ observations");
    const Eigen::MatrixXd X = pri_features(scene);
    Eigen::MatrixXd Xt(static_cast<Eigen::Index>(scene.insitu.size()), X.cols());
    Eigen::VectorXd yt(Xt.rows());
    for (Eigen::Index r = 0; r < Xt.rows(); ++r) {
        const auto& o = scene.insitu[static_cast<std::size_t>(r)];
        Xt.row(r) = X.row(static_cast<Eigen::Index>(o.pixel));
        yt(r) = o.value;
    }
    const DiscretePosterior model = fit_bayes(Xt, yt, config.k, config.k_j);
    const Grid initial = bayes_initial(model, X, scene.true_sm);
    return pri_optimize(initial, scene.coarse_sm, config.optimize).sm;
}

}  // namespace disagg::pri
