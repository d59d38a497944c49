#include "disagg/srrm.hpp"

#include "disagg/errors.hpp"
#include "disagg/metrics.hpp"
#include "disagg/parallel.hpp"
#include "disagg/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace disagg::srrm {

namespace {

constexpr Eigen::Index kLcColumns = kLandCoverCount;

void zscore(Eigen::Ref<Eigen::VectorXd> c) {
    const double m = c.mean();
    const double sd = std::sqrt((c.array() - m).square().mean());
    if (sd > 0.0) {
        c = (c.array() - m) / sd;
    } else {
        c.setZero();
    }
}

int lc_id(double v) {
    const int id = static_cast<int>(v);
    if (id < 0 || id >= kLandCoverCount) throw DomainError("srrm: unknown land-cover class " + std::to_string(id));
    return id;
}

}  // namespace

itclust::FeatureMatrix build_features(const synth::Scene& scene) {
    scene.validate();
    const std::size_t rows = scene.fine_rows();
    const std::size_t cols = scene.fine_cols();
    const auto n = static_cast<Eigen::Index>(rows * cols);
    itclust::FeatureMatrix X = itclust::FeatureMatrix::Zero(n, 3 + kLcColumns + 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto p = static_cast<std::size_t>(i);
        X(i, 0) = scene.lst[p];
        X(i, 1) = scene.ppt[p];
        X(i, 2) = scene.lai[p];
        X(i, 3 + lc_id(scene.lc[p])) = 1.0;
        const std::size_t r = p / cols;
        const std::size_t c = p % cols;
        X(i, 3 + kLcColumns) = cols > 1 ? static_cast<double>(c) / static_cast<double>(cols - 1) : 0.0;
        X(i, 4 + kLcColumns) = rows > 1 ? static_cast<double>(r) / static_cast<double>(rows - 1) : 0.0;
    }
    for (Eigen::Index j = 0; j < 3; ++j) zscore(X.col(j));
    return X;
}

Eigen::MatrixXd regression_features(const synth::Scene& scene) {
    scene.validate();
    const Grid coarse = replicate(scene.coarse_sm, scene.coarse_factor());
    const auto n = static_cast<Eigen::Index>(scene.true_sm.size());
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, 3 + kLcColumns + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto p = static_cast<std::size_t>(i);
        R(i, 0) = scene.lst[p];
        R(i, 1) = scene.ppt[p];
        R(i, 2) = scene.lai[p];
        R(i, 3 + lc_id(scene.lc[p])) = 1.0;
        R(i, 3 + kLcColumns) = coarse[p];
    }
    return R;
}

TrainingSet training_set(const synth::Scene& scene, double train_frac) {
    if (!(train_frac > 0.0 && train_frac <= 1.0)) throw DomainError("srrm: train_fraction must be in (0,1]");
    const auto want = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(scene.true_sm.size()))));
    if (want > scene.insitu.size()) {
        throw DomainError("srrm: training fraction needs " + std::to_string(want) + " in-situ pixels, scene has " +
                          std::to_string(scene.insitu.size()));
    }
    TrainingSet t;
    t.pixels.reserve(want);
    t.targets.reserve(want);
    for (std::size_t i = 0; i < want; ++i) {
        t.pixels.push_back(scene.insitu[i].pixel);
        t.targets.push_back(scene.insitu[i].value);
    }
    return t;
}

namespace {

// Nonempty cluster for every cluster index; empty ones go to the nearest membership centroid.
std::vector<int> assign_owners(const Eigen::MatrixXd& m, const std::vector<std::size_t>& counts) {
    const auto K = static_cast<Eigen::Index>(counts.size());
    std::vector<int> owner(counts.size());
    bool any_empty = false;
    for (Eigen::Index k = 0; k < K; ++k) {
        owner[static_cast<std::size_t>(k)] = static_cast<int>(k);
        any_empty = any_empty || counts[static_cast<std::size_t>(k)] == 0;
    }
    if (!any_empty) return owner;

    Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(K, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double mass = m.col(k).sum();
        if (mass > 0.0) centroid.row(k) = (m.col(k).transpose() * m) / mass;
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        if (counts[static_cast<std::size_t>(k)] > 0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < K; ++j) {
            if (counts[static_cast<std::size_t>(j)] == 0) continue;
            const double d = (centroid.row(k) - centroid.row(j)).squaredNorm();
            if (d < best) {
                best = d;
                owner[static_cast<std::size_t>(k)] = static_cast<int>(j);
            }
        }
        spdlog::warn("srrm: cluster {} has no training pixels; using the model of cluster {}", k,
                     owner[static_cast<std::size_t>(k)]);
    }
    return owner;
}

struct Split {
    std::vector<std::vector<Eigen::Index>> rows;  // per cluster, rows into the training arrays
    std::vector<int> owner;
};

Split split_by_cluster(const Eigen::MatrixXd& m, const std::vector<int>& labels, const TrainingSet& train,
                       std::span<const std::size_t> use) {
    const auto K = static_cast<std::size_t>(m.cols());
    Split s;
    s.rows.resize(K);
    for (std::size_t t : use) s.rows[static_cast<std::size_t>(labels[train.pixels[t]])].push_back(static_cast<Eigen::Index>(t));
    std::vector<std::size_t> counts(K);
    for (std::size_t k = 0; k < K; ++k) counts[k] = s.rows[k].size();
    if (std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; })) {
        throw DomainError("srrm: no training pixels");
    }
    s.owner = assign_owners(m, counts);
    return s;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& features, const TrainingSet& train,
                            const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(train.pixels[static_cast<std::size_t>(rows[r])]));
    }
    return out;
}

Eigen::VectorXd gather_targets(const TrainingSet& train, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) y(static_cast<Eigen::Index>(r)) = train.targets[static_cast<std::size_t>(rows[r])];
    return y;
}

ClusterModels fit_split(const Eigen::MatrixXd& features, const TrainingSet& train, const Split& split, double mu,
                        std::optional<double> sigma) {
    ClusterModels out;
    std::vector<int> model_of(split.rows.size(), -1);
    for (std::size_t k = 0; k < split.rows.size(); ++k) {
        if (split.rows[k].empty()) continue;
        model_of[k] = static_cast<int>(out.models.size());
        out.models.push_back(
            kridge::fit(gather_rows(features, train, split.rows[k]), gather_targets(train, split.rows[k]), mu, sigma));
    }
    out.owner.resize(split.rows.size());
    for (std::size_t k = 0; k < split.rows.size(); ++k) {
        out.owner[k] = model_of[static_cast<std::size_t>(split.owner[k])];
    }
    return out;
}

std::vector<std::size_t> all_rows(const TrainingSet& train) {
    std::vector<std::size_t> use(train.pixels.size());
    std::iota(use.begin(), use.end(), std::size_t{0});
    return use;
}

void check_training(const Eigen::MatrixXd& features, const itclust::MembershipMatrix& M, const TrainingSet& train) {
    if (M.n() != features.rows()) throw DimensionError("srrm: membership rows differ from feature rows");
    if (train.pixels.size() != train.targets.size()) throw DimensionError("srrm: training pixels and targets differ");
    if (train.pixels.empty()) throw DomainError("srrm: no training pixels");
    for (std::size_t p : train.pixels) {
        if (static_cast<Eigen::Index>(p) >= features.rows()) throw DimensionError("srrm: training pixel out of range");
    }
}

}  // namespace

ClusterModels train_cluster_models(const Eigen::MatrixXd& features, const itclust::MembershipMatrix& M,
                                   const TrainingSet& train, double mu, std::optional<double> sigma) {
    check_training(features, M, train);
    const Eigen::MatrixXd m = M.m();
    const Split split = split_by_cluster(m, M.hard_labels(), train, all_rows(train));
    return fit_split(features, train, split, mu, sigma);
}

ClusterModels train_cluster_models(const synth::Scene& scene, const itclust::MembershipMatrix& M, double train_frac,
                                   double mu) {
    return train_cluster_models(regression_features(scene), M, training_set(scene, train_frac), mu);
}

Eigen::MatrixXd cluster_predictions(const ClusterModels& models, const Eigen::MatrixXd& features) {
    std::vector<Eigen::VectorXd> per_model;
    per_model.reserve(models.models.size());
    for (const auto& model : models.models) per_model.push_back(kridge::predict(model, features));
    Eigen::MatrixXd P(features.rows(), static_cast<Eigen::Index>(models.owner.size()));
    for (std::size_t k = 0; k < models.owner.size(); ++k) {
        P.col(static_cast<Eigen::Index>(k)) = per_model[static_cast<std::size_t>(models.owner[k])];
    }
    return P;
}

Eigen::VectorXd blend(const Eigen::MatrixXd& memberships, const Eigen::MatrixXd& predictions) {
    if (memberships.rows() != predictions.rows() || memberships.cols() != predictions.cols()) {
        throw DimensionError("srrm::blend: memberships and predictions differ in shape");
    }
    return memberships.cwiseProduct(predictions).rowwise().sum();
}

void SrrmParams::validate() const {
    if (k < 1) throw DomainError("srrm: K must be >= 1");
    if (!(psi >= 0.0)) throw DomainError("srrm: psi must be >= 0");
    if (!(mu >= 0.0)) throw DomainError("srrm: mu must be >= 0");
    if (iterations < 1) throw DomainError("srrm: iterations must be >= 1");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) throw DomainError("srrm: sample_fraction must be in (0,1]");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw DomainError("srrm: train_fraction must be in (0,1]");
}

itclust::ClusterParams SrrmParams::cluster_params() const {
    itclust::ClusterParams p;
    p.k = k;
    p.psi = psi;
    p.iterations = iterations;
    p.sample_fraction = sample_fraction;
    p.seed = seed;
    p.subsample = subsample;
    return p;
}

namespace {

Grid to_grid(const Eigen::VectorXd& v, const Grid& like) {
    std::vector<double> values(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) values[static_cast<std::size_t>(i)] = std::clamp(v(i), 0.0, 1.0);
    return Grid(like.rows(), like.cols(), like.cell_size(), Variable::SM, std::move(values));
}

DayFit finish_day(const synth::Scene& scene, const Eigen::MatrixXd& R, const TrainingSet& train,
                  itclust::MembershipMatrix M, double mu) {
    DayFit fit;
    fit.models = train_cluster_models(R, M, train, mu);
    fit.sm = to_grid(blend(M.m(), cluster_predictions(fit.models, R)), scene.true_sm);
    fit.memberships = std::move(M);
    return fit;
}

}  // namespace

DayFit disaggregate_day(const synth::Scene& scene, const SrrmParams& params, const itclust::IterationObserver& observe) {
    params.validate();
    const itclust::FeatureMatrix X = build_features(scene);
    const Eigen::MatrixXd R = regression_features(scene);
    const TrainingSet train = training_set(scene, params.train_fraction);
    return finish_day(scene, R, train, itclust::cluster(X, params.cluster_params(), observe), params.mu);
}

void SearchGrid::validate() const {
    if (k_values.empty() || psi_values.empty() || mu_values.empty()) throw DomainError("srrm: empty search grid");
    for (int k : k_values)
        if (k < 1) throw DomainError("srrm: K values must be >= 1");
    for (double p : psi_values)
        if (!(p >= 0.0)) throw DomainError("srrm: psi values must be >= 0");
    for (double m : mu_values)
        if (!(m >= 0.0)) throw DomainError("srrm: mu values must be >= 0");
    if (folds < 2) throw DomainError("srrm: folds must be >= 2");
}

namespace {

struct CvRun {
    CvResult result;
    std::vector<itclust::MembershipMatrix> memberships;  // per (K, psi), grid order
    TrainingSet train;
    Eigen::MatrixXd regression;
};

std::vector<itclust::MembershipMatrix> cluster_all(const itclust::FeatureMatrix& X,
                                                   const std::vector<itclust::ClusterParams>& params) {
    try {
        return itclust::cluster_batch(X, params);
    } catch (const DegenerateError&) {
        // Retry one at a time so only the failing settings are lost.
        std::vector<itclust::MembershipMatrix> out;
        for (const auto& p : params) {
            try {
                out.push_back(itclust::cluster(X, p));
            } catch (const DegenerateError& e) {
                spdlog::warn("srrm: clustering with K={} psi={} failed: {}", p.k, p.psi, e.what());
                out.emplace_back();
            }
        }
        return out;
    }
}

// Sum of |error| per mu over the held-out rows of one fold.
std::vector<double> fold_errors(const Eigen::MatrixXd& m, const std::vector<int>& labels, const Eigen::MatrixXd& R,
                                const TrainingSet& train, std::span<const std::size_t> fit_rows,
                                std::span<const std::size_t> held, std::span<const double> mus) {
    const Split split = split_by_cluster(m, labels, train, fit_rows);
    const auto K = static_cast<Eigen::Index>(m.cols());
    const auto nh = static_cast<Eigen::Index>(held.size());

    Eigen::MatrixXd Rh(nh, R.cols());
    Eigen::MatrixXd Mh(nh, K);
    Eigen::VectorXd yh(nh);
    for (Eigen::Index r = 0; r < nh; ++r) {
        const std::size_t t = held[static_cast<std::size_t>(r)];
        const auto px = static_cast<Eigen::Index>(train.pixels[t]);
        Rh.row(r) = R.row(px);
        Mh.row(r) = m.row(px);
        yh(r) = train.targets[t];
    }

    // predictions[mu][cluster] on the held-out rows; infinite when the fit failed.
    std::vector<std::vector<Eigen::VectorXd>> pred(mus.size(), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(K)));
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& rows = split.rows[static_cast<std::size_t>(k)];
        if (rows.empty()) continue;
        const Eigen::MatrixXd Xk = gather_rows(R, train, rows);
        const Eigen::VectorXd yk = gather_targets(train, rows);
        std::vector<std::optional<kridge::KernelModel>> models(mus.size());
        try {
            auto path = kridge::fit_path(Xk, yk, mus);
            for (std::size_t u = 0; u < mus.size(); ++u) models[u] = std::move(path[u]);
        } catch (const NumericError&) {
            for (std::size_t u = 0; u < mus.size(); ++u) {
                try {
                    models[u] = kridge::fit(Xk, yk, mus[u]);
                } catch (const NumericError&) {
                }
            }
        }
        for (std::size_t u = 0; u < mus.size(); ++u) {
            pred[u][static_cast<std::size_t>(k)] =
                models[u] ? kridge::predict(*models[u], Rh)
                          : Eigen::VectorXd::Constant(nh, std::numeric_limits<double>::infinity());
        }
    }

    std::vector<double> err(mus.size(), 0.0);
    for (std::size_t u = 0; u < mus.size(); ++u) {
        Eigen::MatrixXd P(nh, K);
        for (Eigen::Index k = 0; k < K; ++k) {
            P.col(k) = pred[u][static_cast<std::size_t>(split.owner[static_cast<std::size_t>(k)])];
        }
        const Eigen::VectorXd y = blend(Mh, P);
        for (Eigen::Index r = 0; r < nh; ++r) {
            err[u] += std::isfinite(y(r)) ? std::abs(std::clamp(y(r), 0.0, 1.0) - yh(r))
                                          : std::numeric_limits<double>::infinity();
        }
    }
    return err;
}

bool better(const CvEntry& a, const CvEntry& b) {
    return std::tuple(a.mae, a.k, -a.mu, a.psi) < std::tuple(b.mae, b.k, -b.mu, b.psi);
}

CvRun run_cv(const synth::Scene& scene, const SearchGrid& grid, const SrrmParams& base) {
    grid.validate();
    base.validate();
    CvRun run;
    const itclust::FeatureMatrix X = build_features(scene);
    run.regression = regression_features(scene);
    run.train = training_set(scene, base.train_fraction);
    const std::size_t n_train = run.train.pixels.size();
    if (n_train < 2) throw DomainError("srrm::cross_validate: need at least 2 training pixels");

    std::size_t folds = static_cast<std::size_t>(grid.folds);
    if (n_train < folds) {
        spdlog::warn("srrm::cross_validate: {} training pixels; using {} folds", n_train, n_train);
        folds = n_train;
    }
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(base.seed, {stream::kFolds});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> held(folds), fit(folds);
    for (std::size_t p = 0; p < n_train; ++p) {
        for (std::size_t f = 0; f < folds; ++f) (p % folds == f ? held[f] : fit[f]).push_back(order[p]);
    }
    for (std::size_t f = 0; f < folds; ++f) {
        std::sort(held[f].begin(), held[f].end());
        std::sort(fit[f].begin(), fit[f].end());
    }

    std::vector<itclust::ClusterParams> params;
    for (int k : grid.k_values) {
        for (double psi : grid.psi_values) {
            SrrmParams p = base;
            p.k = k;
            p.psi = psi;
            params.push_back(p.cluster_params());
        }
    }
    run.memberships = cluster_all(X, params);

    bool have_best = false;
    CvEntry best{};
    std::size_t idx = 0;
    for (int k : grid.k_values) {
        for (double psi : grid.psi_values) {
            const itclust::MembershipMatrix& M = run.memberships[idx++];
            std::vector<double> total(grid.mu_values.size(), std::numeric_limits<double>::infinity());
            if (M.n() > 0) {
                const Eigen::MatrixXd m = M.m();
                const std::vector<int> labels = M.hard_labels();
                std::fill(total.begin(), total.end(), 0.0);
                for (std::size_t f = 0; f < folds; ++f) {
                    const auto e = fold_errors(m, labels, run.regression, run.train, fit[f], held[f], grid.mu_values);
                    for (std::size_t u = 0; u < e.size(); ++u) total[u] += e[u] / static_cast<double>(held[f].size());
                }
            }
            for (std::size_t u = 0; u < grid.mu_values.size(); ++u) {
                const CvEntry entry{k, psi, grid.mu_values[u], total[u] / static_cast<double>(folds)};
                run.result.table.push_back(entry);
                if (!have_best || better(entry, best)) {
                    best = entry;
                    have_best = true;
                }
            }
        }
    }
    if (!std::isfinite(best.mae)) throw NumericError("srrm::cross_validate: every parameter setting failed");
    run.result.best = base;
    run.result.best.k = best.k;
    run.result.best.psi = best.psi;
    run.result.best.mu = best.mu;
    run.result.mae = best.mae;
    return run;
}

}  // namespace

CvResult cross_validate(const synth::Scene& scene, const SearchGrid& grid, const SrrmParams& base) {
    return run_cv(scene, grid, base).result;
}

DayOutcome run_day(const synth::Scene& scene, const SearchGrid& grid, const SrrmParams& base) {
    DayOutcome out;
    out.day = scene.day;
    CvRun cv = run_cv(scene, grid, base);
    const auto ki = std::find(grid.k_values.begin(), grid.k_values.end(), cv.result.best.k) - grid.k_values.begin();
    const auto pi = std::find(grid.psi_values.begin(), grid.psi_values.end(), cv.result.best.psi) - grid.psi_values.begin();
    const auto idx = static_cast<std::size_t>(ki) * grid.psi_values.size() + static_cast<std::size_t>(pi);
    DayFit fit = finish_day(scene, cv.regression, cv.train, std::move(cv.memberships[idx]), cv.result.best.mu);
    out.ok = true;
    out.sm = std::move(fit.sm);
    out.params = cv.result.best;
    out.cv_mae = cv.result.mae;
    return out;
}

std::uint64_t day_seed(std::uint64_t seed, int day) {
    return derive_seed(seed, {static_cast<std::uint64_t>(day)});
}

std::vector<DayOutcome> run_season(std::span<const synth::Scene> scenes, const SearchGrid& grid,
                                   const SrrmParams& base, int jobs) {
    std::vector<DayOutcome> out(scenes.size());
    parallel_for(scenes.size(), jobs, [&](std::size_t i) {
        const synth::Scene& scene = scenes[i];
        SrrmParams p = base;
        p.seed = day_seed(base.seed, scene.day);
        try {
            out[i] = run_day(scene, grid, p);
        } catch (const Error& e) {
            spdlog::error("srrm: day {} failed: {}", scene.day, e.what());
            out[i].day = scene.day;
            out[i].ok = false;
            out[i].error = e.what();
        }
    });
    return out;
}

std::vector<double> iteration_trace(const synth::Scene& scene, const SrrmParams& params) {
    params.validate();
    const itclust::FeatureMatrix X = build_features(scene);
    const Eigen::MatrixXd R = regression_features(scene);
    const TrainingSet train = training_set(scene, params.train_fraction);
    std::vector<double> trace;
    itclust::cluster(X, params.cluster_params(), [&](int, const itclust::MembershipMatrix& M) {
        const DayFit fit = finish_day(scene, R, train, M, params.mu);
        trace.push_back(metrics::rmse(fit.sm, scene.true_sm));
    });
    return trace;
}

}  // namespace disagg::srrm
