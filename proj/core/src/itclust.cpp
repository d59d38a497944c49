#include "disagg/itclust.hpp"

#include "disagg/errors.hpp"
#include "disagg/rng.hpp"

#include <algorithm>
#if defined(__SSE2__)
#include <xmmintrin.h>
#endif
#include <cmath>
#include <numeric>
#include <string>

namespace disagg::itclust {

MembershipMatrix::MembershipMatrix(Eigen::MatrixXd v) : v_(std::move(v)) {
    if (v_.cols() < 1) throw DomainError("membership matrix needs K >= 1");
    for (Eigen::Index i = 0; i < v_.rows(); ++i) {
        if (std::abs(v_.row(i).squaredNorm() - 1.0) > 1e-9) {
            throw DomainError("membership row " + std::to_string(i) + " is not unit norm");
        }
    }
}

MembershipMatrix MembershipMatrix::from_memberships(const Eigen::MatrixXd& m) {
    if ((m.array() < 0.0).any()) throw DomainError("memberships must be non-negative");
    return MembershipMatrix(m.array().sqrt().matrix());
}

void MembershipMatrix::set_row(Eigen::Index i, const Eigen::VectorXd& v_row) {
    v_.row(i) = v_row.transpose();
}

std::vector<int> MembershipMatrix::hard_labels() const {
    std::vector<int> labels(static_cast<std::size_t>(n()));
    for (Eigen::Index i = 0; i < n(); ++i) {
        Eigen::Index best = 0;
        double best_m = m(i, 0);
        for (Eigen::Index k = 1; k < this->k(); ++k) {
            if (m(i, k) > best_m) {
                best_m = m(i, k);
                best = k;
            }
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

double MembershipMatrix::max_simplex_error() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n(); ++i) worst = std::max(worst, std::abs(v_.row(i).squaredNorm() - 1.0));
    return worst;
}

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian_kernel: sigma must be positive");
    if (x.size() != y.size()) throw DimensionError("gaussian_kernel: dimension mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
    }
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

namespace {

// Squared distances between rows of A and rows of B.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = B.rowwise().squaredNorm();
    Eigen::MatrixXd D = -2.0 * (A * B.transpose());
    D.colwise() += a2;
    D.rowwise() += b2.transpose();
    return D.cwiseMax(0.0);
}

Eigen::MatrixXd kernel_from_distances(const Eigen::MatrixXd& D2, double sigma) {
    return (D2.array() * (-1.0 / (2.0 * sigma * sigma))).exp().matrix();
}

double entropy_gradient(double m, double psi) {
    return -psi * (1.0 + std::log(std::max(m, kLogFloor)));
}

}  // namespace

Eigen::MatrixXd gram_matrix(const FeatureMatrix& X, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gram_matrix: sigma must be positive");
    Eigen::MatrixXd G = kernel_from_distances(squared_distances(X, X), sigma);
    G.diagonal().setOnes();
    return G;
}

CsTerms cs_terms(const Eigen::MatrixXd& m, const Eigen::MatrixXd& G) {
    if (G.rows() != m.rows() || G.cols() != m.rows()) throw DimensionError("cs_terms: Gram/membership mismatch");
    const Eigen::MatrixXd P = G * m;
    CsTerms t;
    t.u = 0.5 * (G.sum() - m.cwiseProduct(P).sum());
    t.vk = m.cwiseProduct(P).colwise().sum().transpose();
    if ((t.vk.array() <= 0.0).any()) throw DegenerateError("degenerate cluster: zero kernel mass");
    t.v = std::exp(0.5 * t.vk.array().log().sum());
    return t;
}

double jcs_estimate(const Eigen::MatrixXd& m, const Eigen::MatrixXd& G, double psi) {
    const CsTerms t = cs_terms(m, G);
    double ent = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double x = m.data()[i];
        if (x > 0.0) ent += x * std::log(x);
    }
    return t.u / t.v - psi * ent;
}

double jcs_estimate(const MembershipMatrix& M, const Eigen::MatrixXd& G, double psi) {
    return jcs_estimate(M.m(), G, psi);
}

Eigen::MatrixXd jcs_gradient(const Eigen::MatrixXd& m, const Eigen::MatrixXd& G, double psi) {
    const CsTerms t = cs_terms(m, G);
    const Eigen::MatrixXd P = G * m;
    Eigen::MatrixXd grad(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            // (V dU - U dV) / V^2 with dU = -P_ik and dV = V P_ik / v_k
            grad(i, k) = -P(i, k) / t.v * (1.0 + t.u / t.vk(k)) + entropy_gradient(m(i, k), psi);
        }
    }
    return grad;
}

Eigen::MatrixXd jcs_gradient(const MembershipMatrix& M, const Eigen::MatrixXd& G, double psi) {
    return jcs_gradient(M.m(), G, psi);
}

RowUpdate update_membership_row(const Eigen::VectorXd& v, const Eigen::VectorXd& grad_v) {
    if (v.size() != grad_v.size()) throw DimensionError("update_membership_row: size mismatch");
    const double lambda = 0.5 * grad_v.norm();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) return {v, true};
    return {-grad_v / (2.0 * lambda), false};
}

double silverman_sigma(const FeatureMatrix& X) {
    const auto n = X.rows();
    const auto d = X.cols();
    if (n < 2) throw DomainError("silverman_sigma: need at least two samples");
    if (d < 1) throw DomainError("silverman_sigma: need at least one feature");
    const Eigen::RowVectorXd mu = X.colwise().mean();
    const double trace = (X.rowwise() - mu).array().square().sum() / static_cast<double>(n - 1);
    const double var = trace / static_cast<double>(d);
    if (!(var > 0.0)) throw DegenerateError("silverman_sigma: zero variance");
    const double dd = static_cast<double>(d);
    return std::sqrt(var) * std::pow(4.0 / (static_cast<double>(n) * (2.0 * dd + 1.0)), 1.0 / (dd + 4.0));
}

std::vector<double> anneal_schedule(double sigma_sil, int n_iters) {
    if (n_iters < 1) throw DomainError("anneal_schedule: n_iters must be >= 1");
    if (!(sigma_sil > 0.0)) throw DomainError("anneal_schedule: sigma must be positive");
    std::vector<double> s(static_cast<std::size_t>(n_iters), sigma_sil);
    if (n_iters == 1) return s;
    const double rate = 3.0 * sigma_sil / (4.0 * static_cast<double>(n_iters - 1));
    for (int t = 1; t < n_iters - 1; ++t) s[static_cast<std::size_t>(t)] = sigma_sil - rate * t;
    s.back() = sigma_sil / 4.0;
    return s;
}

void ClusterParams::validate(Eigen::Index n) const {
    if (k < 1) throw DomainError("cluster: K must be >= 1");
    if (k > n) throw DomainError("cluster: K exceeds the number of samples");
    if (!(psi >= 0.0)) throw DomainError("cluster: psi must be >= 0");
    if (iterations < 1) throw DomainError("cluster: iterations must be >= 1");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) throw DomainError("cluster: sample_fraction in (0,1]");
    if (!(alpha >= 0.0)) throw DomainError("cluster: alpha must be >= 0");
    if (!(gamma > 0.0)) throw DomainError("cluster: gamma must be > 0");
    if (sigma_override && !(*sigma_override > 0.0)) throw DomainError("cluster: sigma override must be > 0");
}

namespace {

// Subnormal kernel values and memberships slow the products down by an order
// of magnitude; treat them as zero while clustering.
class FlushDenormals {
public:
#if defined(__SSE2__)
    FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
    ~FlushDenormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

Eigen::MatrixXd initial_v(Eigen::Index n, int k, double gamma, std::uint64_t seed, int restart) {
    Rng rng = make_rng(seed, {stream::kClusterInit, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(restart)});
    std::normal_distribution<double> normal(0.0, gamma);
    Eigen::MatrixXd v(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) v(i, j) = std::abs(normal(rng));
        const double norm = v.row(i).norm();
        if (norm > 0.0) {
            v.row(i) /= norm;
        } else {
            v.row(i).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
        }
    }
    return v;
}

struct RunState {
    ClusterParams params;
    Eigen::MatrixXd v;
    bool failed = false;
};

// One lockstep pass. All states share seed/iterations/fraction/schedule.
void run_lockstep(const FeatureMatrix& X, std::vector<RunState>& states, int restart,
                  const IterationObserver& observe) {
    const FlushDenormals ftz;
    const ClusterParams& shared = states.front().params;
    const Eigen::Index n = X.rows();
    const auto m_rows = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(shared.sample_fraction * static_cast<double>(n))), 1, n);
    const std::vector<double> sigmas = shared.sigma_override
                                           ? std::vector<double>(static_cast<std::size_t>(shared.iterations),
                                                                 *shared.sigma_override)
                                           : anneal_schedule(silverman_sigma(X), shared.iterations);

    for (auto& s : states) s.v = initial_v(n, s.params.k, s.params.gamma, s.params.seed, restart);

    Rng sampler = make_rng(shared.seed, {stream::kClusterSample, static_cast<std::uint64_t>(restart)});
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::VectorXd x2 = X.rowwise().squaredNorm();
    const double scale = static_cast<double>(n) / static_cast<double>(m_rows);

    for (int it = 0; it < shared.iterations; ++it) {
        std::vector<Eigen::Index> rows;
        if (m_rows == n) {
            rows = order;
        } else {
            // partial Fisher-Yates: first m_rows entries are a uniform sample
            for (Eigen::Index j = 0; j < m_rows; ++j) {
                std::uniform_int_distribution<Eigen::Index> pick(j, n - 1);
                std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick(sampler))]);
            }
            rows.assign(order.begin(), order.begin() + m_rows);
            std::sort(rows.begin(), rows.end());
        }

        // Kernel columns for the sampled points, N x M.
        Eigen::MatrixXd Xs(m_rows, X.cols());
        Eigen::RowVectorXd xs2(m_rows);
        for (Eigen::Index r = 0; r < m_rows; ++r) {
            const Eigen::Index i = rows[static_cast<std::size_t>(r)];
            Xs.row(r) = X.row(i);
            xs2(r) = x2(i);
        }
        const double sigma = sigmas[static_cast<std::size_t>(it)];
        Eigen::MatrixXd Gt = -2.0 * (X * Xs.transpose());
        Gt.colwise() += x2;
        Gt.rowwise() += xs2;
        Gt = (Gt.array().max(0.0) * (-1.0 / (2.0 * sigma * sigma))).exp().matrix();
        for (Eigen::Index r = 0; r < m_rows; ++r) Gt(rows[static_cast<std::size_t>(r)], r) = 1.0;
        const double gsum = Gt.sum();

        // Kernel sums P_ik ~ sum_j m_jk G_ij for every live state in one product.
        const bool columns = shared.subsample == Subsample::Columns;
        std::vector<Eigen::MatrixXd> ms(states.size());
        Eigen::Index width = 0;
        for (std::size_t si = 0; si < states.size(); ++si) {
            if (states[si].failed) continue;
            ms[si] = states[si].v.array().square().matrix();
            width += states[si].params.k;
        }
        Eigen::MatrixXd stacked(columns ? m_rows : n, width);
        for (std::size_t si = 0, c = 0; si < states.size(); ++si) {
            if (states[si].failed) continue;
            const auto k = static_cast<Eigen::Index>(states[si].params.k);
            if (columns) {
                for (Eigen::Index r = 0; r < m_rows; ++r)
                    stacked.block(r, static_cast<Eigen::Index>(c), 1, k) = ms[si].row(rows[static_cast<std::size_t>(r)]);
            } else {
                stacked.middleCols(static_cast<Eigen::Index>(c), k) = ms[si];
            }
            c += static_cast<std::size_t>(k);
        }
        Eigen::MatrixXd all_p;
        if (columns) {
            all_p.noalias() = Gt * stacked;  // N x sum K
            all_p *= scale;
        } else {
            all_p.noalias() = Gt.transpose() * stacked;  // M x sum K, exact sums for the sampled rows
        }

        Eigen::Index offset = 0;
        for (std::size_t si = 0; si < states.size(); ++si) {
            auto& s = states[si];
            if (s.failed) continue;
            const int k_count = s.params.k;
            const Eigen::MatrixXd& m = ms[si];
            Eigen::MatrixXd m_sampled(m_rows, k_count);
            for (Eigen::Index r = 0; r < m_rows; ++r) m_sampled.row(r) = m.row(rows[static_cast<std::size_t>(r)]);
            const Eigen::MatrixXd P = all_p.middleCols(offset, k_count);
            offset += k_count;

            // U and v_k from the sampled kernel entries, scaled by N/M.
            double u = 0.0;
            Eigen::VectorXd vk;
            if (columns) {
                u = 0.5 * (scale * gsum - m.cwiseProduct(P).sum());
                vk = m.cwiseProduct(P).colwise().sum().transpose();
            } else {
                u = 0.5 * scale * (gsum - m_sampled.cwiseProduct(P).sum());
                vk = scale * m_sampled.cwiseProduct(P).colwise().sum().transpose();
            }
            if ((vk.array() <= 0.0).any() || !vk.allFinite()) {
                s.failed = true;
                continue;
            }
            const double inv_v = std::exp(-0.5 * vk.array().log().sum());

            Eigen::MatrixXd next = s.v;
            Eigen::VectorXd g(k_count);
            const bool all_rows = columns;
            const Eigen::Index n_updates = all_rows ? n : m_rows;
            for (Eigen::Index r = 0; r < n_updates; ++r) {
                const Eigen::Index i = all_rows ? r : rows[static_cast<std::size_t>(r)];
                double norm2 = 0.0;
                for (Eigen::Index k = 0; k < k_count; ++k) {
                    const double dj_dm = -P(r, k) * inv_v * (1.0 + u / vk(k)) + entropy_gradient(m(i, k), s.params.psi);
                    // chain rule through m = v^2; alpha keeps the scaling away from zero
                    g(k) = 2.0 * std::sqrt(m(i, k) + s.params.alpha) * dj_dm;
                    norm2 += g(k) * g(k);
                }
                // Same step as update_membership_row, without the temporaries.
                const double lambda = 0.5 * std::sqrt(norm2);
                if (lambda > 0.0 && std::isfinite(lambda)) {
                    for (Eigen::Index k = 0; k < k_count; ++k) next(i, k) = -g(k) / (2.0 * lambda);
                }
            }
            s.v = std::move(next);
            if (!s.v.allFinite()) s.failed = true;
        }
        if (observe && !states.front().failed) observe(it, MembershipMatrix(states.front().v));
    }
}

}  // namespace

std::vector<MembershipMatrix> cluster_batch(const FeatureMatrix& X, std::span<const ClusterParams> params) {
    if (params.empty()) return {};
    if (!X.allFinite()) throw DomainError("cluster: features contain NaN or Inf");
    const ClusterParams& first = params.front();
    for (const auto& p : params) {
        p.validate(X.rows());
        if (p.seed != first.seed || p.iterations != first.iterations || p.sample_fraction != first.sample_fraction ||
            p.sigma_override != first.sigma_override || p.subsample != first.subsample) {
            throw DomainError("cluster_batch: parameter sets must share seed, iterations, sampling and sigma");
        }
    }

    std::vector<RunState> states;
    states.reserve(params.size());
    for (const auto& p : params) states.push_back({p, {}, false});
    run_lockstep(X, states, 0, {});

    std::vector<MembershipMatrix> out;
    out.reserve(states.size());
    for (auto& s : states) {
        int restart = 0;
        while (s.failed) {
            if (++restart > s.params.max_restarts) {
                throw DegenerateError("cluster: degenerate cluster collapse after " +
                                      std::to_string(s.params.max_restarts) + " restarts (K=" +
                                      std::to_string(s.params.k) + ")");
            }
            std::vector<RunState> single{{s.params, {}, false}};
            run_lockstep(X, single, restart, {});
            s = std::move(single.front());
        }
        out.emplace_back(std::move(s.v));
    }
    return out;
}

MembershipMatrix cluster(const FeatureMatrix& X, const ClusterParams& params, const IterationObserver& observe) {
    if (!observe) return std::move(cluster_batch(X, std::span(&params, 1)).front());
    params.validate(X.rows());
    if (!X.allFinite()) throw DomainError("cluster: features contain NaN or Inf");
    for (int restart = 0; restart <= params.max_restarts; ++restart) {
        std::vector<RunState> single{{params, {}, false}};
        run_lockstep(X, single, restart, observe);
        if (!single.front().failed) return MembershipMatrix(std::move(single.front().v));
    }
    throw DegenerateError("cluster: degenerate cluster collapse after " + std::to_string(params.max_restarts) +
                          " restarts");
}

}  // namespace disagg::itclust
