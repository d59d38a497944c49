#pragma once

// Hand-rolled generators shared by the unit and acceptance tests.

#include "disagg/grid.hpp"
#include "disagg/rng.hpp"
#include "disagg/synth.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace disagg::testing {

inline Eigen::MatrixXd random_points(Rng& rng, Eigen::Index n, Eigen::Index d, double scale = 1.0) {
    std::normal_distribution<double> N(0.0, scale);
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = N(rng);
    return X;
}

/// Rows on the simplex, bounded away from zero so logs stay tame.
inline Eigen::MatrixXd random_memberships(Rng& rng, Eigen::Index n, Eigen::Index k, double floor = 0.05) {
    std::uniform_real_distribution<double> U(floor, 1.0);
    Eigen::MatrixXd m(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < k; ++c) m(i, c) = U(rng);
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

inline Grid random_grid(Rng& rng, std::size_t rows, std::size_t cols, Variable var = Variable::LST,
                        double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    Grid g(rows, cols, 1000.0, var);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = U(rng);
    return g;
}

inline double correlation(const Grid& a, const Grid& b) {
    const auto n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// A hand-built scene on an n x n fine grid (factor-10 coarse) whose true SM
/// is `sm(lst)` exactly. Features other than LST are constant.
template <class F>
synth::Scene linear_scene(std::size_t n, F sm, std::uint64_t seed, double insitu_frac = 0.33) {
    Rng rng = make_rng(seed);
    synth::Scene s;
    s.day = 200;
    s.lst = random_grid(rng, n, n, Variable::LST, 290.0, 310.0);
    s.ppt = Grid(n, n, 1000.0, Variable::PPT, 2.0);
    s.lai = Grid(n, n, 1000.0, Variable::LAI, 1.0);
    s.lc = Grid(n, n, 1000.0, Variable::LC, 1.0);
    s.true_sm = Grid(n, n, 1000.0, Variable::SM);
    for (std::size_t i = 0; i < s.true_sm.size(); ++i) s.true_sm[i] = sm(s.lst[i]);
    s.coarse_sm = aggregate(s.true_sm, 10);
    s.coarse_sm_clean = s.coarse_sm;
    std::vector<std::size_t> idx(s.true_sm.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(std::lround(insitu_frac * static_cast<double>(idx.size()))));
    std::sort(idx.begin(), idx.end());
    for (auto p : idx) s.insitu.push_back({p, s.true_sm[p]});
    return s;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("disagg_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace disagg::testing
