#include "disagg/kridge.hpp"

#include "disagg/errors.hpp"
#include "disagg/itclust.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace disagg::kridge {

namespace {

struct Standardized {
    Eigen::MatrixXd x;  // augmented
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;
    Eigen::VectorXd y;
    double y_mean = 0.0;
    double y_scale = 1.0;
};

double spread(const Eigen::Ref<const Eigen::VectorXd>& c, double mean) {
    const double var = (c.array() - mean).square().mean();
    return var > 0.0 ? std::sqrt(var) : 1.0;
}

Eigen::MatrixXd standardize_inputs(const Eigen::MatrixXd& X, Eigen::RowVectorXd& mean, Eigen::RowVectorXd& scale) {
    mean = X.colwise().mean();
    scale.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) scale(j) = spread(X.col(j), mean(j));
    return ((X.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Standardized prepare(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() < 1) throw DomainError("kridge::fit: need at least one training row");
    if (X.rows() != y.size()) throw DimensionError("kridge::fit: X rows and y length differ");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("kridge::fit: NaN or Inf in training data");
    Standardized s;
    const Eigen::MatrixXd z = standardize_inputs(X, s.mean, s.scale);
    s.x.resize(z.rows(), z.cols() + 1);
    s.x.leftCols(z.cols()) = z;
    s.x.col(z.cols()).setOnes();
    s.y_mean = y.mean();
    s.y_scale = spread(y, s.y_mean);
    s.y = (y.array() - s.y_mean) / s.y_scale;
    return s;
}

double sigma_for(const Eigen::MatrixXd& augmented) {
    const Eigen::MatrixXd raw = augmented.leftCols(augmented.cols() - 1);
    if (raw.rows() < 2 || raw.cols() < 1) return 1.0;
    try {
        return itclust::silverman_sigma(raw);
    } catch (const DegenerateError&) {
        return 1.0;
    }
}

KernelModel solve(const Standardized& s, const Eigen::MatrixXd& gram, double mu, double sigma) {
    if (!(mu >= 0.0)) throw DomainError("kridge::fit: mu must be >= 0");
    const Eigen::Index n = gram.rows();
    Eigen::MatrixXd A = gram;
    A.diagonal().array() += mu;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
        const Eigen::VectorXd piv = Eigen::MatrixXd(llt.matrixL()).diagonal();
        const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * A.diagonal().maxCoeff();
        ok = (piv.array().square() > tol).all();
    }
    if (!ok) throw NumericError("kridge::fit: singular kernel system (duplicate rows?); use mu > 0");

    KernelModel m;
    m.weights = llt.solve(s.y);
    if (!m.weights.allFinite()) throw NumericError("kridge::fit: non-finite dual weights");
    m.x_train = s.x;
    m.sigma = sigma;
    m.mu = mu;
    m.feature_mean = s.mean;
    m.feature_scale = s.scale;
    m.target_mean = s.y_mean;
    m.target_scale = s.y_scale;
    return m;
}

Eigen::VectorXd augment(const KernelModel& model, std::span<const double> x) {
    if (static_cast<Eigen::Index>(x.size()) != model.input_dim()) {
        throw DimensionError("kridge::predict: expected " + std::to_string(model.input_dim()) + " features, got " +
                          std::to_string(x.size()));
    }
    Eigen::VectorXd z(model.input_dim() + 1);
    for (Eigen::Index j = 0; j < model.input_dim(); ++j) {
        z(j) = (x[static_cast<std::size_t>(j)] - model.feature_mean(j)) / model.feature_scale(j);
    }
    z(model.input_dim()) = 1.0;
    return z;
}

}  // namespace

double default_sigma(const Eigen::MatrixXd& X) {
    return sigma_for(prepare(X, Eigen::VectorXd::Zero(X.rows())).x);
}

KernelModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double mu, std::optional<double> sigma) {
    return std::move(fit_path(X, y, std::span(&mu, 1), sigma).front());
}

std::vector<KernelModel> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const double> mus,
                                  std::optional<double> sigma) {
    const Standardized s = prepare(X, y);
    const double width = sigma ? *sigma : sigma_for(s.x);
    if (!(width > 0.0)) throw DomainError("kridge::fit: sigma must be positive");
    const Eigen::MatrixXd gram = itclust::gram_matrix(s.x, width);
    std::vector<KernelModel> models;
    models.reserve(mus.size());
    for (double mu : mus) models.push_back(solve(s, gram, mu, width));
    return models;
}

double kernel_response(const KernelModel& model, std::span<const double> x) {
    const Eigen::VectorXd z = augment(model, x);
    const double inv = -1.0 / (2.0 * model.sigma * model.sigma);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < model.x_train.rows(); ++j) {
        acc += model.weights(j) * std::exp((model.x_train.row(j).transpose() - z).squaredNorm() * inv);
    }
    return acc;
}

double predict(const KernelModel& model, std::span<const double> x) {
    return model.target_mean + model.target_scale * kernel_response(model, x);
}

Eigen::VectorXd predict(const KernelModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.input_dim()) throw DimensionError("kridge::predict: feature count mismatch");
    Eigen::MatrixXd z(X.rows(), X.cols() + 1);
    z.leftCols(X.cols()) = ((X.rowwise() - model.feature_mean).array().rowwise() / model.feature_scale.array()).matrix();
    z.col(X.cols()).setOnes();

    const Eigen::VectorXd z2 = z.rowwise().squaredNorm();
    const Eigen::VectorXd t2 = model.x_train.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * (z * model.x_train.transpose());
    d2.colwise() += z2;
    d2.rowwise() += t2.transpose();
    const Eigen::MatrixXd k = (d2.cwiseMax(0.0).array() * (-1.0 / (2.0 * model.sigma * model.sigma))).exp().matrix();
    return ((k * model.weights).array() * model.target_scale + model.target_mean).matrix();
}

namespace {

std::string join(const double* data, Eigen::Index n) {
    std::string out;
    char buf[32];
    for (Eigen::Index i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", data[i]);
        if (i) out += ',';
        out += buf;
    }
    return out;
}

std::vector<double> split(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

}  // namespace

void write_model(std::ostream& os, const KernelModel& m) {
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xr = m.x_train;
    os << "[model]\n"
       << "rows=" << m.x_train.rows() << '\n'
       << "cols=" << m.x_train.cols() << '\n'
       << "sigma=" << num(m.sigma) << '\n'
       << "mu=" << num(m.mu) << '\n'
       << "target_mean=" << num(m.target_mean) << '\n'
       << "target_scale=" << num(m.target_scale) << '\n'
       << "feature_mean=" << join(m.feature_mean.data(), m.feature_mean.size()) << '\n'
       << "feature_scale=" << join(m.feature_scale.data(), m.feature_scale.size()) << '\n'
       << "weights=" << join(m.weights.data(), m.weights.size()) << '\n'
       << "x_train=" << join(xr.data(), xr.size()) << '\n';
}

KernelModel read_model(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw DataError(std::string("kernel model: ") + e.what());
    }
    try {
        const auto rows = tree.get<Eigen::Index>("model.rows");
        const auto cols = tree.get<Eigen::Index>("model.cols");
        KernelModel m;
        m.sigma = tree.get<double>("model.sigma");
        m.mu = tree.get<double>("model.mu");
        m.target_mean = tree.get<double>("model.target_mean");
        m.target_scale = tree.get<double>("model.target_scale");
        const auto fm = split(tree.get<std::string>("model.feature_mean"));
        const auto fs = split(tree.get<std::string>("model.feature_scale"));
        const auto w = split(tree.get<std::string>("model.weights"));
        const auto x = split(tree.get<std::string>("model.x_train"));
        if (static_cast<Eigen::Index>(w.size()) != rows || static_cast<Eigen::Index>(x.size()) != rows * cols ||
            static_cast<Eigen::Index>(fm.size()) != cols - 1 || fs.size() != fm.size()) {
            throw DataError("kernel model: inconsistent sizes");
        }
        m.feature_mean = Eigen::Map<const Eigen::RowVectorXd>(fm.data(), cols - 1);
        m.feature_scale = Eigen::Map<const Eigen::RowVectorXd>(fs.data(), cols - 1);
        m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), rows);
        m.x_train = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            x.data(), rows, cols);
        return m;
    } catch (const pt::ptree_error& e) {
        throw DataError(std::string("kernel model: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw DataError("kernel model: bad number");
    }
}

}  // namespace disagg::kridge
