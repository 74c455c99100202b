#include "matchsyn/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace matchsyn {

namespace {

constexpr double kTargetFloor = 1e-6;

void check_pair(const Matrix& pred, const Matrix& target, const char* who) {
    if (!pred.same_shape(target))
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
    if (pred.rows == 0 || pred.cols == 0)
        throw std::invalid_argument(std::string(who) + ": empty matrices");
    for (double t : target.data)
        if (!(std::fabs(t) >= kTargetFloor))
            throw std::domain_error(std::string(who) +
                                    ": target magnitude below 1e-6 floor");
}

double squared_relative_sum(const Matrix& pred, const Matrix& target) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double r = (target.data[i] - pred.data[i]) / target.data[i];
        s += r * r;
    }
    return s;
}

}  // namespace

double smse(const Matrix& pred, const Matrix& target) {
    check_pair(pred, target, "smse");
    const double nk = static_cast<double>(pred.rows) * static_cast<double>(pred.cols);
    return std::sqrt(squared_relative_sum(pred, target)) / nk;
}

double sdmse(const Matrix& pred, const Matrix& target) {
    check_pair(pred, target, "sdmse");
    const std::size_t n = pred.rows, k = pred.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (target(i, j) - pred(i, j)) / target(i, j);
            col += r * r;
        }
        acc += std::sqrt(col / static_cast<double>(n));
    }
    return acc / static_cast<double>(k);
}

Matrix smse_gradient(const Matrix& pred, const Matrix& target) {
    check_pair(pred, target, "smse_gradient");
    const double nk = static_cast<double>(pred.rows) * static_cast<double>(pred.cols);
    const double root = std::sqrt(squared_relative_sum(pred, target));
    Matrix g(pred.rows, pred.cols);
    if (root == 0.0) return g;  // exact fit: subgradient 0
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double t = target.data[i];
        const double r = (t - pred.data[i]) / t;
        g.data[i] = -r / (t * root * nk);
    }
    return g;
}

Matrix sdmse_gradient(const Matrix& pred, const Matrix& target) {
    check_pair(pred, target, "sdmse_gradient");
    const std::size_t n = pred.rows, k = pred.cols;
    Matrix g(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (target(i, j) - pred(i, j)) / target(i, j);
            col += r * r;
        }
        const double root = std::sqrt(col / static_cast<double>(n));
        if (root == 0.0) continue;
        const double scale = 1.0 / (static_cast<double>(k) * static_cast<double>(n) * root);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = target(i, j);
            const double r = (t - pred(i, j)) / t;
            g(i, j) = -scale * r / t;
        }
    }
    return g;
}

double loss_value(LossKind kind, const Matrix& pred, const Matrix& target) {
    return kind == LossKind::smse ? smse(pred, target) : sdmse(pred, target);
}

Matrix loss_gradient(LossKind kind, const Matrix& pred, const Matrix& target) {
    return kind == LossKind::smse ? smse_gradient(pred, target)
                                  : sdmse_gradient(pred, target);
}

RiskResult combined_risk(const Matrix& z_hat, const Matrix& z, const Matrix& y_hat,
                         const Matrix& y, const RiskConfig& cfg) {
    if (cfg.lambda < 0.0)
        throw std::invalid_argument("combined_risk: lambda must be nonnegative");
    RiskResult r;
    r.loss = loss_value(cfg.kind, y_hat, y);
    r.d_y_hat = loss_gradient(cfg.kind, y_hat, y);
    if (cfg.lambda == 0.0) {
        // Naive objective: the circuit head receives no learning signal.
        r.d_z_hat = Matrix(z_hat.rows, z_hat.cols);
        return r;
    }
    r.loss += cfg.lambda * loss_value(cfg.kind, z_hat, z);
    r.d_z_hat = loss_gradient(cfg.kind, z_hat, z);
    for (double& v : r.d_z_hat.data) v *= cfg.lambda;
    return r;
}

double r_squared(const Matrix& pred, const Matrix& target) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("r_squared: shape mismatch");
    if (target.rows < 2) throw std::invalid_argument("r_squared: need n >= 2");
    const std::size_t n = target.rows, k = target.cols;

    std::vector<double> col_mean(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) col_mean[j] += target(i, j);
    for (std::size_t j = 0; j < k; ++j) col_mean[j] /= static_cast<double>(n);

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double dr = target(i, j) - pred(i, j);
            const double dt = target(i, j) - col_mean[j];
            ss_res += dr * dr;
            ss_tot += dt * dt;
        }
    }
    if (!(ss_tot > 0.0))
        throw std::domain_error("r_squared: every target column is constant");
    return 1.0 - ss_res / ss_tot;
}

}  // namespace matchsyn
