#pragma once

#include "matchsyn/linalg.hpp"

namespace matchsyn {

enum class LossKind { smse, sdmse };

struct RiskConfig {
    LossKind kind = LossKind::smse;
    double lambda = 0.5;
};

// Scaled mean squared error: (1/(n*k)) * sqrt(sum of squared relative
// errors). The 1/(n*k) factor sits outside the square root, so the
// value depends on n; comparisons are only meaningful at equal n.
double smse(const Matrix& pred, const Matrix& target);

// Scaled dimensional MSE: per-coordinate root mean squared relative
// error, averaged over coordinates.
double sdmse(const Matrix& pred, const Matrix& target);

// Exact gradients of the two losses with respect to pred.
Matrix smse_gradient(const Matrix& pred, const Matrix& target);
Matrix sdmse_gradient(const Matrix& pred, const Matrix& target);

double loss_value(LossKind kind, const Matrix& pred, const Matrix& target);
Matrix loss_gradient(LossKind kind, const Matrix& pred, const Matrix& target);

struct RiskResult {
    double loss = 0.0;
    Matrix d_z_hat;
    Matrix d_y_hat;
};

// Empirical risk L = Phi(y_hat, y) + lambda * Phi(z_hat, z) and its
// analytic gradients with respect to both prediction matrices.
RiskResult combined_risk(const Matrix& z_hat, const Matrix& z, const Matrix& y_hat,
                         const Matrix& y, const RiskConfig& cfg);

// Coefficient of determination pooled over all coordinates.
double r_squared(const Matrix& pred, const Matrix& target);

}  // namespace matchsyn
