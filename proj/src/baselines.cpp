#include "matchsyn/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace matchsyn {

namespace {

constexpr double kRidgeJitter = 1e-9;

// Gaussian elimination with partial pivoting on an n x n system.
std::vector<double> solve_linear_system(std::vector<std::vector<double>> a,
                                        std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-300)
            throw std::runtime_error("fit_linear: singular normal equations");
        std::swap(a[col], a[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t row = n; row-- > 0;) {
        double acc = rhs[row];
        for (std::size_t c = row + 1; c < n; ++c) acc -= a[row][c] * x[c];
        x[row] = acc / a[row][row];
    }
    return x;
}

}  // namespace

LinearModel fit_linear(const Dataset& d) {
    if (!d.split_info)
        throw std::invalid_argument("fit_linear: dataset has no train/test split");
    const auto train = d.train_indices();
    if (train.size() < 5)
        throw std::invalid_argument("fit_linear: need at least 5 training rows");

    // Design matrix [x_norm, 1]; G = A^T A, c_j = A^T y_j.
    constexpr std::size_t kAug = 5;
    std::vector<std::vector<double>> gram(kAug, std::vector<double>(kAug, 0.0));
    std::vector<std::array<double, kAug>> rhs(6, std::array<double, kAug>{});

    for (std::size_t idx : train) {
        const auto xn = normalize_input(d.rows[idx].x, d.norm_stats);
        const double a[kAug] = {xn[0], xn[1], xn[2], xn[3], 1.0};
        const Geometry& y = d.rows[idx].y;
        const double t[6] = {y.w_oa, y.w_ob, y.r0, y.r1, y.x_gnd, y.l_f};
        for (std::size_t r = 0; r < kAug; ++r) {
            for (std::size_t c = 0; c < kAug; ++c) gram[r][c] += a[r] * a[c];
            for (std::size_t j = 0; j < 6; ++j) rhs[j][r] += a[r] * t[j];
        }
    }
    for (std::size_t r = 0; r < kAug; ++r) gram[r][r] += kRidgeJitter;

    LinearModel m;
    m.w = Matrix(6, 4);
    m.b.assign(6, 0.0);
    m.input_stats = d.norm_stats;
    for (std::size_t j = 0; j < 6; ++j) {
        const auto coef = solve_linear_system(
            gram, std::vector<double>(rhs[j].begin(), rhs[j].end()));
        for (std::size_t c = 0; c < 4; ++c) m.w(j, c) = coef[c];
        m.b[j] = coef[4];
    }
    return m;
}

Matrix linear_predict(const LinearModel& m, const Matrix& x_norm) {
    Matrix out;
    affine_forward(x_norm, m.w, m.b, out);
    return out;
}

Geometry linear_predict_geometry(const LinearModel& m, const Performance& x) {
    const auto v = normalize_input(x, m.input_stats);
    Matrix row(1, 4);
    for (int j = 0; j < 4; ++j) row(0, j) = v[j];
    const Matrix y = linear_predict(m, row);
    return Geometry{y(0, 0), y(0, 1), y(0, 2), y(0, 3), y(0, 4), y(0, 5)};
}

EvalMetrics evaluate_linear(const LinearModel& m, const Dataset& d) {
    if (!d.split_info)
        throw std::invalid_argument("evaluate_linear: dataset has no split");
    const auto dm = build_matrices(d, d.test_indices(), m.input_stats);
    const Matrix y_hat = linear_predict(m, dm.x);
    EvalMetrics ev;
    ev.smse = smse(y_hat, dm.y);
    ev.sdmse = sdmse(y_hat, dm.y);
    ev.r2 = r_squared(y_hat, dm.y);
    return ev;
}

TrainResult train_naive(const Dataset& d, const ModelConfig& mc, TrainConfig tc) {
    tc.lambda = 0.0;
    return train(d, mc, tc);
}

}  // namespace matchsyn
