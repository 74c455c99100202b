#pragma once

#include <cstddef>
#include <vector>

namespace matchsyn {

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

// pre = x * W^T + b, with x (batch x in), w (out x in), b (out).
// Each output element is a dot product of two contiguous rows; rows of
// `pre` are computed independently, so parallel execution is bitwise
// identical to serial.
void affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    Matrix& pre);

// dw = dpre^T * x, accumulated per output row.
void grad_weights(const Matrix& dpre, const Matrix& x, Matrix& dw);

// db[o] = sum_r dpre(r, o).
void grad_bias(const Matrix& dpre, std::vector<double>& db);

// dx = dpre * w.
void grad_input(const Matrix& dpre, const Matrix& w, Matrix& dx);

// Global cap on worker threads used by the parallel kernels and the
// dataset generator. 0 restores the OpenMP default. Results never
// depend on this setting.
void set_max_threads(int n);
int max_threads();

}  // namespace matchsyn
