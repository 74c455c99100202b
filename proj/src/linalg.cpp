#include "matchsyn/linalg.hpp"

#include <atomic>
#include <cstdint>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace matchsyn {

namespace {
std::atomic<int> g_max_threads{0};

int effective_threads() {
#ifdef _OPENMP
    const int cap = g_max_threads.load(std::memory_order_relaxed);
    return cap > 0 ? cap : omp_get_max_threads();
#else
    return 1;
#endif
}
}  // namespace

void set_max_threads(int n) { g_max_threads.store(n, std::memory_order_relaxed); }

int max_threads() { return effective_threads(); }

namespace {

// Dot product with 16 independent accumulators. The explicit
// reassociation breaks the FMA dependency chain so the compiler can
// vectorize it; the summation order is fixed, so results are
// reproducible run to run and thread count never matters.
double dot_unrolled(const double* a, const double* b, std::size_t n) {
    double acc[16] = {};
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16)
        for (int j = 0; j < 16; ++j) acc[j] += a[i + j] * b[i + j];
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    const double s0 = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    const double s1 = (acc[4] + acc[5]) + (acc[6] + acc[7]);
    const double s2 = (acc[8] + acc[9]) + (acc[10] + acc[11]);
    const double s3 = (acc[12] + acc[13]) + (acc[14] + acc[15]);
    return ((s0 + s1) + (s2 + s3)) + tail;
}

}  // namespace

void affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    Matrix& pre) {
    if (x.cols != w.cols || b.size() != w.rows)
        throw std::invalid_argument("affine_forward: shape mismatch");
    pre.rows = x.rows;
    pre.cols = w.rows;
    pre.data.assign(pre.rows * pre.cols, 0.0);
    const std::int64_t batch = static_cast<std::int64_t>(x.rows);
    const std::size_t in = x.cols;
    const std::size_t out = w.rows;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (std::int64_t r = 0; r < batch; ++r) {
        const double* xr = x.row(static_cast<std::size_t>(r));
        double* pr = pre.row(static_cast<std::size_t>(r));
        for (std::size_t o = 0; o < out; ++o)
            pr[o] = dot_unrolled(xr, w.row(o), in) + b[o];
    }
}

void grad_weights(const Matrix& dpre, const Matrix& x, Matrix& dw) {
    if (dpre.rows != x.rows)
        throw std::invalid_argument("grad_weights: batch mismatch");
    dw.rows = dpre.cols;
    dw.cols = x.cols;
    dw.data.assign(dw.rows * dw.cols, 0.0);
    const std::int64_t out = static_cast<std::int64_t>(dpre.cols);
    const std::size_t batch = dpre.rows;
    const std::size_t in = x.cols;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (std::int64_t o = 0; o < out; ++o) {
        double* dwo = dw.row(static_cast<std::size_t>(o));
        for (std::size_t r = 0; r < batch; ++r) {
            const double g = dpre(r, static_cast<std::size_t>(o));
            if (g == 0.0) continue;
            const double* xr = x.row(r);
            for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xr[i];
        }
    }
}

void grad_bias(const Matrix& dpre, std::vector<double>& db) {
    db.assign(dpre.cols, 0.0);
    for (std::size_t r = 0; r < dpre.rows; ++r) {
        const double* dr = dpre.row(r);
        for (std::size_t o = 0; o < dpre.cols; ++o) db[o] += dr[o];
    }
}

void grad_input(const Matrix& dpre, const Matrix& w, Matrix& dx) {
    if (dpre.cols != w.rows)
        throw std::invalid_argument("grad_input: shape mismatch");
    dx.rows = dpre.rows;
    dx.cols = w.cols;
    dx.data.assign(dx.rows * dx.cols, 0.0);
    const std::int64_t batch = static_cast<std::int64_t>(dpre.rows);
    const std::size_t out = w.rows;
    const std::size_t in = w.cols;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (std::int64_t r = 0; r < batch; ++r) {
        const double* dr = dpre.row(static_cast<std::size_t>(r));
        double* dxr = dx.row(static_cast<std::size_t>(r));
        for (std::size_t o = 0; o < out; ++o) {
            const double g = dr[o];
            if (g == 0.0) continue;
            const double* wo = w.row(o);
            for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
        }
    }
}

}  // namespace matchsyn
