#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace moeeco {

// Row-major dense matrix over double. Kept deliberately small: the kernels
// hand-roll their loops, this is just shape-carrying storage.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
    const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
    double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
    std::size_t size() const { return a.size(); }
};

using Vector = std::vector<double>;

// y = W x + b
inline void affine(const Matrix& W, const Vector& b, const double* x, double* y) {
    for (int r = 0; r < W.rows; ++r) {
        double acc = b[static_cast<std::size_t>(r)];
        const double* wr = W.row(r);
        for (int c = 0; c < W.cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

// dx += W^T dy
inline void add_transpose_times(const Matrix& W, const double* dy, double* dx) {
    for (int r = 0; r < W.rows; ++r) {
        const double* wr = W.row(r);
        const double g = dy[r];
        for (int c = 0; c < W.cols; ++c) dx[c] += wr[c] * g;
    }
}

// dW += dy x^T, db += dy  (accumulates into flat buffers shaped like W and b)
inline void add_outer(double* dW, double* db, const double* dy, const double* x, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const double g = dy[r];
        double* wr = dW + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) wr[c] += g * x[c];
        db[r] += g;
    }
}

inline void tanh_inplace(double* x, int n) {
    for (int i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
}

// Numerically stable softmax of z / T.
inline void softmax_temp(const double* z, int n, double temp, double* out) {
    double zmax = z[0];
    for (int i = 1; i < n; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp((z[i] - zmax) / temp);
        sum += out[i];
    }
    const double inv = 1.0 / sum;
    for (int i = 0; i < n; ++i) out[i] *= inv;
}

// log(sum_i exp(z_i / T)); pair with z/T to get log-probabilities exactly.
inline double log_sum_exp_temp(const double* z, int n, double temp) {
    double zmax = z[0];
    for (int i = 1; i < n; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp((z[i] - zmax) / temp);
    return zmax / temp + std::log(sum);
}

inline int argmax_lowest_tie(const double* x, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (x[i] > x[best]) best = i;
    return best;
}

inline bool all_finite(const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

}  // namespace moeeco
