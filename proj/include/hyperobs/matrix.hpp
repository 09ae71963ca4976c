#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

/// Dense row-major matrix/vector algebra for small (side <= ~16) problems.
/// Everything is value-semantic and immutable-friendly; operations are pure
/// and throw std::invalid_argument on dimension mismatches.
namespace hyperobs {

using Vec = std::vector<double>;

/// Dense real matrix, row-major storage.
class Mat {
public:
    Mat() = default;

    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Mat(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw std::invalid_argument("Mat: ragged initializer rows");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Diagonal matrix from a vector of diagonal entries.
    static Mat diag(const Vec& d) {
        Mat m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    bool operator==(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace detail

// ---- vector operations ----------------------------------------------------

inline Vec operator+(const Vec& a, const Vec& b) {
    detail::require(a.size() == b.size(), "vector add: size mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    detail::require(a.size() == b.size(), "vector sub: size mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double s, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline double dot(const Vec& a, const Vec& b) {
    detail::require(a.size() == b.size(), "dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Euclidean norm.
inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double max_abs(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

// ---- matrix operations ----------------------------------------------------

inline Mat operator+(const Mat& a, const Mat& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix add: shape mismatch");
    Mat r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
    return r;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix sub: shape mismatch");
    Mat r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) - b(i, j);
    return r;
}

inline Mat operator*(double s, const Mat& a) {
    Mat r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = s * a(i, j);
    return r;
}

inline Mat operator*(const Mat& a, const Mat& b) {
    detail::require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
    Mat r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    }
    return r;
}

inline Vec operator*(const Mat& a, const Vec& x) {
    detail::require(a.cols() == x.size(), "matvec: dimension mismatch");
    Vec r(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r[i] += a(i, j) * x[j];
    return r;
}

inline Mat transpose(const Mat& a) {
    Mat r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(j, i) = a(i, j);
    return r;
}

/// Outer product a b^T.
inline Mat outer(const Vec& a, const Vec& b) {
    Mat r(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r(i, j) = a[i] * b[j];
    return r;
}

/// Symmetric part (A + A^T) / 2.
inline Mat sym_part(const Mat& a) {
    detail::require(a.rows() == a.cols(), "sym_part: matrix not square");
    Mat r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = 0.5 * (a(i, j) + a(j, i));
    return r;
}

inline double frobenius_norm(const Mat& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

inline double max_abs(const Mat& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

/// Copies src into dst with its top-left corner at (r0, c0).
inline void set_block(Mat& dst, std::size_t r0, std::size_t c0, const Mat& src) {
    detail::require(r0 + src.rows() <= dst.rows() && c0 + src.cols() <= dst.cols(),
                    "set_block: block exceeds destination bounds");
    for (std::size_t i = 0; i < src.rows(); ++i)
        for (std::size_t j = 0; j < src.cols(); ++j) dst(r0 + i, c0 + j) = src(i, j);
}

/// Extracts column j as a vector.
inline Vec column(const Mat& a, std::size_t j) {
    detail::require(j < a.cols(), "column: index out of range");
    Vec r(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) r[i] = a(i, j);
    return r;
}

// ---- SymMatrix -------------------------------------------------------------

/// Symmetric matrix, validated at construction: the input is symmetrized as
/// (S + S^T)/2 and rejected if the correction exceeds 1e-12 relative to the
/// Frobenius norm, so downstream code never has to branch on asymmetry.
class SymMatrix {
public:
    explicit SymMatrix(const Mat& m) {
        detail::require(m.rows() == m.cols(), "SymMatrix: matrix not square");
        detail::require(m.rows() >= 1, "SymMatrix: dimension must be >= 1");
        const double scale = std::max(1.0, frobenius_norm(m));
        double asym = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                const double d = m(i, j) - m(j, i);
                asym += d * d;
            }
        if (std::sqrt(asym) > 1e-12 * scale) {
            throw std::invalid_argument("SymMatrix: asymmetry exceeds 1e-12 relative tolerance");
        }
        full_ = sym_part(m);
    }

    std::size_t n() const { return full_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return full_(i, j); }
    const Mat& full() const { return full_; }

private:
    Mat full_;
};

}  // namespace hyperobs
