#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "augopt/errors.hpp"

namespace augopt {

/// Dense row-major matrix of doubles. Small sizes only; every routine in the
/// library is written for n up to a few hundred. Entries are validated to be
/// finite whenever a matrix is built from external data.
class Matrix {
  public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_)
            throw InvalidMatrix("entry count does not match rows x cols");
        check_finite();
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const std::vector<double>& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        Matrix m(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) throw InvalidMatrix("ragged row list");
            std::size_t j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        m.check_finite();
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double trace() const {
        assert(rows_ == cols_);
        double s = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, i);
        return s;
    }

    double frobenius_norm() const { return std::sqrt(squared_norm()); }

    double squared_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }

    double max_abs() const {
        double s = 0.0;
        for (double v : data_) s = std::max(s, std::abs(v));
        return s;
    }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void check_finite() const {
        if (!all_finite()) throw InvalidMatrix("non-finite matrix entry");
    }

    bool is_symmetric(double tol) const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
        return true;
    }

    void symmetrize() {
        assert(rows_ == cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j) {
                const double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = v;
                (*this)(j, i) = v;
            }
    }

    /// Diagonal part as a matrix of the same shape (off-diagonal zeroed).
    Matrix diagonal_part() const {
        assert(rows_ == cols_);
        Matrix d(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i) d(i, i) = (*this)(i, i);
        return d;
    }

    std::vector<double> diagonal_entries() const {
        assert(rows_ == cols_);
        std::vector<double> d(rows_);
        for (std::size_t i = 0; i < rows_; ++i) d[i] = (*this)(i, i);
        return d;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(double a) {
        for (double& v : data_) v *= a;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        Matrix c(a.rows_, b.cols_);
        multiply_into(c, a, b);
        return c;
    }

    /// c = a * b, no allocation. Shapes must already agree.
    static void multiply_into(Matrix& c, const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_ || c.rows_ != a.rows_ || c.cols_ != b.cols_)
            throw ShapeError("matrix product shape mismatch");
        c.set_zero();
        for (std::size_t i = 0; i < a.rows_; ++i) {
            const double* arow = a.data_.data() + i * a.cols_;
            double* crow = c.data_.data() + i * c.cols_;
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = arow[k];
                if (aik == 0.0) continue;
                const double* brow = b.data_.data() + k * b.cols_;
                for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
            }
        }
    }

    /// c = a * b^T, no allocation.
    static void multiply_nt_into(Matrix& c, const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.cols_ || c.rows_ != a.rows_ || c.cols_ != b.rows_)
            throw ShapeError("matrix product shape mismatch");
        for (std::size_t i = 0; i < a.rows_; ++i) {
            const double* arow = a.data_.data() + i * a.cols_;
            double* crow = c.data_.data() + i * c.cols_;
            for (std::size_t j = 0; j < b.rows_; ++j) {
                const double* brow = b.data_.data() + j * b.cols_;
                double s = 0.0;
                for (std::size_t k = 0; k < a.cols_; ++k) s += arow[k] * brow[k];
                crow[j] = s;
            }
        }
    }

    /// c = a^T * b, no allocation.
    static void multiply_tn_into(Matrix& c, const Matrix& a, const Matrix& b) {
        if (a.rows_ != b.rows_ || c.rows_ != a.cols_ || c.cols_ != b.cols_)
            throw ShapeError("matrix product shape mismatch");
        c.set_zero();
        for (std::size_t k = 0; k < a.rows_; ++k) {
            const double* arow = a.data_.data() + k * a.cols_;
            const double* brow = b.data_.data() + k * b.cols_;
            for (std::size_t i = 0; i < a.cols_; ++i) {
                const double aki = arow[i];
                if (aki == 0.0) continue;
                double* crow = c.data_.data() + i * c.cols_;
                for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += aki * brow[j];
            }
        }
    }

    Matrix multiply_nt(const Matrix& b) const {
        Matrix c(rows_, b.rows());
        multiply_nt_into(c, *this, b);
        return c;
    }

    Matrix multiply_tn(const Matrix& b) const {
        Matrix c(cols_, b.cols());
        multiply_tn_into(c, *this, b);
        return c;
    }

    friend double frobenius_inner(const Matrix& a, const Matrix& b) {
        a.require_same_shape(b);
        double s = 0.0;
        for (std::size_t k = 0; k < a.data_.size(); ++k) s += a.data_[k] * b.data_[k];
        return s;
    }

    friend double distance_frobenius(const Matrix& a, const Matrix& b) {
        a.require_same_shape(b);
        double s = 0.0;
        for (std::size_t k = 0; k < a.data_.size(); ++k) {
            const double d = a.data_[k] - b.data_[k];
            s += d * d;
        }
        return std::sqrt(s);
    }

  private:
    void require_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeError("matrix shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// CSV layout: a `# rows cols` header line, then one comma-separated line per
/// matrix row.
inline void save_matrix_csv(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidData("cannot open for writing: " + path);
    out << "# " << m.rows() << " " << m.cols() << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
    if (!out) throw InvalidData("write failed: " + path);
}

inline Matrix load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidData("cannot open: " + path);
    std::string header;
    std::getline(in, header);
    std::size_t rows = 0, cols = 0;
    {
        std::istringstream hs(header);
        std::string hash;
        hs >> hash >> rows >> cols;
        if (hash != "#" || rows == 0 || cols == 0)
            throw InvalidData(path + ": expected '# rows cols' header");
    }
    Matrix m(rows, cols);
    std::string line;
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw InvalidData(path + ": truncated matrix data");
        std::istringstream ls(line);
        std::string cell;
        for (std::size_t j = 0; j < cols; ++j) {
            if (!std::getline(ls, cell, ',')) throw InvalidData(path + ": short row");
            m(i, j) = std::stod(cell);
        }
    }
    m.check_finite();
    return m;
}

}  // namespace augopt
