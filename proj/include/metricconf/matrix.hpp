#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "metricconf/error.hpp"

namespace metricconf {

// Dense row-major matrix of doubles. Rows index systems, columns index
// inputs throughout the library.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != m.cols_)
                throw domain_error("Matrix::from_rows: ragged rows");
            std::size_t j = 0;
            for (double v : row)
                m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> flat() const { return {data_.data(), data_.size()}; }
    std::span<double> flat() { return {data_.data(), data_.size()}; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            out[i] = (*this)(i, j);
        return out;
    }

    std::vector<double> row_means() const {
        if (cols_ == 0)
            throw domain_error("row_means: matrix has no columns");
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < cols_; ++j)
                sum += (*this)(i, j);
            out[i] = sum / static_cast<double>(cols_);
        }
        return out;
    }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_aligned(const Matrix& a, const Matrix& b, const char* where) {
    if (!a.same_shape(b))
        throw domain_error(std::string(where) + ": matrices have different shapes");
}

} // namespace metricconf
