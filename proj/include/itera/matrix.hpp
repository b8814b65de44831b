#ifndef ITERA_MATRIX_HPP
#define ITERA_MATRIX_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace itera {

// Dense row-major 2-D matrix of doubles. Immutable-by-convention carrier
// for weights, activations and residuals. All values must stay finite.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix zero(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    std::vector<double> row(std::size_t r) const;
    std::vector<double> col(std::size_t c) const;

    Matrix transposed() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LayerShape {
    std::size_t m = 1;  // batch rows
    std::size_t k = 1;  // input dim
    std::size_t n = 1;  // output dim
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);

// Rank-1 update: a -= scale * u * v^T (u length = a.rows, v length = a.cols).
void subtract_outer(Matrix& a, const std::vector<double>& u, const std::vector<double>& v,
                    double scale = 1.0);

// Binary "ITMX" container: magic 'I','T','M','X', u32le rows, u32le cols,
// u8 dtype (0 = f64, 1 = f32), row-major payload.
void write_itmx(const Matrix& m, const std::string& path, uint8_t dtype = 0);
Matrix read_itmx(const std::string& path);

// CSV, accepted for matrices up to 64x64.
void write_csv(const Matrix& m, const std::string& path);
Matrix read_csv(const std::string& path);

// Dispatch on extension (.itmx / .csv).
Matrix read_matrix(const std::string& path);
void write_matrix(const Matrix& m, const std::string& path);

}  // namespace itera

#endif
