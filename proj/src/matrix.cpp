#include "itera/matrix.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace itera {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw std::invalid_argument("Matrix: data length != rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::vector<double> Matrix::row(std::size_t r) const {
    return {data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
}

std::vector<double> Matrix::col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimensions do not match");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

void subtract_outer(Matrix& a, const std::vector<double>& u, const std::vector<double>& v,
                    double scale) {
    if (u.size() != a.rows() || v.size() != a.cols())
        throw std::invalid_argument("subtract_outer: vector lengths do not match matrix");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double ui = scale * u[i];
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= ui * v[j];
    }
}

namespace {

constexpr char kMagic[4] = {'I', 'T', 'M', 'X'};

void write_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_itmx(const Matrix& m, const std::string& path, uint8_t dtype) {
    if (dtype > 1) throw std::invalid_argument("write_itmx: dtype must be 0 (f64) or 1 (f32)");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_itmx: cannot open " + path);
    os.write(kMagic, 4);
    write_u32le(os, static_cast<uint32_t>(m.rows()));
    write_u32le(os, static_cast<uint32_t>(m.cols()));
    os.put(static_cast<char>(dtype));
    if (dtype == 0) {
        os.write(reinterpret_cast<const char*>(m.data().data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
        std::vector<float> f(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) f[i] = static_cast<float>(m.data()[i]);
        os.write(reinterpret_cast<const char*>(f.data()),
                 static_cast<std::streamsize>(f.size() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("write_itmx: write failed for " + path);
}

Matrix read_itmx(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_itmx: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_itmx: bad magic in " + path);
    const uint32_t rows = read_u32le(is);
    const uint32_t cols = read_u32le(is);
    const int dtype = is.get();
    if (dtype != 0 && dtype != 1) throw std::runtime_error("read_itmx: unknown dtype");
    Matrix m(rows, cols);
    if (dtype == 0) {
        is.read(reinterpret_cast<char*>(m.data().data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    } else {
        std::vector<float> f(m.size());
        is.read(reinterpret_cast<char*>(f.data()),
                static_cast<std::streamsize>(f.size() * sizeof(float)));
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = f[i];
    }
    if (!is) throw std::runtime_error("read_itmx: truncated payload in " + path);
    return m;
}

void write_csv(const Matrix& m, const std::string& path) {
    if (m.rows() > 64 || m.cols() > 64)
        throw std::invalid_argument("write_csv: CSV limited to 64x64 matrices");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    os.precision(17);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) os << ',';
            os << m(r, c);
        }
        os << '\n';
    }
}

Matrix read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_csv: cannot open " + path);
    std::vector<double> data;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            data.push_back(std::stod(cell));
            ++n;
        }
        if (rows == 0) cols = n;
        else if (n != cols) throw std::runtime_error("read_csv: ragged rows in " + path);
        ++rows;
    }
    if (rows > 64 || cols > 64) throw std::invalid_argument("read_csv: CSV limited to 64x64");
    return Matrix(rows, cols, std::move(data));
}

namespace {
bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}
}  // namespace

Matrix read_matrix(const std::string& path) {
    if (has_suffix(path, ".csv")) return read_csv(path);
    return read_itmx(path);
}

void write_matrix(const Matrix& m, const std::string& path) {
    if (has_suffix(path, ".csv")) write_csv(m, path);
    else write_itmx(m, path);
}

}  // namespace itera
