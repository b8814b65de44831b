#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <random>

#include "itera/matrix.hpp"

using namespace itera;

namespace {
Matrix seeded_matrix(uint64_t seed, std::size_t rows, std::size_t cols) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}
}  // namespace

TEST_CASE("matmul identity and zero") {
    const Matrix b = seeded_matrix(7, 2, 5);
    const Matrix i2 = Matrix::identity(2);
    const Matrix prod = matmul(i2, b);
    for (std::size_t k = 0; k < b.size(); ++k) CHECK(prod.data()[k] == b.data()[k]);

    const Matrix z = matmul(Matrix::zero(2, 3), seeded_matrix(8, 3, 4));
    CHECK(z.rows() == 2);
    CHECK(z.cols() == 4);
    for (double v : z.data()) CHECK(v == 0.0);
}

TEST_CASE("matmul hand arithmetic") {
    const Matrix a(2, 2, {1, 2, 3, 4});
    const Matrix b(2, 1, {5, 6});
    const Matrix c = matmul(a, b);
    CHECK(c(0, 0) == 17.0);
    CHECK(c(1, 0) == 39.0);
}

TEST_CASE("matmul dimension mismatch rejected") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(4, 2)), std::invalid_argument);
}

TEST_CASE("matmul associativity on small integers") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dist(-4, 4);
    Matrix a(3, 3), b(3, 3), c(3, 3);
    for (double& v : a.data()) v = dist(rng);
    for (double& v : b.data()) v = dist(rng);
    for (double& v : c.data()) v = dist(rng);
    const Matrix l = matmul(matmul(a, b), c);
    const Matrix r = matmul(a, matmul(b, c));
    for (std::size_t k = 0; k < l.size(); ++k) CHECK(l.data()[k] == r.data()[k]);
}

TEST_CASE("frobenius norm basics") {
    CHECK(frobenius_norm(Matrix::zero(4, 4)) == 0.0);
    CHECK(frobenius_norm(Matrix(1, 2, {3, 4})) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("frobenius norm matches scalar-loop oracle on seed-0 8x8") {
    const Matrix m = seeded_matrix(0, 8, 8);
    double sum = 0.0;
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 8; ++c) sum += m(r, c) * m(r, c);
    CHECK(frobenius_norm(m) == doctest::Approx(std::sqrt(sum)).epsilon(1e-14));
    CHECK(frobenius_norm(m) == doctest::Approx(frobenius_norm(m.transposed())).epsilon(1e-14));
}

TEST_CASE("ITMX round-trip is bit-identical") {
    const Matrix m = seeded_matrix(42, 5, 9);
    const std::string path = "roundtrip_test.itmx";
    write_itmx(m, path);
    const Matrix back = read_itmx(path);
    REQUIRE(back.rows() == m.rows());
    REQUIRE(back.cols() == m.cols());
    for (std::size_t k = 0; k < m.size(); ++k) CHECK(back.data()[k] == m.data()[k]);
    std::remove(path.c_str());
}

TEST_CASE("ITMX f32 dtype round-trips through float precision") {
    const Matrix m = seeded_matrix(43, 3, 3);
    const std::string path = "roundtrip_f32.itmx";
    write_itmx(m, path, 1);
    const Matrix back = read_itmx(path);
    for (std::size_t k = 0; k < m.size(); ++k)
        CHECK(back.data()[k] == static_cast<double>(static_cast<float>(m.data()[k])));
    std::remove(path.c_str());
}

TEST_CASE("CSV accepted up to 64x64 only") {
    const Matrix m = seeded_matrix(44, 4, 4);
    const std::string path = "roundtrip_test.csv";
    write_csv(m, path);
    const Matrix back = read_csv(path);
    for (std::size_t k = 0; k < m.size(); ++k)
        CHECK(back.data()[k] == doctest::Approx(m.data()[k]).epsilon(1e-15));
    std::remove(path.c_str());
    CHECK_THROWS_AS(write_csv(Matrix(65, 2), "too_big.csv"), std::invalid_argument);
}

TEST_CASE("bad magic rejected") {
    const std::string path = "bad_magic.itmx";
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("NOPE", f);
        std::fclose(f);
    }
    CHECK_THROWS(read_itmx(path));
    std::remove(path.c_str());
}
