#include "itera/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace itera {

namespace {

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& x) {
    std::vector<double> y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
    }
    return y;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void normalize(std::vector<double>& v) {
    const double n = norm2(v);
    if (n > 0.0)
        for (double& x : v) x /= n;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<long>(i), static_cast<long>(j)) = m(i, j);
    return e;
}

}  // namespace

Rank1Triple rank1_svd(const Matrix& a) {
    Rank1Triple t;
    t.u.assign(a.rows(), 0.0);
    t.v.assign(a.cols(), 0.0);
    if (frobenius_norm(a) == 0.0) {
        t.u[0] = 1.0;
        t.v[0] = 1.0;
        t.sigma = 0.0;
        t.degenerate = true;
        return t;
    }

    // Iterate on the Gram matrix of the smaller side.
    const bool on_cols = a.cols() <= a.rows();
    const std::size_t dim = on_cols ? a.cols() : a.rows();

    std::mt19937_64 rng(0x1753u);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(dim);
    for (double& xi : x) xi = dist(rng);
    normalize(x);

    double lambda = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        std::vector<double> y = on_cols ? matvec_t(a, matvec(a, x)) : matvec(a, matvec_t(a, x));
        double lambda_new = 0.0;
        for (std::size_t i = 0; i < dim; ++i) lambda_new += x[i] * y[i];
        normalize(y);
        x = std::move(y);
        if (iter > 0 && std::abs(lambda_new - lambda) <= 1e-10 * std::max(std::abs(lambda_new), 1.0)) {
            lambda = lambda_new;
            break;
        }
        lambda = lambda_new;
    }

    if (on_cols) {
        t.v = x;
        std::vector<double> av = matvec(a, t.v);
        t.sigma = norm2(av);
        if (t.sigma > 0.0)
            for (std::size_t i = 0; i < a.rows(); ++i) t.u[i] = av[i] / t.sigma;
        else
            t.u[0] = 1.0;
    } else {
        t.u = x;
        std::vector<double> atu = matvec_t(a, t.u);
        t.sigma = norm2(atu);
        if (t.sigma > 0.0)
            for (std::size_t j = 0; j < a.cols(); ++j) t.v[j] = atu[j] / t.sigma;
        else
            t.v[0] = 1.0;
    }
    return t;
}

std::pair<Matrix, Matrix> truncated_svd(const Matrix& w, std::size_t r) {
    const std::size_t kmin = std::min(w.rows(), w.cols());
    if (r < 1 || r > kmin) throw std::invalid_argument("truncated_svd: rank out of range");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(to_eigen(w), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& u = svd.matrixU();
    const auto& v = svd.matrixV();
    const auto& s = svd.singularValues();

    Matrix w1(w.rows(), r), w2(r, w.cols());
    for (std::size_t k = 0; k < r; ++k) {
        const double rs = std::sqrt(std::max(0.0, s(static_cast<long>(k))));
        for (std::size_t i = 0; i < w.rows(); ++i)
            w1(i, k) = rs * u(static_cast<long>(i), static_cast<long>(k));
        for (std::size_t j = 0; j < w.cols(); ++j)
            w2(k, j) = rs * v(static_cast<long>(j), static_cast<long>(k));
    }
    return {std::move(w1), std::move(w2)};
}

QuantizedDecomposition svd_baseline(const Matrix& w, std::size_t r, int wl) {
    if (!valid_wordlength(wl)) throw std::invalid_argument("svd_baseline: word length out of [2,16]");
    auto [w1, w2] = truncated_svd(w, r);

    QuantizedDecomposition d;
    d.rank = r;
    d.weight_wl = wl;
    d.k_dim = w.rows();
    d.n_dim = w.cols();
    d.w1_cols.reserve(r);
    d.w2_rows.reserve(r);
    for (std::size_t k = 0; k < r; ++k) {
        d.w1_cols.push_back(quantize_vector(w1.col(k), wl));
        d.w2_rows.push_back(quantize_vector(w2.row(k), wl));
    }

    // Residual history after each quantized rank-1 term; only the final entry
    // is meaningful for the baseline but bookkeeping stays uniform.
    d.residual_norms.resize(r + 1);
    Matrix res = w;
    d.residual_norms[0] = frobenius_norm(res);
    for (std::size_t k = 0; k < r; ++k) {
        subtract_outer(res, factor_col(d, k), factor_row(d, k));
        d.residual_norms[k + 1] = frobenius_norm(res);
    }
    return d;
}

QuantizedDecomposition iterative_decompose(const Matrix& w, std::size_t r, int wl) {
    const std::size_t kmin = std::min(w.rows(), w.cols());
    if (r < 1 || r > kmin) throw std::invalid_argument("iterative_decompose: rank out of range");
    const bool lossless = (wl == kLosslessWl);
    if (!lossless && !valid_wordlength(wl))
        throw std::invalid_argument("iterative_decompose: word length out of [2,16]");

    QuantizedDecomposition d;
    d.rank = r;
    d.weight_wl = wl;
    d.k_dim = w.rows();
    d.n_dim = w.cols();
    d.residual_norms.reserve(r + 1);

    Matrix res = w;
    d.residual_norms.push_back(frobenius_norm(res));

    for (std::size_t k = 0; k < r; ++k) {
        if (frobenius_norm(res) == 0.0) {
            // Residual exhausted: zero-fill the remaining factor pairs.
            d.early_exhausted = true;
            if (lossless) {
                d.w1_real.emplace_back(w.rows(), 0.0);
                d.w2_real.emplace_back(w.cols(), 0.0);
            } else {
                d.w1_cols.push_back(quantize_vector(std::vector<double>(w.rows(), 0.0), wl));
                d.w2_rows.push_back(quantize_vector(std::vector<double>(w.cols(), 0.0), wl));
            }
            d.residual_norms.push_back(0.0);
            continue;
        }

        const Rank1Triple t = rank1_svd(res);
        const double rs = std::sqrt(t.sigma);
        std::vector<double> a(w.rows()), b(w.cols());
        for (std::size_t i = 0; i < w.rows(); ++i) a[i] = rs * t.u[i];
        for (std::size_t j = 0; j < w.cols(); ++j) b[j] = rs * t.v[j];

        std::vector<double> dq_a, dq_b;
        if (lossless) {
            d.w1_real.push_back(a);
            d.w2_real.push_back(b);
            dq_a = std::move(a);
            dq_b = std::move(b);
        } else {
            d.w1_cols.push_back(quantize_vector(a, wl));
            d.w2_rows.push_back(quantize_vector(b, wl));
            dq_a = dequantize(d.w1_cols.back());
            dq_b = dequantize(d.w2_rows.back());
        }
        subtract_outer(res, dq_a, dq_b);
        d.residual_norms.push_back(frobenius_norm(res));
    }
    return d;
}

std::vector<double> factor_col(const QuantizedDecomposition& d, std::size_t k) {
    if (d.weight_wl == kLosslessWl) return d.w1_real.at(k);
    return dequantize(d.w1_cols.at(k));
}

std::vector<double> factor_row(const QuantizedDecomposition& d, std::size_t k) {
    if (d.weight_wl == kLosslessWl) return d.w2_real.at(k);
    return dequantize(d.w2_rows.at(k));
}

Matrix reconstruct(const QuantizedDecomposition& d) {
    Matrix out(d.k_dim, d.n_dim);
    for (std::size_t k = 0; k < d.rank; ++k)
        subtract_outer(out, factor_col(d, k), factor_row(d, k), -1.0);
    return out;
}

Matrix forward(const Matrix& x, const QuantizedDecomposition& d, int act_wl) {
    if (x.cols() != d.k_dim) throw std::invalid_argument("forward: X columns != decomposition K");

    Matrix w1(d.k_dim, d.rank), w2(d.rank, d.n_dim);
    for (std::size_t k = 0; k < d.rank; ++k) {
        const auto c = factor_col(d, k);
        const auto r = factor_row(d, k);
        for (std::size_t i = 0; i < d.k_dim; ++i) w1(i, k) = c[i];
        for (std::size_t j = 0; j < d.n_dim; ++j) w2(k, j) = r[j];
    }
    const Matrix xq = quantize_rows(x, act_wl);
    const Matrix inter = matmul(xq, w1);
    const Matrix interq = quantize_rows(inter, act_wl);
    return matmul(interq, w2);
}

void save_decomposition(const QuantizedDecomposition& d, const std::string& dir) {
    if (d.weight_wl == kLosslessWl)
        throw std::invalid_argument("save_decomposition: lossless decompositions are in-memory only");
    std::filesystem::create_directories(dir);

    Matrix w1c(d.k_dim, d.rank), w2c(d.rank, d.n_dim);
    nlohmann::json scales1 = nlohmann::json::array(), scales2 = nlohmann::json::array();
    for (std::size_t k = 0; k < d.rank; ++k) {
        for (std::size_t i = 0; i < d.k_dim; ++i) w1c(i, k) = d.w1_cols[k].codes[i];
        for (std::size_t j = 0; j < d.n_dim; ++j) w2c(k, j) = d.w2_rows[k].codes[j];
        scales1.push_back(d.w1_cols[k].scale);
        scales2.push_back(d.w2_rows[k].scale);
    }
    write_itmx(w1c, dir + "/w1_codes.itmx");
    write_itmx(w2c, dir + "/w2_codes.itmx");

    nlohmann::json j;
    j["rank"] = d.rank;
    j["weight_wl"] = d.weight_wl;
    j["k"] = d.k_dim;
    j["n"] = d.n_dim;
    j["scales_w1"] = scales1;
    j["scales_w2"] = scales2;
    j["residual_norms"] = d.residual_norms;
    j["early_exhausted"] = d.early_exhausted;
    std::ofstream os(dir + "/manifest.json");
    os << j.dump(2) << '\n';
}

QuantizedDecomposition load_decomposition(const std::string& dir) {
    std::ifstream is(dir + "/manifest.json");
    if (!is) throw std::runtime_error("load_decomposition: missing manifest in " + dir);
    nlohmann::json j;
    is >> j;

    QuantizedDecomposition d;
    d.rank = j.at("rank").get<std::size_t>();
    d.weight_wl = j.at("weight_wl").get<int>();
    d.k_dim = j.at("k").get<std::size_t>();
    d.n_dim = j.at("n").get<std::size_t>();
    d.residual_norms = j.at("residual_norms").get<std::vector<double>>();
    d.early_exhausted = j.value("early_exhausted", false);

    const Matrix w1c = read_itmx(dir + "/w1_codes.itmx");
    const Matrix w2c = read_itmx(dir + "/w2_codes.itmx");
    const auto s1 = j.at("scales_w1").get<std::vector<double>>();
    const auto s2 = j.at("scales_w2").get<std::vector<double>>();
    for (std::size_t k = 0; k < d.rank; ++k) {
        QuantizedVector q1, q2;
        q1.wl = q2.wl = d.weight_wl;
        q1.scale = s1.at(k);
        q2.scale = s2.at(k);
        q1.codes.resize(d.k_dim);
        q2.codes.resize(d.n_dim);
        for (std::size_t i = 0; i < d.k_dim; ++i) q1.codes[i] = static_cast<int32_t>(w1c(i, k));
        for (std::size_t jx = 0; jx < d.n_dim; ++jx) q2.codes[jx] = static_cast<int32_t>(w2c(k, jx));
        d.w1_cols.push_back(std::move(q1));
        d.w2_rows.push_back(std::move(q2));
    }
    return d;
}

}  // namespace itera
