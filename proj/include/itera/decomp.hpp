#ifndef ITERA_DECOMP_HPP
#define ITERA_DECOMP_HPP

#include <string>
#include <utility>
#include <vector>

#include "itera/matrix.hpp"
#include "itera/quant.hpp"

namespace itera {

// Dominant singular triple: u (len K, unit), sigma >= 0, v (len N, unit).
struct Rank1Triple {
    std::vector<double> u;
    double sigma = 0.0;
    std::vector<double> v;
    bool degenerate = false;  // zero input, vectors arbitrary
};

// Lossless sentinel: skip quantization entirely (used for equivalence checks,
// not a valid on-disk word length).
constexpr int kLosslessWl = 0;

// Quantized rank-r factorization W ~= W1'(K x r) * W2'(r x N), one quantized
// column/row pair per rank, with the residual norm history of the loop.
struct QuantizedDecomposition {
    std::vector<QuantizedVector> w1_cols;  // each length K
    std::vector<QuantizedVector> w2_rows;  // each length N
    // Populated instead of the code vectors when weight_wl == kLosslessWl.
    std::vector<std::vector<double>> w1_real;
    std::vector<std::vector<double>> w2_real;
    std::size_t rank = 0;
    int weight_wl = 8;
    std::vector<double> residual_norms;  // length rank+1, [0] = ||W||_F
    bool early_exhausted = false;        // residual hit exact zero before rank
    std::size_t k_dim = 0;
    std::size_t n_dim = 0;
};

// Power iteration on the Gram matrix of the smaller side; tolerance 1e-10 on
// the eigenvalue change, capped at 10000 sweeps, deterministic start vector.
Rank1Triple rank1_svd(const Matrix& a);

// Classic truncated SVD with the symmetric sqrt(sigma) split:
// W1 = U_r S_r^{1/2}, W2 = S_r^{1/2} V_r^T.
std::pair<Matrix, Matrix> truncated_svd(const Matrix& w, std::size_t r);

// Truncate first, quantize the produced factors vector-wise afterwards.
QuantizedDecomposition svd_baseline(const Matrix& w, std::size_t r, int wl);

// Refinement loop: rank-1 SVD of the residual, quantize both vectors,
// subtract the dequantized product, repeat. Quantization error feeds the
// next iteration through the residual.
QuantizedDecomposition iterative_decompose(const Matrix& w, std::size_t r, int wl);

// Dequantized (or lossless) factor column k of W1' / row k of W2'.
std::vector<double> factor_col(const QuantizedDecomposition& d, std::size_t k);
std::vector<double> factor_row(const QuantizedDecomposition& d, std::size_t k);

Matrix reconstruct(const QuantizedDecomposition& d);

// (X W1') W2' without reconstructing W; rows of X and of the intermediate
// are quantized vector-wise at act_wl before each multiply.
Matrix forward(const Matrix& x, const QuantizedDecomposition& d, int act_wl);

// Directory of ITMX code matrices plus a JSON manifest.
void save_decomposition(const QuantizedDecomposition& d, const std::string& dir);
QuantizedDecomposition load_decomposition(const std::string& dir);

}  // namespace itera

#endif
