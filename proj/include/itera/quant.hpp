#ifndef ITERA_QUANT_HPP
#define ITERA_QUANT_HPP

#include <cstdint>
#include <vector>

#include "itera/matrix.hpp"

namespace itera {

struct QuantScheme {
    int weight_wl = 8;  // bits per weight, [2, 16]
    int act_wl = 8;     // bits per activation, [2, 16]
};

// Symmetric fixed-point code vector. Codes live in
// [-(2^{wl-1}-1), 2^{wl-1}-1]; -2^{wl-1} is never produced, so negation
// stays in range. An all-zero input maps to scale 1 with all-zero codes.
struct QuantizedVector {
    std::vector<int32_t> codes;
    double scale = 1.0;
    int wl = 8;
};

bool valid_wordlength(int wl);

// scale = max|v| / (2^{wl-1}-1); codes = round-half-to-even(v/scale), clamped.
QuantizedVector quantize_vector(const std::vector<double>& v, int wl);

std::vector<double> dequantize(const QuantizedVector& q);

// Vector-wise activation quantization: each row of x quantized at act_wl
// and immediately dequantized (value-level simulation of the fixed-point path).
Matrix quantize_rows(const Matrix& x, int act_wl);

}  // namespace itera

#endif
