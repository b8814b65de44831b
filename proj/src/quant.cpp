#include "itera/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace itera {

bool valid_wordlength(int wl) { return wl >= 2 && wl <= 16; }

namespace {
// Round half to even. std::nearbyint honors the default FE_TONEAREST mode.
int32_t round_even(double x) { return static_cast<int32_t>(std::nearbyint(x)); }
}  // namespace

QuantizedVector quantize_vector(const std::vector<double>& v, int wl) {
    if (!valid_wordlength(wl))
        throw std::invalid_argument("quantize_vector: word length must be in [2,16]");
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("quantize_vector: non-finite input");

    const int32_t qmax = (1 << (wl - 1)) - 1;
    double amax = 0.0;
    for (double x : v) amax = std::max(amax, std::abs(x));

    QuantizedVector q;
    q.wl = wl;
    q.codes.resize(v.size(), 0);
    if (amax == 0.0) {
        q.scale = 1.0;
        return q;
    }
    q.scale = amax / static_cast<double>(qmax);
    for (std::size_t i = 0; i < v.size(); ++i) {
        int32_t c = round_even(v[i] / q.scale);
        q.codes[i] = std::clamp(c, -qmax, qmax);
    }
    return q;
}

std::vector<double> dequantize(const QuantizedVector& q) {
    std::vector<double> out(q.codes.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = q.codes[i] * q.scale;
    return out;
}

Matrix quantize_rows(const Matrix& x, int act_wl) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto dq = dequantize(quantize_vector(x.row(r), act_wl));
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = dq[c];
    }
    return out;
}

}  // namespace itera
