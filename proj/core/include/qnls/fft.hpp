#pragma once

#include <span>
#include <vector>

#include "qnls/grid.hpp"

namespace qnls::fft {

// Unnormalized forward DFT: F_m = sum_j f_j exp(-2 pi i j m / n).
void forward(std::span<const cplx> in, std::span<cplx> out);
// Normalized inverse DFT (includes the 1/n factor).
void inverse(std::span<const cplx> in, std::span<cplx> out);

std::vector<cplx> forward(std::span<const cplx> in);
std::vector<cplx> inverse(std::span<const cplx> in);

}  // namespace qnls::fft
