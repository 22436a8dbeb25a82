#pragma once

#include <filesystem>

#include "qnls/grid.hpp"

namespace qnls::io {

// CSV with header "x,re,im", one row per node, values printed with 17
// significant digits so the file round-trips exactly.
void write_csv(const std::filesystem::path& path, const ComplexField& f);
ComplexField read_csv(const std::filesystem::path& path);

// Binary snapshot: little-endian float64 L, little-endian uint64 n, then n
// interleaved (re, im) little-endian float64 pairs.
void write_snapshot(const std::filesystem::path& path, const ComplexField& f);
ComplexField read_snapshot(const std::filesystem::path& path);

}  // namespace qnls::io
