#include "qnls/field_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "qnls/errors.hpp"

namespace qnls::io {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::ostream& os, T value) {
  auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  os.write(bits.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<char, sizeof(T)> bits{};
  if (!is.read(bits.data(), sizeof(T))) throw UsageError("truncated snapshot file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_csv(const std::filesystem::path& path, const ComplexField& f) {
  std::ofstream os(path);
  if (!os) throw NumericalError("cannot open " + path.string() + " for writing");
  os << "x,re,im\n" << std::setprecision(17);
  for (int j = 0; j < f.size(); ++j)
    os << f.grid().node(j) << ',' << f[j].real() << ',' << f[j].imag() << '\n';
  if (!os) throw NumericalError("write failed: " + path.string());
}

ComplexField read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  if (line.rfind("x,re,im", 0) != 0) throw UsageError("missing x,re,im header in " + path.string());
  std::vector<double> xs;
  std::vector<cplx> vals;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double x, re, im;
    char c1, c2;
    if (!(row >> x >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',')
      throw UsageError("malformed CSV row: " + line);
    xs.push_back(x);
    vals.emplace_back(re, im);
  }
  if (xs.size() < 8) throw UsageError("CSV field has too few rows");
  const double L = -xs.front();
  auto grid = make_grid(L, static_cast<int>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (std::abs(xs[j] - grid->node(static_cast<int>(j))) > 1e-9 * L)
      throw UsageError("CSV nodes are not a uniform periodic grid");
  return ComplexField(grid, std::move(vals));
}

void write_snapshot(const std::filesystem::path& path, const ComplexField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw NumericalError("cannot open " + path.string() + " for writing");
  put_le<double>(os, f.grid().half_length());
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(f.size()));
  for (const auto& v : f.values()) {
    put_le<double>(os, v.real());
    put_le<double>(os, v.imag());
  }
  if (!os) throw NumericalError("write failed: " + path.string());
}

ComplexField read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open " + path.string());
  const double L = get_le<double>(is);
  const auto n = get_le<std::uint64_t>(is);
  if (n > (1u << 26)) throw UsageError("implausible snapshot size");
  auto grid = make_grid(L, static_cast<int>(n));
  std::vector<cplx> vals(n);
  for (auto& v : vals) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    v = {re, im};
  }
  return ComplexField(grid, std::move(vals));
}

}  // namespace qnls::io
