#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace defectscope {

// CSV layout: header "index,re,im", then one row per flat index.
inline void write_csv(const SampledField& field, std::ostream& os) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "index,re,im\n";
  for (std::size_t i = 0; i < field.size(); ++i) os << i << ',' << field[i].real() << ',' << field[i].imag() << '\n';
  os.precision(old_precision);
}

inline SampledField read_csv(const GridSpec& grid, std::istream& is, Space space = Space::physical) {
  std::vector<Complex> values(grid.size());
  std::vector<bool> seen(grid.size(), false);
  std::string line;
  if (!std::getline(is, line) || line.rfind("index", 0) != 0)
    throw ContractViolation("read_csv: missing 'index,re,im' header");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t idx = 0;
    double re = 0.0, im = 0.0;
    char c1 = 0, c2 = 0;
    if (!(row >> idx >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',')
      throw ContractViolation("read_csv: malformed row '" + line + "'");
    if (idx >= grid.size() || seen[idx]) throw ContractViolation("read_csv: bad or repeated index");
    seen[idx] = true;
    values[idx] = {re, im};
    ++rows;
  }
  if (rows != grid.size()) throw ContractViolation("read_csv: row count does not match grid size");
  return SampledField(grid, std::move(values), space);
}

namespace detail {
inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
  return v;
}
}  // namespace detail

// Binary layout: (re, im) pairs of little-endian IEEE-754 doubles in flat
// (row-major) order, no header.
inline void write_binary(const SampledField& field, std::ostream& os) {
  for (std::size_t i = 0; i < field.size(); ++i) {
    for (double part : {field[i].real(), field[i].imag()}) {
      const auto bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(part));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      os.write(buf, 8);
    }
  }
}

inline SampledField read_binary(const GridSpec& grid, std::istream& is, Space space = Space::physical) {
  std::vector<Complex> values(grid.size());
  for (auto& v : values) {
    double parts[2];
    for (double& part : parts) {
      char buf[8];
      if (!is.read(buf, 8)) throw ContractViolation("read_binary: truncated stream");
      std::uint64_t bits = 0;
      std::memcpy(&bits, buf, 8);
      part = std::bit_cast<double>(detail::to_little_endian(bits));
    }
    v = {parts[0], parts[1]};
  }
  return SampledField(grid, std::move(values), space);
}

}  // namespace defectscope
