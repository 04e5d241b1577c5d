#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kaug/csv.hpp"
#include "kaug/matrix.hpp"

namespace kaug {

namespace detail {

struct MmHeader {
  bool coordinate = false;
  bool symmetric = false;
};

[[noreturn]] inline void mm_fail(const std::string& path, std::size_t line,
                                 const std::string& what) {
  throw std::runtime_error("matrix market: " + path + ": line " +
                           std::to_string(line) + ": " + what);
}

}  // namespace detail

/// Read a MatrixMarket file. Supported: "array real general",
/// "coordinate real general", plus symmetric storage, which is expanded.
inline DenseMatrix matrix_market_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("matrix market: cannot open " + path);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) detail::mm_fail(path, 1, "empty file");
  ++lineno;

  std::istringstream hdr(line);
  std::string banner, object, format, field, sym;
  hdr >> banner >> object >> format >> field >> sym;
  if (banner != "%%MatrixMarket" || object != "matrix")
    detail::mm_fail(path, lineno, "malformed header");
  detail::MmHeader h;
  if (format == "coordinate") h.coordinate = true;
  else if (format != "array") detail::mm_fail(path, lineno, "unsupported format '" + format + "'");
  if (field != "real")
    detail::mm_fail(path, lineno, "unsupported field '" + field + "' (real only)");
  if (sym == "symmetric") h.symmetric = true;
  else if (sym != "general") detail::mm_fail(path, lineno, "unsupported symmetry '" + sym + "'");

  // Skip comments.
  do {
    if (!std::getline(in, line)) detail::mm_fail(path, lineno + 1, "missing size line");
    ++lineno;
  } while (!line.empty() && line[0] == '%');

  std::istringstream size_line(line);
  long long rows = -1, cols = -1, nnz = -1;
  if (h.coordinate) {
    if (!(size_line >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      detail::mm_fail(path, lineno, "malformed size line");
  } else {
    if (!(size_line >> rows >> cols) || rows < 0 || cols < 0)
      detail::mm_fail(path, lineno, "malformed size line");
  }
  if (h.symmetric && rows != cols)
    detail::mm_fail(path, lineno, "symmetric matrix must be square");

  DenseMatrix m((std::size_t)rows, (std::size_t)cols);
  if (h.coordinate) {
    for (long long k = 0; k < nnz; ++k) {
      if (!std::getline(in, line))
        detail::mm_fail(path, lineno + 1, "unexpected end of file");
      ++lineno;
      std::istringstream entry(line);
      long long i, j;
      std::string val;
      if (!(entry >> i >> j >> val))
        detail::mm_fail(path, lineno, "malformed coordinate entry");
      if (i < 1 || i > rows || j < 1 || j > cols)
        detail::mm_fail(path, lineno, "index out of bounds");
      double x;
      try {
        x = parse_double(val);
      } catch (const std::runtime_error&) {
        detail::mm_fail(path, lineno, "non-real value '" + val + "'");
      }
      m((std::size_t)(i - 1), (std::size_t)(j - 1)) = x;
      if (h.symmetric) m((std::size_t)(j - 1), (std::size_t)(i - 1)) = x;
    }
  } else {
    // Column-major; symmetric array storage holds the lower triangle.
    for (long long j = 0; j < cols; ++j) {
      const long long i0 = h.symmetric ? j : 0;
      for (long long i = i0; i < rows; ++i) {
        std::string val;
        do {
          if (!std::getline(in, line))
            detail::mm_fail(path, lineno + 1, "unexpected end of file");
          ++lineno;
        } while (line.find_first_not_of(" \t\r") == std::string::npos);
        std::istringstream entry(line);
        if (!(entry >> val)) detail::mm_fail(path, lineno, "missing value");
        std::string extra;
        if (entry >> extra)
          detail::mm_fail(path, lineno, "array format holds one value per line");
        double x;
        try {
          x = parse_double(val);
        } catch (const std::runtime_error&) {
          detail::mm_fail(path, lineno, "non-real value '" + val + "'");
        }
        m((std::size_t)i, (std::size_t)j) = x;
        if (h.symmetric) m((std::size_t)j, (std::size_t)i) = x;
      }
    }
  }
  return m;
}

/// Write in "array real general" format with shortest-round-trip floats,
/// so write -> read restores the entries bit for bit.
inline void matrix_market_write(const DenseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("matrix market: cannot write " + path);
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i)
      out << format_double(m(i, j)) << "\n";
  if (!out) throw std::runtime_error("matrix market: write failed: " + path);
}

}  // namespace kaug
