#pragma once

// MatrixMarket coordinate I/O. Files are 1-based, everything in memory is
// 0-based; the conversion happens here and nowhere else.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "optspace/error.hpp"
#include "optspace/sparse.hpp"

namespace optspace::mm {

inline constexpr const char* kHeader = "%%MatrixMarket matrix coordinate real general";

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Accepts `coordinate real general` (and `integer general`, read as real).
inline ObservedMatrix read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("MatrixMarket: empty input");
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError("MatrixMarket: missing %%MatrixMarket banner");
    if (detail::lower(object) != "matrix" || detail::lower(format) != "coordinate") {
      throw ParseError("MatrixMarket: only 'matrix coordinate' files are supported");
    }
    const auto f = detail::lower(field);
    if (f != "real" && f != "integer" && f != "double") {
      throw ParseError("MatrixMarket: unsupported field '" + field + "'");
    }
    if (detail::lower(symmetry) != "general") {
      throw ParseError("MatrixMarket: unsupported symmetry '" + symmetry + "'");
    }
  }

  long long m = -1, n = -1, nnz = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    if (!(ss >> m >> n >> nnz) || m < 0 || n < 0 || nnz < 0) {
      throw ParseError("MatrixMarket: bad size line '" + line + "'");
    }
    break;
  }
  if (m < 0) throw ParseError("MatrixMarket: missing size line");

  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  while (static_cast<long long>(entries.size()) < nnz && std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(ss >> i >> j >> v)) throw ParseError("MatrixMarket: bad entry line '" + line + "'");
    if (i < 1 || i > m || j < 1 || j > n) {
      throw ParseError("MatrixMarket: entry index out of range in '" + line + "'");
    }
    entries.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), v});
  }
  if (static_cast<long long>(entries.size()) != nnz) {
    throw ParseError("MatrixMarket: expected " + std::to_string(nnz) + " entries, found " +
                     std::to_string(entries.size()));
  }
  try {
    return ObservedMatrix(static_cast<Index>(m), static_cast<Index>(n), std::move(entries));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("MatrixMarket: ") + e.what());
  }
}

inline ObservedMatrix read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read(in);
}

inline void write(std::ostream& out, const ObservedMatrix& obs) {
  out << kHeader << '\n' << obs.rows() << ' ' << obs.cols() << ' ' << obs.size() << '\n';
  char buf[64];
  for (const auto& e : obs.entries()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.value);
    out << (e.row + 1) << ' ' << (e.col + 1) << ' ' << buf << '\n';
  }
}

inline void write_file(const std::string& path, const ObservedMatrix& obs) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  write(out, obs);
}

}  // namespace optspace::mm
