#pragma once
// Text and image formats: two-column CSV data, round-trip number formatting
// and 8-bit PGM (P2 and P5).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mewfit/core_model.hpp"
#include "mewfit/denoise.hpp"
#include "mewfit/errors.hpp"

namespace mewfit {

/// Shortest-safe round-trip text for a double (17 significant digits).
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads X,Y pairs. Blank lines and lines starting with '#' are ignored; the
/// first data line is taken as a header when neither field is numeric.
inline RawDataset read_csv(std::istream& in) {
  std::vector<double> x, y;
  std::string line;
  std::size_t lineno = 0;
  bool seen_first = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = detail::split_fields(t);
    if (f.size() != 2) {
      throw ParseError("expected 2 comma-separated columns, found " + std::to_string(f.size()), lineno);
    }
    double a = 0.0, b = 0.0;
    const bool ok_a = detail::parse_number(f[0], a), ok_b = detail::parse_number(f[1], b);
    if (!seen_first) {
      seen_first = true;
      if (!ok_a && !ok_b) continue;  // header
    }
    if (!ok_a) throw ParseError("not a finite number: '" + std::string(f[0]) + "'", lineno);
    if (!ok_b) throw ParseError("not a finite number: '" + std::string(f[1]) + "'", lineno);
    x.push_back(a);
    y.push_back(b);
  }
  if (x.size() < 2) throw InvalidInput("csv: need at least 2 data rows, found " + std::to_string(x.size()));
  return RawDataset(std::move(x), std::move(y));
}

inline RawDataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return read_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line(), path);
  }
}

inline void write_csv(std::ostream& out, const RawDataset& d) {
  out << "X,Y\n";
  for (std::size_t i = 0; i < d.size(); ++i) out << fmt(d.x()[i]) << ',' << fmt(d.y()[i]) << '\n';
}

enum class PgmFormat { ascii, binary };  // P2, P5

struct PgmImage {
  ImageGrid image;
  PgmFormat format = PgmFormat::binary;
};

namespace detail {

// Next whitespace-delimited header token, skipping '#' comments.
inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

inline std::size_t pgm_size(std::istream& in, const char* what) {
  const auto tok = pgm_token(in);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw InvalidInput(std::string("pgm: bad ") + what + " '" + tok + "'");
  }
  return v;
}

}  // namespace detail

/// Reads a maxval-255 PGM; intensities become gray / 255.
inline PgmImage read_pgm(std::istream& in) {
  const auto magic = detail::pgm_token(in);
  PgmImage out;
  if (magic == "P2") out.format = PgmFormat::ascii;
  else if (magic == "P5") out.format = PgmFormat::binary;
  else throw InvalidInput("pgm: unsupported magic '" + magic + "' (expected P2 or P5)");
  const auto cols = detail::pgm_size(in, "width");
  const auto rows = detail::pgm_size(in, "height");
  const auto maxval = detail::pgm_size(in, "maxval");
  if (rows == 0 || cols == 0) throw InvalidInput("pgm: empty image");
  if (maxval != 255) throw InvalidInput("pgm: maxval " + std::to_string(maxval) + " not supported (need 255)");
  out.image = ImageGrid(rows, cols);
  auto px = out.image.values();
  if (out.format == PgmFormat::binary) {
    std::vector<unsigned char> buf(px.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw InvalidInput("pgm: truncated pixel data");
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = buf[k] / 255.0;
  } else {
    for (std::size_t k = 0; k < px.size(); ++k) {
      const auto tok = detail::pgm_token(in);
      if (tok.empty()) throw InvalidInput("pgm: truncated pixel data");
      unsigned v = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || v > 255) {
        throw InvalidInput("pgm: bad gray value '" + tok + "' at pixel " + std::to_string(k));
      }
      px[k] = v / 255.0;
    }
  }
  return out;
}

inline PgmImage read_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return read_pgm(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

inline unsigned char to_gray(double v) {
  return static_cast<unsigned char>(std::lround(std::min(1.0, std::max(0.0, v)) * 255.0));
}

inline void write_pgm(std::ostream& out, const ImageGrid& img, PgmFormat format) {
  out << (format == PgmFormat::binary ? "P5" : "P2") << '\n' << img.cols() << ' ' << img.rows() << "\n255\n";
  if (format == PgmFormat::binary) {
    std::vector<unsigned char> buf(img.size());
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = to_gray(img.values()[k]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    return;
  }
  for (std::size_t i = 0; i < img.rows(); ++i) {
    for (std::size_t j = 0; j < img.cols(); ++j) {
      out << static_cast<unsigned>(to_gray(img(i, j))) << (j + 1 < img.cols() ? ' ' : '\n');
    }
  }
}

inline void write_pgm_file(const std::string& path, const ImageGrid& img, PgmFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_pgm(out, img, format);
}

/// Rounds every intensity to its 8-bit gray level, as a PGM round trip would.
inline ImageGrid quantize(const ImageGrid& img) {
  ImageGrid q = img;
  for (auto& v : q.values()) v = to_gray(v) / 255.0;
  return q;
}

}  // namespace mewfit
