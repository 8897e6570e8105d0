#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "srmcf/common.hpp"
#include "srmcf/field.hpp"

namespace srmcf {

/// Shortest text that reads back to the same double (17 significant digits).
[[nodiscard]] inline std::string num17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

// ---- SRMCF1 snapshots ----------------------------------------------------------------

inline void write_snapshot(std::ostream& os, const ScalarField& u) {
  if (u.values.size() != u.grid.size()) throw Error(ErrorCode::GridMismatch, "value count differs from grid size");
  os << "SRMCF1\n";
  auto line = [&](const char* key, auto get) {
    os << key << ':';
    for (const auto& a : u.grid.axes) os << ' ' << get(a);
    os << '\n';
  };
  line("dims", [](const Axis& a) { return std::to_string(a.count); });
  line("spacing", [](const Axis& a) { return num17(a.spacing); });
  line("origin", [](const Axis& a) { return num17(a.origin); });
  line("periodic", [](const Axis& a) { return std::string(a.periodic ? "1" : "0"); });
  os << "time: " << num17(u.time) << "\n\n";
  for (double v : u.values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
  if (!os) throw Error(ErrorCode::IoError, "snapshot write failed");
}

[[nodiscard]] inline ScalarField read_snapshot(std::istream& is) {
  auto header = [&](const std::string& key) {
    std::string ln;
    if (!std::getline(is, ln)) throw Error(ErrorCode::IoError, "snapshot truncated before '" + key + "'");
    const std::string pre = key + ":";
    if (ln.rfind(pre, 0) != 0) throw Error(ErrorCode::IoError, "expected '" + key + ":' line, got '" + ln + "'");
    return ln.substr(pre.size());
  };
  std::string magic;
  if (!std::getline(is, magic) || magic != "SRMCF1") throw Error(ErrorCode::IoError, "missing SRMCF1 magic");
  auto words = [](const std::string& s) {
    std::istringstream ss(s);
    std::vector<std::string> w;
    for (std::string t; ss >> t;) w.push_back(t);
    return w;
  };
  auto dims = words(header("dims"));
  auto sp = words(header("spacing"));
  auto org = words(header("origin"));
  auto per = words(header("periodic"));
  auto tm = words(header("time"));
  std::string blank;
  if (!std::getline(is, blank) || !blank.empty()) throw Error(ErrorCode::IoError, "missing blank line after header");
  const std::size_t k = dims.size();
  if (k == 0 || sp.size() != k || org.size() != k || per.size() != k || tm.size() != 1)
    throw Error(ErrorCode::IoError, "inconsistent header lengths");
  ScalarField u;
  try {
    for (std::size_t a = 0; a < k; ++a) {
      Axis ax;
      ax.count = std::stoi(dims[a]);
      ax.spacing = std::stod(sp[a]);
      ax.origin = std::stod(org[a]);
      if (per[a] != "0" && per[a] != "1") throw Error(ErrorCode::IoError, "periodic flag must be 0 or 1");
      ax.periodic = per[a] == "1";
      if (ax.count <= 0) throw Error(ErrorCode::IoError, "non-positive dimension");
      u.grid.axes.push_back(ax);
    }
    u.time = std::stod(tm[0]);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::IoError, "malformed number in header");
  }
  const std::size_t N = u.grid.size();
  u.values.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorCode::IoError, "payload shorter than dims x 8 bytes");
    std::uint64_t bits = 0;
    for (int q = 0; q < 8; ++q) bits |= static_cast<std::uint64_t>(b[q]) << (8 * q);
    u.values[i] = std::bit_cast<double>(bits);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::IoError, "payload longer than dims x 8 bytes");
  return u;
}

inline void write_snapshot(const std::filesystem::path& path, const ScalarField& u) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  write_snapshot(os, u);
}

[[nodiscard]] inline ScalarField read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_snapshot(is);
}

// ---- CSV -----------------------------------------------------------------------------

using CsvRow = std::vector<std::string>;

[[nodiscard]] inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// RFC 4180: CRLF line ends, quoted fields when needed.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const CsvRow& header) : os_(os), width_(header.size()) { row(header); }
  void row(const CsvRow& r) {
    if (r.size() != width_) throw Error(ErrorCode::IoError, "csv row width differs from header");
    for (std::size_t k = 0; k < r.size(); ++k) os_ << (k ? "," : "") << csv_escape(r[k]);
    os_ << "\r\n";
  }

 private:
  std::ostream& os_;
  std::size_t width_;
};

[[nodiscard]] inline std::vector<CsvRow> read_csv(std::istream& is) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (is.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && is.peek() == '\n') is.get(c);
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorCode::IoError, "unterminated quoted csv field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- PGM and 2D slices ---------------------------------------------------------------

struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;  // row-major
  [[nodiscard]] double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  [[nodiscard]] double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
};

/// Binary P5, maxval 255. Values are clipped to [0,1] and scaled.
inline void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  os << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
  for (double v : img.pixels) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * c))));
  }
  if (!os) throw Error(ErrorCode::IoError, "pgm write failed");
}

/// Reads P5 or P2 (maxval <= 255) into [0,1].
[[nodiscard]] inline Image read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    char c;
    while (is.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(is, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t += c;
    }
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2") throw Error(ErrorCode::IoError, "not a P5/P2 pgm: " + path.string());
  Image img;
  int maxval = 0;
  try {
    img.cols = std::stoi(token());
    img.rows = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::IoError, "malformed pgm header");
  }
  if (img.rows <= 0 || img.cols <= 0 || maxval <= 0 || maxval > 255) throw Error(ErrorCode::IoError, "unsupported pgm");
  img.pixels.resize(static_cast<std::size_t>(img.rows) * img.cols);
  for (double& p : img.pixels) {
    int v = 0;
    if (magic == "P5") {
      char c;
      if (!is.get(c)) throw Error(ErrorCode::IoError, "pgm payload truncated");
      v = static_cast<unsigned char>(c);
    } else {
      const std::string t = token();
      if (t.empty()) throw Error(ErrorCode::IoError, "pgm payload truncated");
      v = std::stoi(t);
    }
    p = static_cast<double>(v) / maxval;
  }
  return img;
}

/// 2D slice of a field. 3D: fix `axis` at `index`; the remaining axes become rows, cols.
/// 2D: the whole field, index must be 0.
[[nodiscard]] inline Image extract_slice(const ScalarField& u, int axis, int index) {
  const auto& g = u.grid;
  if (g.dim() != 2 && g.dim() != 3) throw Error(ErrorCode::BadDimensions, "slices need a 2D or 3D field");
  if (axis < 0 || axis >= g.dim()) throw Error(ErrorCode::IndexOutOfRange, "axis out of range");
  if (g.dim() == 2) {
    if (index != 0) throw Error(ErrorCode::IndexOutOfRange, "2D fields only have slice 0");
    return Image{g.axes[0].count, g.axes[1].count, u.values};
  }
  if (index < 0 || index >= g.axes[axis].count) throw Error(ErrorCode::IndexOutOfRange, "slice index out of range");
  int ra = -1, ca = -1;
  for (int a = 0; a < 3; ++a)
    if (a != axis) (ra < 0 ? ra : ca) = a;
  Image img{g.axes[ra].count, g.axes[ca].count, {}};
  img.pixels.resize(static_cast<std::size_t>(img.rows) * img.cols);
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      std::size_t node = static_cast<std::size_t>(index) * g.stride(axis) + static_cast<std::size_t>(r) * g.stride(ra) +
                         static_cast<std::size_t>(c) * g.stride(ca);
      img.at(r, c) = u.values[node];
    }
  return img;
}

/// Min-max rescale to [0,1]; a constant image maps to 0.
[[nodiscard]] inline Image normalized(Image img) {
  if (img.pixels.empty()) return img;
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double a = *lo, b = *hi;
  for (double& p : img.pixels) p = b > a ? (p - a) / (b - a) : 0.0;
  return img;
}

inline void write_image_csv(std::ostream& os, const Image& img) {
  CsvWriter w(os, {"row", "col", "value"});
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) w.row({std::to_string(r), std::to_string(c), num17(img.at(r, c))});
}

}  // namespace srmcf
