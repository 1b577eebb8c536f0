#pragma once

// PLY vertex I/O. Reads ascii and binary_little_endian files carrying
// x,y,z and optionally nx,ny,nz and red,green,blue; other properties and
// elements are skipped. Writes float positions/normals and uchar colours.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "facelaser/cloud.hpp"
#include "facelaser/errors.hpp"

namespace facelaser {

enum class PlyEncoding { ascii, binary_little_endian };

namespace ply_detail {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

inline bool parse_scalar(const std::string& name, Scalar& out) {
  static const std::pair<const char*, Scalar> table[] = {
      {"char", Scalar::i8},    {"int8", Scalar::i8},     {"uchar", Scalar::u8},   {"uint8", Scalar::u8},
      {"short", Scalar::i16},  {"int16", Scalar::i16},   {"ushort", Scalar::u16}, {"uint16", Scalar::u16},
      {"int", Scalar::i32},    {"int32", Scalar::i32},   {"uint", Scalar::u32},   {"uint32", Scalar::u32},
      {"float", Scalar::f32},  {"float32", Scalar::f32}, {"double", Scalar::f64}, {"float64", Scalar::f64},
  };
  for (const auto& [n, s] : table) {
    if (name == n) {
      out = s;
      return true;
    }
  }
  return false;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  return v;
}

inline double read_binary(Scalar s, const char* p) {
  switch (s) {
    case Scalar::i8: return load_le<std::int8_t>(p);
    case Scalar::u8: return load_le<std::uint8_t>(p);
    case Scalar::i16: return load_le<std::int16_t>(p);
    case Scalar::u16: return load_le<std::uint16_t>(p);
    case Scalar::i32: return load_le<std::int32_t>(p);
    case Scalar::u32: return load_le<std::uint32_t>(p);
    case Scalar::f32: return load_le<float>(p);
    case Scalar::f64: return load_le<double>(p);
  }
  return 0.0;
}

template <typename T>
void store_le(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  }
  out.append(b, sizeof(T));
}

inline void append_float(std::string& out, float v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

// Slots of the vertex fields we understand, -1 when absent.
struct VertexLayout {
  int x = -1, y = -1, z = -1;
  int nx = -1, ny = -1, nz = -1;
  int r = -1, g = -1, b = -1;
};

inline VertexLayout layout_of(const Element& e) {
  VertexLayout l;
  for (std::size_t i = 0; i < e.properties.size(); ++i) {
    const std::string& n = e.properties[i].name;
    const int s = static_cast<int>(i);
    if (n == "x") l.x = s;
    else if (n == "y") l.y = s;
    else if (n == "z") l.z = s;
    else if (n == "nx") l.nx = s;
    else if (n == "ny") l.ny = s;
    else if (n == "nz") l.nz = s;
    else if (n == "red" || n == "r") l.r = s;
    else if (n == "green" || n == "g") l.g = s;
    else if (n == "blue" || n == "b") l.b = s;
  }
  return l;
}

inline SurfacePoint to_point(const std::vector<double>& v, const VertexLayout& l, bool normals, bool colors) {
  SurfacePoint p;
  p.position = Vec3(v[l.x], v[l.y], v[l.z]);
  if (normals) p.normal = Vec3(v[l.nx], v[l.ny], v[l.nz]);
  if (colors) {
    p.color = {static_cast<std::uint8_t>(v[l.r]), static_cast<std::uint8_t>(v[l.g]),
               static_cast<std::uint8_t>(v[l.b])};
  }
  return p;
}

}  // namespace ply_detail

/// Parses an in-memory PLY document. `source` only labels error messages.
inline PointCloud parse_ply(const std::string& data, const std::string& source = "<memory>") {
  using namespace ply_detail;
  auto fail = [&](const std::string& msg) -> Error {
    return Error(ErrorCode::ParseError, source + ": " + msg);
  };

  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string& line) -> bool {
    if (pos >= data.size()) return false;
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    line = data.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    ++line_no;
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "ply") throw fail("missing 'ply' magic at line 1");

  PlyEncoding encoding = PlyEncoding::ascii;
  bool have_format = false;
  std::vector<Element> elements;
  bool header_done = false;
  std::string frame;
  while (next_line(line)) {
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "comment") {
      std::string tag;
      if (ss >> tag && tag == "frame") ss >> frame;
      continue;
    }
    if (kw.empty() || kw == "obj_info") continue;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii") encoding = PlyEncoding::ascii;
      else if (fmt == "binary_little_endian") encoding = PlyEncoding::binary_little_endian;
      else throw fail("unsupported format '" + fmt + "' at line " + std::to_string(line_no));
      have_format = true;
    } else if (kw == "element") {
      Element e;
      long long count = -1;
      ss >> e.name >> count;
      if (e.name.empty() || count < 0) throw fail("bad element declaration at line " + std::to_string(line_no));
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (elements.empty()) throw fail("property before element at line " + std::to_string(line_no));
      Property p;
      std::string type;
      ss >> type;
      if (type == "list") {
        std::string ct, it;
        ss >> ct >> it >> p.name;
        if (!parse_scalar(ct, p.count_type) || !parse_scalar(it, p.type)) {
          throw fail("bad list property at line " + std::to_string(line_no));
        }
        p.is_list = true;
      } else {
        ss >> p.name;
        if (!parse_scalar(type, p.type)) {
          throw fail("unknown property type '" + type + "' at line " + std::to_string(line_no));
        }
      }
      if (p.name.empty()) throw fail("unnamed property at line " + std::to_string(line_no));
      elements.back().properties.push_back(p);
    } else if (kw == "end_header") {
      header_done = true;
      break;
    } else {
      throw fail("unexpected header keyword '" + kw + "' at line " + std::to_string(line_no));
    }
  }
  if (!header_done) throw fail("header not terminated by end_header");
  if (!have_format) throw fail("header has no format line");

  const Element* vertex = nullptr;
  for (const auto& e : elements) {
    if (e.name == "vertex") vertex = &e;
  }
  if (vertex == nullptr) throw Error(ErrorCode::MissingField, source + ": no vertex element");
  const VertexLayout layout = layout_of(*vertex);
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
    throw Error(ErrorCode::MissingField, source + ": vertex element lacks x/y/z");
  }
  for (int s : {layout.x, layout.y, layout.z}) {
    if (vertex->properties[s].is_list) throw fail("x/y/z declared as list properties");
  }
  const bool normals = layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0;
  const bool colors = layout.r >= 0 && layout.g >= 0 && layout.b >= 0;

  PointCloud cloud;
  if (!frame.empty()) cloud.frame = frame;
  cloud.has_normals = normals;
  cloud.has_colors = colors;
  cloud.points.reserve(vertex->count);

  if (encoding == PlyEncoding::ascii) {
    for (const auto& e : elements) {
      for (std::size_t row = 0; row < e.count; ++row) {
        // blank lines are not rows
        do {
          if (!next_line(line)) {
            throw fail("element '" + e.name + "' declares " + std::to_string(e.count) + " rows but data ends after " +
                       std::to_string(row) + " (line " + std::to_string(line_no) + ")");
          }
        } while (line.find_first_not_of(" \t") == std::string::npos);
        std::istringstream ss(line);
        std::vector<double> values;
        values.reserve(e.properties.size());
        for (const auto& p : e.properties) {
          double v = 0.0;
          if (!(ss >> v)) throw fail("too few values on line " + std::to_string(line_no));
          if (p.is_list) {
            const auto n = static_cast<long long>(v);
            double item = 0.0;
            for (long long i = 0; i < n; ++i) {
              if (!(ss >> item)) throw fail("truncated list on line " + std::to_string(line_no));
            }
          }
          values.push_back(v);
        }
        if (&e == vertex) cloud.points.push_back(to_point(values, layout, normals, colors));
      }
    }
    return cloud;
  }

  const std::size_t body = pos;
  auto need = [&](std::size_t bytes) {
    if (pos + bytes > data.size()) {
      throw fail("unexpected end of binary data at byte offset " + std::to_string(pos - body) + " (needed " +
                 std::to_string(bytes) + " more bytes)");
    }
  };
  for (const auto& e : elements) {
    for (std::size_t row = 0; row < e.count; ++row) {
      std::vector<double> values;
      values.reserve(e.properties.size());
      for (const auto& p : e.properties) {
        if (p.is_list) {
          need(scalar_size(p.count_type));
          const auto n = static_cast<std::size_t>(read_binary(p.count_type, data.data() + pos));
          pos += scalar_size(p.count_type);
          need(n * scalar_size(p.type));
          pos += n * scalar_size(p.type);
          values.push_back(static_cast<double>(n));
        } else {
          need(scalar_size(p.type));
          values.push_back(read_binary(p.type, data.data() + pos));
          pos += scalar_size(p.type);
        }
      }
      if (&e == vertex) cloud.points.push_back(to_point(values, layout, normals, colors));
    }
  }
  return cloud;
}

inline PointCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  PointCloud cloud = parse_ply(ss.str(), path);
  return cloud;
}

/// Serializes to the PLY dialect read above. Positions and normals are
/// stored as float32.
inline std::string format_ply(const PointCloud& cloud, PlyEncoding encoding = PlyEncoding::binary_little_endian) {
  using namespace ply_detail;
  std::string out;
  out += "ply\n";
  out += encoding == PlyEncoding::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "comment frame " + cloud.frame + "\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals) out += "property float nx\nproperty float ny\nproperty float nz\n";
  if (cloud.has_colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";

  for (const auto& p : cloud.points) {
    float f[6] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                  static_cast<float>(p.position.z()), static_cast<float>(p.normal.x()),
                  static_cast<float>(p.normal.y()),   static_cast<float>(p.normal.z())};
    const int nf = cloud.has_normals ? 6 : 3;
    if (encoding == PlyEncoding::ascii) {
      for (int i = 0; i < nf; ++i) {
        if (i > 0) out += ' ';
        append_float(out, f[i]);
      }
      if (cloud.has_colors) {
        for (int c = 0; c < 3; ++c) out += ' ' + std::to_string(p.color[c]);
      }
      out += '\n';
    } else {
      for (int i = 0; i < nf; ++i) store_le(out, f[i]);
      if (cloud.has_colors) {
        for (int c = 0; c < 3; ++c) store_le(out, p.color[c]);
      }
    }
  }
  return out;
}

inline void save_ply(const PointCloud& cloud, const std::string& path,
                     PlyEncoding encoding = PlyEncoding::binary_little_endian) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw Error(ErrorCode::IoError, "cannot write " + path);
  const std::string data = format_ply(cloud, encoding);
  outf.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!outf) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace facelaser
