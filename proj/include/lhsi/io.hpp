#pragma once

// File formats. HSC1: "HSC1" magic, LE u32 n_lambda/ny/nx, f32 wavelengths,
// f32 data (channel-major, row-major within a channel). IMG1: "IMG1" magic,
// LE u32 ny/nx, f32 row-major data. Both round-trip losslessly at 32-bit
// precision. PNG preview: 8-bit grayscale, min-max normalized.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <zlib.h>

#include "lhsi/analysis.hpp"
#include "lhsi/core.hpp"

namespace lhsi {

namespace detail {

inline void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u32be(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

inline void put_f32le(std::string& out, double v) {
  put_u32le(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
}

class ByteReader {
 public:
  ByteReader(const std::string& path, std::string bytes)
      : path_(path), bytes_(std::move(bytes)) {}

  uint32_t u32le() {
    need(4);
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(bytes_.data()) + pos_;
    pos_ += 4;
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) |
           (static_cast<uint32_t>(p[3]) << 24);
  }

  double f32le() { return std::bit_cast<float>(u32le()); }

  void expect_magic(const char* magic) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
      throw FormatError(FormatError::Code::bad_magic,
                        path_ + ": bad magic, expected " + magic);
    pos_ += 4;
  }

  void expect_eof() const {
    if (pos_ != bytes_.size())
      throw FormatError(FormatError::Code::bad_payload,
                        path_ + ": trailing bytes after payload");
  }

 private:
  void need(size_t n) const {
    if (pos_ + n > bytes_.size())
      throw FormatError(FormatError::Code::truncated, path_ + ": truncated file");
  }

  std::string path_;
  std::string bytes_;
  size_t pos_ = 0;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError(FormatError::Code::io, path + ": cannot open for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad())
    throw FormatError(FormatError::Code::io, path + ": read failed");
  return bytes;
}

inline void spew(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw FormatError(FormatError::Code::io, path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw FormatError(FormatError::Code::io, path + ": write failed");
}

constexpr uint64_t kMaxElements = 1ull << 28;  // 1 GiB of f32, sanity cap

}  // namespace detail

inline void write_cube(const std::string& path, const HyperspectralCube& v) {
  for (double x : v.data)
    if (!std::isfinite(x))
      throw FormatError(FormatError::Code::bad_payload,
                        path + ": refusing to write non-finite cube");
  std::string out;
  out.reserve(16 + 4 * (v.wavelengths_nm.size() + v.data.size()));
  out += "HSC1";
  detail::put_u32le(out, static_cast<uint32_t>(v.nl));
  detail::put_u32le(out, static_cast<uint32_t>(v.ny));
  detail::put_u32le(out, static_cast<uint32_t>(v.nx));
  for (double w : v.wavelengths_nm) detail::put_f32le(out, w);
  for (double x : v.data) detail::put_f32le(out, x);
  detail::spew(path, out);
}

inline HyperspectralCube read_cube(const std::string& path) {
  detail::ByteReader r(path, detail::slurp(path));
  r.expect_magic("HSC1");
  const uint32_t nl = r.u32le(), ny = r.u32le(), nx = r.u32le();
  if (nl == 0 || ny == 0 || nx == 0 ||
      static_cast<uint64_t>(nl) * ny * nx > detail::kMaxElements)
    throw FormatError(FormatError::Code::bad_payload,
                      path + ": implausible dimensions");
  HyperspectralCube v(static_cast<int>(nl), static_cast<int>(ny),
                      static_cast<int>(nx));
  for (uint32_t l = 0; l < nl; ++l) {
    v.wavelengths_nm[l] = r.f32le();
    if (l > 0 && !(v.wavelengths_nm[l] > v.wavelengths_nm[l - 1]))
      throw FormatError(FormatError::Code::bad_payload,
                        path + ": wavelengths not strictly increasing");
  }
  for (size_t i = 0; i < v.data.size(); ++i) {
    v.data[i] = r.f32le();
    if (!std::isfinite(v.data[i]))
      throw FormatError(FormatError::Code::bad_payload,
                        path + ": non-finite value in payload");
  }
  r.expect_eof();
  return v;
}

inline void write_image(const std::string& path, const Image& im) {
  for (double x : im.v)
    if (!std::isfinite(x))
      throw FormatError(FormatError::Code::bad_payload,
                        path + ": refusing to write non-finite image");
  std::string out;
  out.reserve(12 + 4 * im.v.size());
  out += "IMG1";
  detail::put_u32le(out, static_cast<uint32_t>(im.ny));
  detail::put_u32le(out, static_cast<uint32_t>(im.nx));
  for (double x : im.v) detail::put_f32le(out, x);
  detail::spew(path, out);
}

inline Image read_image(const std::string& path) {
  detail::ByteReader r(path, detail::slurp(path));
  r.expect_magic("IMG1");
  const uint32_t ny = r.u32le(), nx = r.u32le();
  if (ny == 0 || nx == 0 || static_cast<uint64_t>(ny) * nx > detail::kMaxElements)
    throw FormatError(FormatError::Code::bad_payload,
                      path + ": implausible dimensions");
  Image im(static_cast<int>(ny), static_cast<int>(nx));
  for (size_t i = 0; i < im.v.size(); ++i) {
    im.v[i] = r.f32le();
    if (!std::isfinite(im.v[i]))
      throw FormatError(FormatError::Code::bad_payload,
                        path + ": non-finite value in payload");
  }
  r.expect_eof();
  return im;
}

// 8-bit grayscale PNG, min-max normalized (min -> 0, max -> 255; constant
// images map to 0). For human inspection only; not a data format.
inline void write_png_preview(const std::string& path, const Image& im) {
  if (im.ny <= 0 || im.nx <= 0)
    throw ShapeError("write_png_preview: empty image");
  double mn = im.v[0], mx = im.v[0];
  for (double x : im.v) {
    if (!std::isfinite(x))
      throw FormatError(FormatError::Code::bad_payload,
                        path + ": non-finite value in preview source");
    mn = std::min(mn, x);
    mx = std::max(mx, x);
  }
  const double range = mx - mn;
  std::vector<unsigned char> raw(static_cast<size_t>(im.ny) * (im.nx + 1));
  for (int y = 0; y < im.ny; ++y) {
    unsigned char* row = raw.data() + static_cast<size_t>(y) * (im.nx + 1);
    row[0] = 0;  // filter type: none
    for (int x = 0; x < im.nx; ++x) {
      const double v = range > 0.0 ? (im.at(y, x) - mn) / range * 255.0 : 0.0;
      row[x + 1] = static_cast<unsigned char>(std::lround(v));
    }
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw FormatError(FormatError::Code::io, path + ": deflate failed");
  comp.resize(comp_size);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  auto chunk = [&out](const char* type, const std::string& payload) {
    std::string body = std::string(type, 4) + payload;
    detail::put_u32be(out, static_cast<uint32_t>(payload.size()));
    out += body;
    detail::put_u32be(out, static_cast<uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(body.data()),
              static_cast<uInt>(body.size()))));
  };
  std::string ihdr;
  detail::put_u32be(ihdr, static_cast<uint32_t>(im.nx));
  detail::put_u32be(ihdr, static_cast<uint32_t>(im.ny));
  ihdr += '\x08';  // bit depth
  ihdr += '\x00';  // color type: grayscale
  ihdr += '\x00';  // compression
  ihdr += '\x00';  // filter
  ihdr += '\x00';  // interlace
  chunk("IHDR", ihdr);
  chunk("IDAT", std::string(reinterpret_cast<char*>(comp.data()), comp.size()));
  chunk("IEND", "");
  detail::spew(path, out);
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline void write_cond_csv(const std::string& path,
                           const std::vector<CondSweepRow>& rows) {
  std::string out = "num_points,separation_px,separation_superpx,condition_number\n";
  for (const auto& r : rows) {
    out += std::to_string(r.num_points);
    out += ',';
    out += detail::fmt_double(r.separation_px);
    out += ',';
    out += detail::fmt_double(r.separation_superpx);
    out += ',';
    out += detail::fmt_double(r.condition_number);
    out += '\n';
  }
  detail::spew(path, out);
}

inline void write_spectrum_csv(const std::string& path,
                               const std::vector<double>& wavelengths_nm,
                               const std::vector<double>& values) {
  if (wavelengths_nm.size() != values.size())
    throw ShapeError("write_spectrum_csv: length mismatch");
  std::string out = "wavelength_nm,value\n";
  for (size_t i = 0; i < values.size(); ++i) {
    out += detail::fmt_double(wavelengths_nm[i]);
    out += ',';
    out += detail::fmt_double(values[i]);
    out += '\n';
  }
  detail::spew(path, out);
}

}  // namespace lhsi
