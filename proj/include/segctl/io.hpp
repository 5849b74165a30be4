#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "segctl/grid.hpp"

namespace segctl {

enum class ImageFormat { pgm, ppm, rawf };

inline ImageFormat format_from_path(const std::string& path) {
  auto ends_with = [&](const char* ext) {
    const std::size_t n = std::strlen(ext);
    return path.size() >= n && path.compare(path.size() - n, n, ext) == 0;
  };
  if (ends_with(".pgm")) return ImageFormat::pgm;
  if (ends_with(".ppm")) return ImageFormat::ppm;
  return ImageFormat::rawf;
}

namespace detail {

inline std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::unreadable_file, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
inline bool next_token(const std::vector<unsigned char>& buf, std::size_t& pos, std::string& tok) {
  tok.clear();
  while (pos < buf.size()) {
    const unsigned char c = buf[pos];
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < buf.size() && !std::isspace(buf[pos])) tok.push_back(static_cast<char>(buf[pos++]));
  return !tok.empty();
}

inline long parse_positive(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v < 1) throw Error(errc::malformed_header, what);
    return v;
  } catch (const std::logic_error&) {
    throw Error(errc::malformed_header, what);
  }
}

inline ImageVolume load_netpbm(const std::vector<unsigned char>& buf, int channels) {
  std::size_t pos = 0;
  std::string tok;
  const char* magic = channels == 1 ? "P5" : "P6";
  if (!next_token(buf, pos, tok) || tok != magic)
    throw Error(errc::malformed_header, std::string("expected ") + magic);
  std::string w, h, m;
  if (!next_token(buf, pos, w) || !next_token(buf, pos, h) || !next_token(buf, pos, m))
    throw Error(errc::malformed_header, "incomplete netpbm header");
  const long width = parse_positive(w, "bad width");
  const long height = parse_positive(h, "bad height");
  const long maxval = parse_positive(m, "bad maxval");
  if (maxval > 255) throw Error(errc::unsupported_depth, "only 8-bit netpbm is supported");
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = static_cast<std::size_t>(width * height * channels);
  if (pos > buf.size() || buf.size() - pos < need)
    throw Error(errc::truncated_payload, "netpbm payload shorter than header promises");
  ImageVolume img(Dims::make2(static_cast<int>(width), static_cast<int>(height)), channels);
  const double scale = 255.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < need; ++i) img.values()[i] = buf[pos + i] * scale;
  return img;
}

struct RawfHeader {
  Dims dims;
  int channels = 1;
  std::size_t payload_offset = 0;
};

inline RawfHeader parse_rawf_header(const std::vector<unsigned char>& buf) {
  std::size_t eol = 0;
  while (eol < buf.size() && buf[eol] != '\n') ++eol;
  if (buf.empty() || eol == buf.size()) throw Error(errc::malformed_header, "missing RAWF header line");
  std::istringstream line(std::string(buf.begin(), buf.begin() + static_cast<long>(eol)));
  std::string magic, version;
  int rank = 0;
  if (!(line >> magic >> version >> rank) || magic != "RAWF" || version != "v1")
    throw Error(errc::malformed_header, "expected 'RAWF v1 <d> ...'");
  if (rank != 2 && rank != 3) throw Error(errc::malformed_header, "RAWF rank must be 2 or 3");
  std::vector<std::string> ext(static_cast<std::size_t>(rank));
  std::string ch;
  for (auto& e : ext)
    if (!(line >> e)) throw Error(errc::malformed_header, "missing RAWF extent");
  if (!(line >> ch)) throw Error(errc::malformed_header, "missing RAWF channel count");
  std::string extra;
  if (line >> extra) throw Error(errc::malformed_header, "trailing tokens in RAWF header");
  RawfHeader hdr;
  // Header lists axes slowest first; the last listed axis is x.
  if (rank == 2) {
    hdr.dims = Dims::make2(static_cast<int>(parse_positive(ext[1], "bad extent")),
                           static_cast<int>(parse_positive(ext[0], "bad extent")));
  } else {
    hdr.dims = Dims::make3(static_cast<int>(parse_positive(ext[2], "bad extent")),
                           static_cast<int>(parse_positive(ext[1], "bad extent")),
                           static_cast<int>(parse_positive(ext[0], "bad extent")));
  }
  hdr.channels = static_cast<int>(parse_positive(ch, "bad channel count"));
  hdr.payload_offset = eol + 1;
  return hdr;
}

inline float read_f32_le(const unsigned char* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

inline void write_f32_le(std::string& out, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xffu));
}

inline std::string rawf_header(const Dims& d, int channels) {
  std::ostringstream os;
  if (d.rank == 2)
    os << "RAWF v1 2 " << d.ny << ' ' << d.nx << ' ' << channels << '\n';
  else
    os << "RAWF v1 3 " << d.nz << ' ' << d.ny << ' ' << d.nx << ' ' << channels << '\n';
  return os.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::unreadable_file, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

/// Loads an image. Netpbm intensities are rescaled to [0, 255]; RAWF floats are kept as-is.
inline ImageVolume load_image(const std::string& path, ImageFormat format) {
  const auto buf = detail::read_bytes(path);
  if (format == ImageFormat::pgm) return detail::load_netpbm(buf, 1);
  if (format == ImageFormat::ppm) return detail::load_netpbm(buf, 3);
  const auto hdr = detail::parse_rawf_header(buf);
  const std::size_t count = hdr.dims.size() * static_cast<std::size_t>(hdr.channels);
  if (buf.size() - hdr.payload_offset < count * 4)
    throw Error(errc::truncated_payload, "RAWF payload shorter than header promises");
  ImageVolume img(hdr.dims, hdr.channels);
  for (std::size_t i = 0; i < count; ++i)
    img.values()[i] = detail::read_f32_le(buf.data() + hdr.payload_offset + 4 * i);
  if (!img.finite()) throw Error(errc::non_finite, "RAWF payload contains NaN or Inf");
  return img;
}

inline ImageVolume load_image(const std::string& path) { return load_image(path, format_from_path(path)); }

inline void save_rawf(const std::string& path, const ImageVolume& img) {
  std::string out = detail::rawf_header(img.dims(), img.channels());
  for (double v : img.values()) detail::write_f32_le(out, static_cast<float>(v));
  detail::write_file(path, out);
}

inline void save_rawf(const std::string& path, const ScalarField& f) {
  std::string out = detail::rawf_header(f.dims(), 1);
  for (double v : f.values()) detail::write_f32_le(out, static_cast<float>(v));
  detail::write_file(path, out);
}

inline void save_rawf(const std::string& path, const LabelMap& labels) {
  std::string out = detail::rawf_header(labels.dims(), 1);
  for (int v : labels.values()) detail::write_f32_le(out, static_cast<float>(v));
  detail::write_file(path, out);
}

/// Reads an integer label map from any supported image format (first channel, rounded).
inline LabelMap load_labels(const std::string& path) {
  const ImageVolume img = load_image(path);
  LabelMap labels(img.dims(), 0);
  for (std::size_t k = 0; k < labels.size(); ++k) labels[k] = static_cast<int>(std::lround(img(k, 0)));
  return labels;
}

inline void save_pgm(const std::string& path, const ImageVolume& img) {
  if (img.dims().rank != 2) throw Error(errc::invalid_argument, "PGM output needs a 2D image");
  std::ostringstream os;
  os << "P5\n" << img.dims().nx << ' ' << img.dims().ny << "\n255\n";
  std::string out = os.str();
  for (std::size_t k = 0; k < img.voxels(); ++k)
    out.push_back(static_cast<char>(std::clamp<long>(std::lround(img(k, 0)), 0, 255)));
  detail::write_file(path, out);
}

}  // namespace segctl
