#include "invar/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace invar::io {

namespace {

[[noreturn]] void io_error(const std::string& what) { throw Error(ErrorCode::Io, what); }

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error("cannot write " + path.string());
  return out;
}

// Netpbm header tokenizer that skips '#' comments.
struct PnmCursor {
  const std::vector<unsigned char>& bytes;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  }

  long next_int() {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) io_error("malformed PGM header");
    return v;
  }
};

struct PgmData {
  long width = 0, height = 0, maxval = 0;
  std::vector<long> samples;
};

PgmData parse_pgm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    io_error(path.string() + ": not a P2/P5 PGM");
  const bool binary = bytes[1] == '5';
  PnmCursor cur{bytes, 2};
  PgmData d;
  d.width = cur.next_int();
  d.height = cur.next_int();
  d.maxval = cur.next_int();
  if (d.width <= 0 || d.height <= 0 || d.maxval <= 0 || d.maxval > 65535)
    io_error(path.string() + ": bad PGM dimensions or maxval");
  const std::size_t n = static_cast<std::size_t>(d.width * d.height);
  d.samples.resize(n);
  if (binary) {
    ++cur.pos;  // exactly one whitespace byte after maxval
    const std::size_t bps = d.maxval > 255 ? 2 : 1;
    if (bytes.size() < cur.pos + n * bps) io_error(path.string() + ": truncated PGM");
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t o = cur.pos + i * bps;
      d.samples[i] = bps == 1 ? bytes[o] : (long(bytes[o]) << 8) | bytes[o + 1];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) d.samples[i] = cur.next_int();
  }
  return d;
}

}  // namespace

Raster read_pgm(const std::filesystem::path& path) {
  const PgmData d = parse_pgm(path);
  if (d.maxval != 255) io_error(path.string() + ": only 8-bit grayscale PGM is supported as an image");
  Raster img(d.height, d.width);
  for (long i = 0; i < d.width * d.height; ++i)
    img(i / d.width, i % d.width) = static_cast<double>(d.samples[i]) / 255.0;
  return img;
}

LabelImage read_labels_pgm(const std::filesystem::path& path) {
  const PgmData d = parse_pgm(path);
  LabelImage labels(d.height, d.width);
  for (long i = 0; i < d.width * d.height; ++i)
    labels(i / d.width, i % d.width) = static_cast<int>(d.samples[i]);
  return labels;
}

namespace {

unsigned char to_byte(double v) {
  if (!std::isfinite(v)) v = 0.0;
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Raster& img, bool binary) {
  auto out = open_out(path);
  out << (binary ? "P5" : "P2") << '\n' << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const unsigned char b = to_byte(img(y, x));
      if (binary)
        out.put(static_cast<char>(b));
      else
        out << int(b) << (x + 1 == img.cols() ? '\n' : ' ');
    }
  }
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.cols() << ' ' << mask.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x) out.put(static_cast<char>(mask(y, x) ? 255 : 0));
}

void write_labels_pgm16(const std::filesystem::path& path, const LabelImage& labels) {
  require(labels.size() == 0 || (labels.minCoeff() >= 0 && labels.maxCoeff() <= 65535),
          "write_labels_pgm16: labels must lie in [0, 65535]");
  auto out = open_out(path);
  out << "P5\n" << labels.cols() << ' ' << labels.rows() << "\n65535\n";
  for (Eigen::Index y = 0; y < labels.rows(); ++y) {
    for (Eigen::Index x = 0; x < labels.cols(); ++x) {
      const auto v = static_cast<std::uint16_t>(labels(y, x));
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  }
}

Raster read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    io_error(path.string() + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    io_error(path.string() + ": " + image.message);
  }
  Raster img(image.height, image.width);
  for (png_uint_32 y = 0; y < image.height; ++y)
    for (png_uint_32 x = 0; x < image.width; ++x)
      img(y, x) = static_cast<double>(buffer[y * image.width + x]) / 255.0;
  return img;
}

void write_png(const std::filesystem::path& path, const Raster& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.cols());
  image.height = static_cast<png_uint_32>(img.rows());
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(img.size()));
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x) buffer[y * img.cols() + x] = to_byte(img(y, x));
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
    io_error(path.string() + ": " + image.message);
}

Raster read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  static constexpr unsigned char kPng[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (in.gcount() == 8 && std::memcmp(magic.data(), kPng, 8) == 0) return read_png(path);
  if (in.gcount() >= 2 && magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) return read_pgm(path);
  io_error(path.string() + ": unrecognised image format (expected PGM or PNG)");
}

namespace {

template <typename T>
void put_le(std::ofstream& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  const char b[4] = {char(bits & 0xff), char((bits >> 8) & 0xff), char((bits >> 16) & 0xff),
                     char((bits >> 24) & 0xff)};
  out.write(b, 4);
}

template <typename T>
T get_le(const std::vector<unsigned char>& bytes, std::size_t offset) {
  const std::uint32_t bits = std::uint32_t(bytes[offset]) | (std::uint32_t(bytes[offset + 1]) << 8) |
                             (std::uint32_t(bytes[offset + 2]) << 16) |
                             (std::uint32_t(bytes[offset + 3]) << 24);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

}  // namespace

void write_flo(const std::filesystem::path& path, const VectorField& field) {
  auto out = open_out(path);
  put_le(out, kFloTag);
  put_le(out, static_cast<std::int32_t>(field.width()));
  put_le(out, static_cast<std::int32_t>(field.height()));
  for (Eigen::Index y = 0; y < field.height(); ++y) {
    for (Eigen::Index x = 0; x < field.width(); ++x) {
      put_le(out, static_cast<float>(field.u(y, x)));
      put_le(out, static_cast<float>(field.v(y, x)));
    }
  }
}

VectorField read_flo(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 12 || get_le<float>(bytes, 0) != kFloTag) io_error(path.string() + ": bad .flo tag");
  const auto w = get_le<std::int32_t>(bytes, 4);
  const auto h = get_le<std::int32_t>(bytes, 8);
  if (w <= 0 || h <= 0 || bytes.size() < 12 + std::size_t(w) * h * 8)
    io_error(path.string() + ": truncated .flo");
  VectorField f(h, w);
  std::size_t o = 12;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.u(y, x) = get_le<float>(bytes, o);
      f.v(y, x) = get_le<float>(bytes, o + 4);
      o += 8;
    }
  }
  return f;
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) io_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        io_error(path.string() + ": non-numeric CSV cell '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) io_error(path.string() + ": ragged CSV");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) io_error(path.string() + ": empty CSV");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::string to_csv(const Eigen::MatrixXd& m) {
  std::string s;
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
      s.append(buf, res.ptr);
      s.push_back(j + 1 == m.cols() ? '\n' : ',');
    }
  }
  return s;
}

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) { write_text(path, to_csv(m)); }

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace invar::io
