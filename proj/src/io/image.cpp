#include "gogan/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gogan::io {

Grayscale Grayscale::filled(int height, int width, double value) {
  return {height, width, std::vector<double>(static_cast<std::size_t>(height) * width, value)};
}

double Grayscale::mean() const {
  if (pixels.empty()) return 0.0;
  return std::accumulate(pixels.begin(), pixels.end(), 0.0) / static_cast<double>(pixels.size());
}

namespace {

// Row-stochastic matrix mapping n input cells onto m output cells by overlap length.
std::vector<std::vector<std::pair<int, double>>> overlap_weights(int n, int m) {
  std::vector<std::vector<std::pair<int, double>>> w(m);
  // Work in units of 1/(n*m) so the cell edges are integers.
  const long in_step = m, out_step = n;
  for (int o = 0; o < m; ++o) {
    const long lo = o * out_step, hi = lo + out_step;
    for (int i = static_cast<int>(lo / in_step); i < n && i * in_step < hi; ++i) {
      const long a = std::max(lo, i * in_step), b = std::min(hi, (i + 1) * in_step);
      if (b > a) w[o].push_back({i, static_cast<double>(b - a) / static_cast<double>(out_step)});
    }
  }
  return w;
}

void check_dims(int h, int w, const char* what) {
  if (h < 1 || w < 1) throw std::invalid_argument(std::string(what) + ": image dimensions must be positive");
}

}  // namespace

Grayscale area_resample(const Grayscale& image, int height, int width) {
  check_dims(image.height, image.width, "area_resample");
  check_dims(height, width, "area_resample");
  if (image.pixels.size() != static_cast<std::size_t>(image.height) * image.width)
    throw std::invalid_argument("area_resample: pixel count does not match dimensions");
  if (height == image.height && width == image.width) return image;
  const auto wr = overlap_weights(image.height, height);
  const auto wc = overlap_weights(image.width, width);
  Grayscale tmp = Grayscale::filled(image.height, width, 0.0);
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < width; ++c) {
      double s = 0;
      for (auto [i, w] : wc[c]) s += w * image.at(r, i);
      tmp.at(r, c) = s;
    }
  Grayscale out = Grayscale::filled(height, width, 0.0);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double s = 0;
      for (auto [i, w] : wr[r]) s += w * tmp.at(i, c);
      out.at(r, c) = s;
    }
  return out;
}

Grayscale density_to_image(const simp::DensityField& field, int height, int width) {
  Grayscale g = Grayscale::filled(field.nely, field.nelx, 0.0);
  for (int iy = 0; iy < field.nely; ++iy)
    for (int ix = 0; ix < field.nelx; ++ix) g.at(iy, ix) = field.at(ix, iy);
  return area_resample(g, height, width);
}

simp::DensityField image_to_density(const Grayscale& image, int nelx, int nely) {
  const Grayscale g = area_resample(image, nely, nelx);
  simp::DensityField f{nelx, nely, std::vector<double>(static_cast<std::size_t>(nelx) * nely)};
  for (int iy = 0; iy < nely; ++iy)
    for (int ix = 0; ix < nelx; ++ix) f.at(ix, iy) = g.at(iy, ix);
  return f;
}

Grayscale from_signed(const std::vector<double>& values, int height, int width, double slack) {
  check_dims(height, width, "from_signed");
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw std::invalid_argument("from_signed: value count does not match dimensions");
  Grayscale g = Grayscale::filled(height, width, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= -1.0 - slack && v <= 1.0 + slack))
      throw std::domain_error("image value " + std::to_string(v) + " at pixel " + std::to_string(i) +
                              " lies outside [-1,1]");
    g.pixels[i] = std::clamp((v + 1.0) / 2.0, 0.0, 1.0);
  }
  return g;
}

std::vector<double> to_signed(const Grayscale& image) {
  std::vector<double> v(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), v.begin(), [](double p) { return 2.0 * p - 1.0; });
  return v;
}

void write_pgm(const std::string& path, const Grayscale& image, const PgmOptions& options) {
  check_dims(image.height, image.width, "write_pgm");
  if (options.bit_depth != 8 && options.bit_depth != 16)
    throw std::invalid_argument("write_pgm: bit depth must be 8 or 16");
  const int maxval = options.bit_depth == 8 ? 255 : 65535;
  std::string body;
  body.reserve(image.pixels.size() * (options.bit_depth / 8));
  for (double p : image.pixels) {
    double v = std::clamp(p, 0.0, 1.0);
    if (options.inverted) v = 1.0 - v;
    const auto q = static_cast<unsigned>(std::lround(v * maxval));
    if (options.bit_depth == 16) body.push_back(static_cast<char>(q >> 8));
    body.push_back(static_cast<char>(q & 0xff));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("short write on " + path);
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
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

}  // namespace

Grayscale read_pgm(const std::string& path, bool inverted) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (pgm_token(in) != "P5") throw std::runtime_error(path + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PGM header");
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw std::runtime_error(path + ": malformed PGM header");
  const int bytes = maxval > 255 ? 2 : 1;
  std::string body(static_cast<std::size_t>(w) * h * bytes, '\0');
  in.read(body.data(), static_cast<std::streamsize>(body.size()));
  if (in.gcount() != static_cast<std::streamsize>(body.size())) throw std::runtime_error(path + ": truncated PGM");
  Grayscale g = Grayscale::filled(h, w, 0.0);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    unsigned q = static_cast<unsigned char>(body[i * bytes]);
    if (bytes == 2) q = (q << 8) | static_cast<unsigned char>(body[i * 2 + 1]);
    double v = static_cast<double>(q) / maxval;
    g.pixels[i] = inverted ? 1.0 - v : v;
  }
  return g;
}

void write_png(const std::string& path, const Grayscale& image, bool inverted) {
  check_dims(image.height, image.width, "write_png");
  std::vector<unsigned char> buf(image.pixels.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    double v = std::clamp(image.pixels[i], 0.0, 1.0);
    if (inverted) v = 1.0 - v;
    buf[i] = static_cast<unsigned char>(std::lround(v * 255));
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw std::runtime_error("cannot write PNG " + path + ": " + img.message);
}

Grayscale read_png(const std::string& path, bool inverted) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw std::runtime_error("cannot read PNG " + path + ": " + img.message);
  img.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("cannot decode PNG " + path + ": " + img.message);
  }
  Grayscale g = Grayscale::filled(static_cast<int>(img.height), static_cast<int>(img.width), 0.0);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    const double v = buf[i] / 255.0;
    g.pixels[i] = inverted ? 1.0 - v : v;
  }
  return g;
}

Grayscale read_image(const std::string& path, bool inverted) {
  auto ends = [&](const char* ext) {
    const std::string e(ext);
    return path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0;
  };
  if (ends(".png")) return read_png(path, inverted);
  return read_pgm(path, inverted);
}

Grayscale hconcat(const std::vector<Grayscale>& images, int gap, double gap_value) {
  if (images.empty()) return {};
  const int h = images.front().height;
  int w = 0;
  for (const auto& im : images) {
    if (im.height != h) throw std::invalid_argument("hconcat: image heights differ");
    w += im.width;
  }
  w += gap * static_cast<int>(images.size() - 1);
  Grayscale out = Grayscale::filled(h, w, gap_value);
  int x0 = 0;
  for (const auto& im : images) {
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < im.width; ++c) out.at(r, x0 + c) = im.at(r, c);
    x0 += im.width + gap;
  }
  return out;
}

}  // namespace gogan::io
