#pragma once

#include <string>
#include <vector>

#include "gogan/simp/fea.hpp"

namespace gogan::io {

/// Row-major grayscale grid, values in [0,1], 1 = white.
struct Grayscale {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  static Grayscale filled(int height, int width, double value);
  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  double mean() const;
};

/// Area-weighted resampling: every output pixel is the average of the input
/// over its footprint, so the image mean is preserved. Works for any ratio.
Grayscale area_resample(const Grayscale& image, int height, int width);

/// Density field as an image (row = element iy, column = element ix), resampled to height x width.
Grayscale density_to_image(const simp::DensityField& field, int height, int width);

/// Inverse of density_to_image: resample to nely x nelx and read pixels as densities.
simp::DensityField image_to_density(const Grayscale& image, int nelx, int nely);

/// Network output in [-1,1] to [0,1]. Throws std::domain_error if any value
/// leaves [-1,1] by more than `slack`.
Grayscale from_signed(const std::vector<double>& values, int height, int width, double slack = 1e-6);
std::vector<double> to_signed(const Grayscale& image);

struct PgmOptions {
  int bit_depth = 8;  // 8 or 16
  // Store 1 - value so solid material shows dark; reading with the same flag undoes it.
  bool inverted = false;
};

void write_pgm(const std::string& path, const Grayscale& image, const PgmOptions& options = {});
Grayscale read_pgm(const std::string& path, bool inverted = false);

void write_png(const std::string& path, const Grayscale& image, bool inverted = false);
Grayscale read_png(const std::string& path, bool inverted = false);

/// Chooses the reader by extension (.pgm or .png).
Grayscale read_image(const std::string& path, bool inverted = false);

/// Images side by side, `gap` columns of `gap_value` between them; heights must match.
Grayscale hconcat(const std::vector<Grayscale>& images, int gap = 2, double gap_value = 0.5);

}  // namespace gogan::io
