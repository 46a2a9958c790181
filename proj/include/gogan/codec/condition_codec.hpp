#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gogan::codec {

/// A named scalar design condition with its admissible range.
struct ConditionSpec {
  std::string name;
  double min = 0.0;
  double max = 1.0;

  void validate() const;
  bool contains(double value) const { return value >= min && value <= max; }
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Binary image whose black pixels form a prefix in row-major order
/// starting at the top-left corner. Pixel value 0 is black, 1 is white.
struct ConditionImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t size() const { return pixels.size(); }
  std::size_t black_count() const;
  bool is_binary() const;
  bool is_prefix_filled() const;
};

/// Fill-fraction encoding: the first round_half_up(u * H * W) pixels are
/// black, u = (value - min) / (max - min). Throws RangeError naming the
/// condition when value is outside [min, max].
ConditionImage encode_scalar(double value, const ConditionSpec& spec, int height, int width);

/// min + black_count / (H * W) * (max - min).
double decode_image(const ConditionImage& image, const ConditionSpec& spec);

/// One channel per condition, in declaration order.
struct ConditionStack {
  int height = 0;
  int width = 0;
  std::vector<ConditionImage> channels;

  /// Planes concatenated channel-major, black mapped to `black`, white to `white`.
  template <class T>
  std::vector<T> planes(T black = T(-1), T white = T(1)) const;
};

/// Throws std::invalid_argument for an empty list; RangeError for any value out of range.
ConditionStack encode_conditions(const std::vector<std::pair<ConditionSpec, double>>& values, int height, int width);

std::vector<double> decode_conditions(const ConditionStack& stack, const std::vector<ConditionSpec>& specs);

}  // namespace gogan::codec
