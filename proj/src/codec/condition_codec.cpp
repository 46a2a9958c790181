#include "gogan/codec/condition_codec.hpp"

#include <algorithm>
#include <cmath>

namespace gogan::codec {

void ConditionSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("condition spec: empty name");
  if (!(std::isfinite(min) && std::isfinite(max) && min < max)) {
    throw std::invalid_argument("condition spec '" + name + "': require min < max, got [" + std::to_string(min) + ", " +
                                std::to_string(max) + "]");
  }
}

std::size_t ConditionImage::black_count() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{0}));
}

bool ConditionImage::is_binary() const {
  return std::all_of(pixels.begin(), pixels.end(), [](std::uint8_t p) { return p <= 1; });
}

bool ConditionImage::is_prefix_filled() const {
  return std::is_partitioned(pixels.begin(), pixels.end(), [](std::uint8_t p) { return p == 0; });
}

ConditionImage encode_scalar(double value, const ConditionSpec& spec, int height, int width) {
  spec.validate();
  if (height < 1 || width < 1) throw std::invalid_argument("encode_scalar: image size must be positive");
  if (!spec.contains(value)) {
    throw RangeError("condition '" + spec.name + "' = " + std::to_string(value) + " outside [" +
                     std::to_string(spec.min) + ", " + std::to_string(spec.max) + "]");
  }
  const auto total = static_cast<std::size_t>(height) * width;
  const double u = (value - spec.min) / (spec.max - spec.min);
  const auto black = std::min(total, static_cast<std::size_t>(std::floor(u * static_cast<double>(total) + 0.5)));
  ConditionImage img{height, width, std::vector<std::uint8_t>(total, 1)};
  std::fill_n(img.pixels.begin(), black, std::uint8_t{0});
  return img;
}

double decode_image(const ConditionImage& image, const ConditionSpec& spec) {
  const double frac = static_cast<double>(image.black_count()) / static_cast<double>(image.size());
  return spec.min + frac * (spec.max - spec.min);
}

template <class T>
std::vector<T> ConditionStack::planes(T black, T white) const {
  std::vector<T> out;
  out.reserve(channels.size() * static_cast<std::size_t>(height) * width);
  for (const auto& ch : channels)
    for (auto p : ch.pixels) out.push_back(p == 0 ? black : white);
  return out;
}

template std::vector<float> ConditionStack::planes<float>(float, float) const;
template std::vector<double> ConditionStack::planes<double>(double, double) const;

ConditionStack encode_conditions(const std::vector<std::pair<ConditionSpec, double>>& values, int height, int width) {
  if (values.empty()) throw std::invalid_argument("encode_conditions: at least one condition is required");
  ConditionStack stack{height, width, {}};
  stack.channels.reserve(values.size());
  for (const auto& [spec, v] : values) stack.channels.push_back(encode_scalar(v, spec, height, width));
  return stack;
}

std::vector<double> decode_conditions(const ConditionStack& stack, const std::vector<ConditionSpec>& specs) {
  if (specs.size() != stack.channels.size())
    throw std::invalid_argument("decode_conditions: channel count does not match spec count");
  std::vector<double> out;
  for (std::size_t i = 0; i < specs.size(); ++i) out.push_back(decode_image(stack.channels[i], specs[i]));
  return out;
}

}  // namespace gogan::codec
