#pragma once

#include <string>
#include <vector>

namespace gogan::net {

struct GeneratorConfig {
  int resolution = 256;
  int in_channels = 1;
  int base_filters = 64;
  int filter_cap = 512;
  // Number of stride-2 encoder blocks; 0 selects log2(resolution), i.e. down to 1x1.
  int depth = 0;
  // Hidden widths of the bottleneck MLP; the last layer maps back to the flattened bottleneck.
  std::vector<int> dense_widths{512};
  // Dropout realizes the noise input z in the first `dropout_blocks` decoder blocks.
  double dropout_rate = 0.5;
  int dropout_blocks = 3;
  bool dropout_at_inference = false;
  double leaky_slope = 0.2;
  double norm_momentum = 0.1;
  double init_stddev = 0.02;

  int resolved_depth() const;
  int encoder_channels(int block) const;
  int encoder_size(int block) const { return resolution >> (block + 1); }
  /// Throws std::invalid_argument when the configuration cannot be built.
  void validate() const;
};

struct DiscriminatorConfig {
  int resolution = 256;
  // Condition channels; the candidate image adds one more.
  int condition_channels = 1;
  int base_filters = 64;
  int filter_cap = 512;
  int stride2_blocks = 3;
  double leaky_slope = 0.2;
  double norm_momentum = 0.1;
  double init_stddev = 0.02;

  int block_channels(int block) const;
  /// Side length of the patch probability map.
  int output_size() const;
  void validate() const;
};

}  // namespace gogan::net
