#pragma once

#include <cstdint>
#include <string>

#include "erobot/png_io.hpp"
#include "erobot/sinkhorn.hpp"

namespace erobot {

/// rgb3 transports full RGB colours. red_blue2 works on the (R, B) plane and
/// leaves the green channel of the target untouched.
enum class ColorSpace { rgb3, red_blue2 };

ColorSpace parse_color_space(const std::string& name);
std::string to_string(ColorSpace space);

struct TransferConfig {
  int subsample = 1000;  // pixels drawn from each image, without replacement
  double epsilon = 0.01;
  double lambda = 20.0;
  std::uint64_t seed = 0;
  ColorSpace color_space = ColorSpace::rgb3;
  SolverOptions solver{};

  void validate() const;
};

/// Recolours `target` with the palette of `source`.
///
/// Subsampled target colours are sent to the plan-weighted mean of the
/// source colours they are coupled with. Every target pixel then moves by the
/// displacement of its nearest subsampled colour, and the result is clamped
/// to [0, 1]. The output has the target's size.
ImageTensor color_transfer(const ImageTensor& source, const ImageTensor& target,
                           const TransferConfig& cfg);

}  // namespace erobot
