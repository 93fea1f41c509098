#pragma once

#include "diffscrub/tensor.hpp"

#include <string>

namespace diffscrub {

// 8-bit RGB PNG io (zlib-backed). Images are [3,H,W] tensors in [-1,1],
// mapped linearly to [0,255] on save; load inverts the mapping, so a
// save/load round trip is exact up to the 8-bit quantization.

void save_png(const std::string& path, const Tensorf& image);
Tensorf load_png(const std::string& path);

uint8_t quantize_unit(float v);          // [-1,1] -> [0,255]
float dequantize_unit(uint8_t b);        // [0,255] -> [-1,1]

}  // namespace diffscrub
