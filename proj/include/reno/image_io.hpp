#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reno/tensor.hpp"

namespace reno {

// Binary PPM (P6) encoding of an [H, W, 3] image with values in [0, 1]:
// header "P6\n<W> <H>\n255\n", one byte per channel, round-half-up to
// [0, 255], rows top to bottom. Bit-exact across platforms.
std::vector<std::uint8_t> encode_ppm(const ad::Tensor& image);
void write_ppm(const ad::Tensor& image, const std::string& path);

}  // namespace reno
