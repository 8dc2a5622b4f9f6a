#include "reno/image_io.hpp"

#include <cmath>
#include <fstream>

#include "reno/errors.hpp"

namespace reno {

std::vector<std::uint8_t> encode_ppm(const ad::Tensor& image) {
  if (image.shape.size() != 3 || image.shape[2] != 3) {
    throw ShapeError("write_ppm: expected an [H, W, 3] image, got shape " +
                     ad::shape_str(image.shape));
  }
  std::size_t h = image.shape[0], w = image.shape[1];
  std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.size());
  for (double v : image.data) {
    double scaled = std::floor(v * 255.0 + 0.5);  // round half up
    if (scaled < 0.0) scaled = 0.0;
    if (scaled > 255.0) scaled = 255.0;
    out.push_back(static_cast<std::uint8_t>(scaled));
  }
  return out;
}

void write_ppm(const ad::Tensor& image, const std::string& path) {
  std::vector<std::uint8_t> bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace reno
