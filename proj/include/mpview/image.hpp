#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpview {

// Interleaved RGB, values in [0, 1]. Disk rasters are 8-bit PNG; loading
// de-quantizes by /255 so metrics computed in memory match metrics computed
// from files.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  static Image zeros(int w, int h) {
    Image im;
    im.width = w;
    im.height = h;
    im.data.assign(static_cast<size_t>(w) * h * 3, 0.0);
    return im;
  }

  double& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

struct ImageIoError : std::runtime_error {
  explicit ImageIoError(const std::string& msg) : std::runtime_error(msg) {}
};

void write_png_rgb8(const std::string& path, const Image& image);
Image read_png_rgb8(const std::string& path);

// Single-channel 8-bit PNG, used for depth visualizations.
void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<uint8_t>& pixels);

// Raw little-endian float32 buffers (ground-truth depth maps).
void write_f32(const std::string& path, const std::vector<float>& values);
std::vector<float> read_f32(const std::string& path, size_t expected_count);

}  // namespace mpview
