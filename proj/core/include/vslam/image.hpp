#pragma once

#include <string>
#include <vector>

#include "vslam/result.hpp"

namespace vslam {

// Single-channel float image, row-major, values in [0, 1].
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  ImageF() = default;
  ImageF(int w, int h, float fill = 0.f)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  float& at(int row, int col) {
    return data[static_cast<size_t>(row) * width + col];
  }
  float at(int row, int col) const {
    return data[static_cast<size_t>(row) * width + col];
  }
  bool empty() const { return data.empty(); }
};

// Bilinear resize (used to bring camera images to the detector input size).
ImageF resize_bilinear(const ImageF& src, int new_width, int new_height);

// Grayscale image loading. PGM (P5) and 8/16-bit grayscale or RGB PNG;
// RGB is converted with luminance weights 0.299/0.587/0.114.
Result<ImageF> load_image_gray(const std::string& path);

bool save_pgm(const ImageF& img, const std::string& path);

}  // namespace vslam
