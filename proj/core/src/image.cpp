#include "vslam/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <png.h>

namespace vslam {

ImageF resize_bilinear(const ImageF& src, int new_width, int new_height) {
  ImageF dst(new_width, new_height);
  if (src.empty() || new_width <= 0 || new_height <= 0) return dst;
  const double sx = static_cast<double>(src.width) / new_width;
  const double sy = static_cast<double>(src.height) / new_height;
  for (int r = 0; r < new_height; ++r) {
    const double fy = (r + 0.5) * sy - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int c = 0; c < new_width; ++c) {
      const double fx = (c + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      const double top = src.at(y0, x0) * (1 - wx) + src.at(y0, x1) * wx;
      const double bot = src.at(y1, x0) * (1 - wx) + src.at(y1, x1) * wx;
      dst.at(r, c) = static_cast<float>(top * (1 - wy) + bot * wy);
    }
  }
  return dst;
}

namespace {

Result<ImageF> load_pgm(std::ifstream& in) {
  std::string magic;
  in >> magic;
  if (magic != "P5") return Fail::BackendFailure;
  auto skip_ws_comments = [&in]() {
    while (true) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
  };
  int w = 0, h = 0, maxval = 0;
  skip_ws_comments();
  in >> w;
  skip_ws_comments();
  in >> h;
  skip_ws_comments();
  in >> maxval;
  in.get();  // single whitespace after header
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    return Fail::BackendFailure;
  ImageF img(w, h);
  const size_t n = static_cast<size_t>(w) * h;
  if (maxval < 256) {
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), n);
    if (!in) return Fail::BackendFailure;
    for (size_t i = 0; i < n; ++i) img.data[i] = buf[i] / 255.f;
  } else {
    std::vector<unsigned char> buf(2 * n);
    in.read(reinterpret_cast<char*>(buf.data()), 2 * n);
    if (!in) return Fail::BackendFailure;
    for (size_t i = 0; i < n; ++i) {
      const unsigned v = (buf[2 * i] << 8) | buf[2 * i + 1];
      img.data[i] = static_cast<float>(v) / maxval;
    }
  }
  return img;
}

Result<ImageF> load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) return Fail::BackendFailure;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return Fail::BackendFailure;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return Fail::BackendFailure;
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const int w = png_get_image_width(png, info);
  const int h = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  ImageF img(w, h);
  for (int r = 0; r < h; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (int c = 0; c < w; ++c) {
      float v;
      if (channels >= 3) {
        v = (0.299f * row[c * channels] + 0.587f * row[c * channels + 1] +
             0.114f * row[c * channels + 2]) /
            255.f;
      } else {
        v = row[c * channels] / 255.f;
      }
      img.at(r, c) = v;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

}  // namespace

Result<ImageF> load_image_gray(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".png")
    return load_png(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) return Fail::BackendFailure;
  return load_pgm(in);
}

bool save_pgm(const ImageF& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i)
    buf[i] = static_cast<unsigned char>(
        std::clamp(img.data[i], 0.f, 1.f) * 255.f + 0.5f);
  out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  return static_cast<bool>(out);
}

}  // namespace vslam
