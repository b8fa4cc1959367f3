#include "gpbench/image.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace gpbench {

Image::Image(int width, int height, Color fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("Image: non-positive dimensions");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) set(x, y, fill);
}

Image Image::load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("unsupported image format (want P6/255): " + path);
  in.get();  // single whitespace after header
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.data_.data()),
          static_cast<std::streamsize>(img.data_.size()));
  if (!in) throw std::runtime_error("truncated image: " + path);
  return img;
}

void Image::save_ppm(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path);
  out << "P6\n" << width_ << " " << height_ << "\n255\n";
  out.write(reinterpret_cast<const char*>(data_.data()),
            static_cast<std::streamsize>(data_.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Color Image::get(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set(int x, int y, Color c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  data_[i] = c.r;
  data_[i + 1] = c.g;
  data_[i + 2] = c.b;
}

namespace {

int px(double norm, int dim) {
  int v = static_cast<int>(norm * dim + 0.5);
  return std::clamp(v, 0, dim - 1);
}

}  // namespace

void Image::draw_rect(const BBox& box, Color c, int thickness) {
  const int x0 = px(box.x_min, width_), x1 = px(box.x_max, width_);
  const int y0 = px(box.y_min, height_), y1 = px(box.y_max, height_);
  for (int t = 0; t < thickness; ++t) {
    for (int x = x0; x <= x1; ++x) {
      set(x, y0 + t, c);
      set(x, y1 - t, c);
    }
    for (int y = y0; y <= y1; ++y) {
      set(x0 + t, y, c);
      set(x1 - t, y, c);
    }
  }
}

void Image::fill_rect(const BBox& box, Color c) {
  const int x0 = px(box.x_min, width_), x1 = px(box.x_max, width_);
  const int y0 = px(box.y_min, height_), y1 = px(box.y_max, height_);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set(x, y, c);
}

void Image::draw_cross(const Point2D& p, Color c, int arm, int thickness) {
  const int cx = px(p.x, width_), cy = px(p.y, height_);
  for (int d = -arm; d <= arm; ++d)
    for (int t = -(thickness / 2); t <= thickness / 2; ++t) {
      set(cx + d, cy + t, c);
      set(cx + t, cy + d, c);
    }
}

namespace {

// 3x5 digit glyphs, row-major bitmasks.
constexpr std::uint16_t kDigits[10] = {
    0b111101101101111,  // 0
    0b010110010010111,  // 1
    0b111001111100111,  // 2
    0b111001111001111,  // 3
    0b101101111001001,  // 4
    0b111100111001111,  // 5
    0b111100111101111,  // 6
    0b111001001001001,  // 7
    0b111101111101111,  // 8
    0b111101111001111,  // 9
};

}  // namespace

void Image::draw_label(int x, int y, const std::string& digits, Color c,
                       int scale) {
  int cursor = x;
  for (char ch : digits) {
    if (ch < '0' || ch > '9') {
      cursor += 2 * scale;
      continue;
    }
    const std::uint16_t glyph = kDigits[ch - '0'];
    for (int row = 0; row < 5; ++row)
      for (int col = 0; col < 3; ++col)
        if (glyph >> (14 - (row * 3 + col)) & 1)
          for (int sy = 0; sy < scale; ++sy)
            for (int sx = 0; sx < scale; ++sx)
              set(cursor + col * scale + sx, y + row * scale + sy, c);
    cursor += 4 * scale;
  }
}

}  // namespace gpbench
