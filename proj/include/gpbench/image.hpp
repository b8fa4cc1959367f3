#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpbench/geometry.hpp"

namespace gpbench {

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;

  bool operator==(const Color&) const = default;
};

inline constexpr Color kGreen{0, 200, 0};
inline constexpr Color kRed{220, 0, 0};
inline constexpr Color kBlue{0, 80, 220};
inline constexpr Color kOrange{230, 140, 0};
inline constexpr Color kWhite{255, 255, 255};
inline constexpr Color kBlack{0, 0, 0};

// RGB raster stored row-major, loaded from / saved to binary PPM (P6).
class Image {
 public:
  Image() = default;
  Image(int width, int height, Color fill = kWhite);

  static Image load_ppm(const std::string& path);
  void save_ppm(const std::string& path) const;

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Color get(int x, int y) const;
  void set(int x, int y, Color c);

  void draw_rect(const BBox& box, Color c, int thickness = 2);
  void fill_rect(const BBox& box, Color c);
  void draw_cross(const Point2D& p, Color c, int arm = 6, int thickness = 2);
  // 3x5 bitmap digits scaled up; anchor is the label's top-left pixel.
  void draw_label(int x, int y, const std::string& digits, Color c,
                  int scale = 2);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace gpbench
