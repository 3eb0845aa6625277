#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "posegen/skeleton.hpp"

namespace posegen {

struct RenderOptions {
  int size = 256;
  double joint_radius = 4.0;
  double line_width = 3.0;
};

struct JointMarker {
  double cx = 0.0;
  double cy = 0.0;
  bool visible = false;
};

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kHiddenGray{158, 158, 158};
inline constexpr Rgb kBackground{255, 255, 255};

// Pixel centers on the square canvas; visibility >= 0.5 counts as visible.
std::array<JointMarker, kNumJoints> layout_pose(const Pose& pose,
                                                const VisibilityVector& vis,
                                                int size);
Rgb joint_color(std::size_t joint);

std::string render_svg(const Pose& pose, const VisibilityVector& vis,
                       const RenderOptions& opt = {});

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Rgb at(int x, int y) const;
};

Image rasterize(const Pose& pose, const VisibilityVector& vis,
                const RenderOptions& opt = {});
std::string encode_png(const Image& img);
// Throws DataError on undecodable input.
Image decode_png(const std::string& bytes);

}  // namespace posegen
