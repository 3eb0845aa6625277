#include "posegen/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "posegen/error.hpp"

namespace posegen {

namespace {

constexpr std::array<Rgb, kNumJoints> kPalette = {{
    {255, 0, 0},   {255, 85, 0},  {255, 170, 0}, {255, 255, 0}, {170, 255, 0},
    {85, 255, 0},  {0, 255, 0},   {0, 255, 85},  {0, 255, 170}, {0, 255, 255},
    {0, 170, 255}, {0, 85, 255},  {0, 0, 255},   {85, 0, 255},  {170, 0, 255},
    {255, 0, 255}, {255, 0, 170}, {255, 0, 85},
}};

// Dash pattern shared by both back ends: 4 px on, 3 px off.
constexpr double kDashOn = 4.0;
constexpr double kDashPeriod = 7.0;

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void put(Image& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = &img.rgb[3 * (static_cast<std::size_t>(y) * img.width + x)];
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
}

void draw_segment(Image& img, const JointMarker& a, const JointMarker& b,
                  double width, bool dashed, Rgb c) {
  const double dx = b.cx - a.cx, dy = b.cy - a.cy;
  const double len2 = dx * dx + dy * dy;
  const double len = std::sqrt(len2);
  const double half = width / 2.0;
  const int x0 = static_cast<int>(std::floor(std::min(a.cx, b.cx) - half));
  const int x1 = static_cast<int>(std::ceil(std::max(a.cx, b.cx) + half));
  const int y0 = static_cast<int>(std::floor(std::min(a.cy, b.cy) - half));
  const int y1 = static_cast<int>(std::ceil(std::max(a.cy, b.cy) + half));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5 - a.cx, py = y + 0.5 - a.cy;
      double t = len2 > 0 ? (px * dx + py * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = px - t * dx, ey = py - t * dy;
      if (ex * ex + ey * ey > half * half) continue;
      if (dashed && std::fmod(t * len, kDashPeriod) >= kDashOn) continue;
      put(img, x, y, c);
    }
  }
}

void draw_disc(Image& img, const JointMarker& m, double r, Rgb c) {
  for (int y = static_cast<int>(std::floor(m.cy - r)); y <= static_cast<int>(std::ceil(m.cy + r)); ++y) {
    for (int x = static_cast<int>(std::floor(m.cx - r)); x <= static_cast<int>(std::ceil(m.cx + r)); ++x) {
      const double ex = x + 0.5 - m.cx, ey = y + 0.5 - m.cy;
      if (ex * ex + ey * ey <= r * r) put(img, x, y, c);
    }
  }
}

}  // namespace

std::array<JointMarker, kNumJoints> layout_pose(const Pose& pose,
                                                const VisibilityVector& vis,
                                                int size) {
  std::array<JointMarker, kNumJoints> out;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto [x, y] = denormalize_coords(pose[j], size, size);
    out[j] = {x, y, vis[j] >= 0.5};
  }
  return out;
}

Rgb joint_color(std::size_t joint) { return kPalette.at(joint); }

std::string render_svg(const Pose& pose, const VisibilityVector& vis,
                       const RenderOptions& opt) {
  const auto m = layout_pose(pose, vis, opt.size);
  const std::string s = std::to_string(opt.size);
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + s + "\" height=\"" + s +
         "\" viewBox=\"0 0 " + s + " " + s + "\">\n";
  out += "<rect width=\"" + s + "\" height=\"" + s + "\" fill=\"" + hex(kBackground) + "\"/>\n";
  for (const Edge& e : SkeletonTopology::openpose18().edges()) {
    const bool solid = m[e.a].visible && m[e.b].visible;
    out += "<line x1=\"" + fmt(m[e.a].cx) + "\" y1=\"" + fmt(m[e.a].cy) + "\" x2=\"" +
           fmt(m[e.b].cx) + "\" y2=\"" + fmt(m[e.b].cy) + "\" stroke=\"" +
           hex(solid ? joint_color(e.b) : kHiddenGray) + "\" stroke-width=\"" +
           fmt(opt.line_width) + "\"";
    if (!solid) out += " stroke-dasharray=\"4 3\"";
    out += "/>\n";
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    out += "<circle cx=\"" + fmt(m[j].cx) + "\" cy=\"" + fmt(m[j].cy) + "\" r=\"" +
           fmt(opt.joint_radius) + "\" fill=\"" +
           hex(m[j].visible ? joint_color(j) : kHiddenGray) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

Rgb Image::at(int x, int y) const {
  const auto* p = &rgb.at(3 * (static_cast<std::size_t>(y) * width + x));
  return {p[0], p[1], p[2]};
}

Image rasterize(const Pose& pose, const VisibilityVector& vis,
                const RenderOptions& opt) {
  Image img;
  img.width = img.height = opt.size;
  img.rgb.assign(3 * static_cast<std::size_t>(opt.size) * opt.size, 255);
  const auto m = layout_pose(pose, vis, opt.size);
  for (const Edge& e : SkeletonTopology::openpose18().edges()) {
    const bool solid = m[e.a].visible && m[e.b].visible;
    draw_segment(img, m[e.a], m[e.b], opt.line_width, !solid,
                 solid ? joint_color(e.b) : kHiddenGray);
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    draw_disc(img, m[j], opt.joint_radius, m[j].visible ? joint_color(j) : kHiddenGray);
  }
  return img;
}

std::string encode_png(const Image& img) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, img.rgb.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + pi.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, img.rgb.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + pi.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(const std::string& bytes) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size())) {
    throw DataError(std::string("png decode failed: ") + pi.message);
  }
  pi.format = PNG_FORMAT_RGB;
  Image img;
  img.width = static_cast<int>(pi.width);
  img.height = static_cast<int>(pi.height);
  img.rgb.resize(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw DataError(std::string("png decode failed: ") + pi.message);
  }
  return img;
}

}  // namespace posegen
