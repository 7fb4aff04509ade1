#include <png.h>

#include <cstring>
#include <filesystem>

#include "w2w/errors.hpp"
#include "w2w/tiles.hpp"

namespace w2w {

Image::Image(int width, int height, Rgba fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw PreconditionError("image dimensions must be non-negative");
  bytes_.resize(static_cast<std::size_t>(width) * height * 4);
  for (std::size_t i = 0; i < bytes_.size(); i += 4) {
    bytes_[i] = fill.r;
    bytes_[i + 1] = fill.g;
    bytes_[i + 2] = fill.b;
    bytes_[i + 3] = fill.a;
  }
}

Rgba Image::at(int x, int y) const {
  const auto* p = &bytes_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  return {p[0], p[1], p[2], p[3]};
}

void Image::set(int x, int y, Rgba px) {
  auto* p = &bytes_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  p[0] = px.r;
  p[1] = px.g;
  p[2] = px.b;
  p[3] = px.a;
}

bool Image::has_transparency() const {
  for (std::size_t i = 3; i < bytes_.size(); i += 4) {
    if (bytes_[i] != 255) return true;
  }
  return false;
}

Image read_png(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG '" + path + "': " + img.message);
  }
  img.format = PNG_FORMAT_RGBA;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path + "': " + msg);
  }
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const auto* p = &buf[(static_cast<std::size_t>(y) * out.width() + x) * 4];
      out.set(x, y, {p[0], p[1], p[2], p[3]});
    }
  }
  return out;
}

void write_png(const Image& image, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.bytes().data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path + "': " + img.message);
  }
}

Image composite_over(const Image& bottom, const Image& top) {
  if (bottom.width() != top.width() || bottom.height() != top.height()) {
    throw TileSizeMismatch("cannot composite images of different sizes");
  }
  Image out = bottom;
  for (int y = 0; y < top.height(); ++y) {
    for (int x = 0; x < top.width(); ++x) {
      const Rgba s = top.at(x, y);
      const Rgba d = bottom.at(x, y);
      const int sa = s.a;
      const int da = d.a * (255 - sa) / 255;
      const int oa = sa + da;
      if (oa == 0) {
        out.set(x, y, {0, 0, 0, 0});
        continue;
      }
      auto blend = [&](int sc, int dc) { return static_cast<std::uint8_t>((sc * sa + dc * da + oa / 2) / oa); };
      out.set(x, y, {blend(s.r, d.r), blend(s.g, d.g), blend(s.b, d.b), static_cast<std::uint8_t>(oa)});
    }
  }
  return out;
}

}  // namespace w2w
