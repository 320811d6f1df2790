#include "trackanno/core/image.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <string>

#include "trackanno/core/error.hpp"

namespace trackanno {

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // Integer Rec.601 weights scaled by 1000.
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

Image Image::from_gray(int width, int height, std::vector<std::uint8_t> gray) {
  if (width <= 0 || height <= 0 || gray.size() != static_cast<std::size_t>(width) * height)
    throw InvalidArgument("Image::from_gray: size mismatch");
  Image img;
  img.width = width;
  img.height = height;
  img.rgb.resize(gray.size() * 3);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = gray[i];
  }
  img.gray = std::move(gray);
  return img;
}

Image Image::from_rgb(int width, int height, std::vector<std::uint8_t> rgb) {
  if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw InvalidArgument("Image::from_rgb: size mismatch");
  Image img;
  img.width = width;
  img.height = height;
  img.gray.resize(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < img.gray.size(); ++i) {
    img.gray[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  img.rgb = std::move(rgb);
  return img;
}

namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

Image finish_read(PngImage& png, const std::string& what) {
  png.image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, rgb.data(), 0, nullptr))
    throw InputError("cannot decode PNG " + what + ": " + png.image.message);
  return Image::from_rgb(static_cast<int>(png.image.width), static_cast<int>(png.image.height), std::move(rgb));
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str()))
    throw InputError("cannot read PNG " + path.string() + ": " + png.image.message);
  return finish_read(png, path.string());
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size()))
    throw InputError(std::string("cannot decode PNG buffer: ") + png.image.message);
  return finish_read(png, "buffer");
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("cannot write PNG " + path.string());
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_fail(png_structp png, png_const_charp msg) {
  *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
  png_longjmp(png, 1);
}

}  // namespace

// Fast zlib level and a single filter: frame I/O dominates otherwise.
std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty() || image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3)
    throw InvalidArgument("write_png: image has no RGB plane");
  std::string error;
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, nullptr);
  if (!png) throw InputError("cannot encode PNG: out of memory");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("cannot encode PNG: " + error);
  }
  png_set_write_fn(png, &out, png_append, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  for (int y = 0; y < image.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image crop(const Image& image, int x0, int y0, int x1, int y1) {
  x0 = std::clamp(x0, 0, image.width);
  x1 = std::clamp(x1, 0, image.width);
  y0 = std::clamp(y0, 0, image.height);
  y1 = std::clamp(y1, 0, image.height);
  if (x1 <= x0 || y1 <= y0) throw InvalidArgument("crop: empty region");
  const int w = x1 - x0;
  const int h = y1 - y0;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const auto* src = image.rgb.data() + (static_cast<std::size_t>(y0 + y) * image.width + x0) * 3;
    std::copy_n(src, static_cast<std::size_t>(w) * 3, rgb.data() + static_cast<std::size_t>(y) * w * 3);
  }
  return Image::from_rgb(w, h, std::move(rgb));
}

}  // namespace trackanno
