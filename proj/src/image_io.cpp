#include "sanet/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace sanet {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open file: " + path);
  return f;
}

void write_png_8bit(const std::string& path, int width, int height,
                    int color_type, const uint8_t* rows_data, size_t stride,
                    const ClassMask* palette_mask) {
  FilePtr file = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("libpng: failed to allocate write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw FormatError("libpng: failed to allocate info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng: failed to write " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_color palette[kClassPalette.size()];
  if (palette_mask) {
    for (size_t i = 0; i < kClassPalette.size(); ++i) {
      palette[i].red = kClassPalette[i][0];
      palette[i].green = kClassPalette[i][1];
      palette[i].blue = kClassPalette[i][2];
    }
    png_set_PLTE(png, info, palette, static_cast<int>(kClassPalette.size()));
  }
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[static_cast<size_t>(y)] =
        const_cast<png_bytep>(rows_data + static_cast<size_t>(y) * stride);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

void read_png_8bit(const std::string& path, int& width, int& height,
                   int& color_type, std::vector<uint8_t>& out) {
  FilePtr file = open_file(path, "rb");
  uint8_t sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("not a PNG file: " + path);
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  if (!r.png) throw FormatError("libpng: failed to allocate read struct");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw FormatError("libpng: failed to allocate info struct");
  if (setjmp(png_jmpbuf(r.png)))
    throw FormatError("libpng: failed to read " + path);
  png_init_io(r.png, file.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  width = static_cast<int>(png_get_image_width(r.png, r.info));
  height = static_cast<int>(png_get_image_height(r.png, r.info));
  color_type = png_get_color_type(r.png, r.info);
  const int bit_depth = png_get_bit_depth(r.png, r.info);
  if (bit_depth == 16) png_set_strip_16(r.png);
  if (bit_depth < 8) png_set_packing(r.png);
  png_read_update_info(r.png, r.info);

  const size_t stride = png_get_rowbytes(r.png, r.info);
  out.assign(stride * static_cast<size_t>(height), 0);
  std::vector<png_bytep> rows(static_cast<size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[static_cast<size_t>(y)] = out.data() + static_cast<size_t>(y) * stride;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);

  const size_t channels = stride / static_cast<size_t>(width);
  if (channels != 1) {
    // Keep the first channel (gray of GA, or rely on caller rejecting RGB).
    std::vector<uint8_t> single(static_cast<size_t>(width) * height);
    for (size_t i = 0; i < single.size(); ++i) single[i] = out[i * channels];
    if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGBA)
      throw FormatError("expected grayscale or palette PNG: " + path);
    out = std::move(single);
  }
}

}  // namespace

void write_png_gray(const std::string& path, const GrayImage& image) {
  write_png_8bit(path, image.width, image.height, PNG_COLOR_TYPE_GRAY,
                 image.pixels.data(), static_cast<size_t>(image.width),
                 nullptr);
}

GrayImage read_png_gray(const std::string& path) {
  int w, h, color_type;
  std::vector<uint8_t> data;
  read_png_8bit(path, w, h, color_type, data);
  GrayImage image(w, h);
  image.pixels = std::move(data);
  return image;
}

void write_png_mask(const std::string& path, const ClassMask& mask) {
  write_png_8bit(path, mask.width, mask.height, PNG_COLOR_TYPE_PALETTE,
                 mask.values.data(), static_cast<size_t>(mask.width), &mask);
}

ClassMask read_png_mask(const std::string& path) {
  int w, h, color_type;
  std::vector<uint8_t> data;
  read_png_8bit(path, w, h, color_type, data);
  ClassMask mask(h, w);
  mask.values = std::move(data);
  return mask;
}

void write_png_rgb(const std::string& path, const RgbImage& image) {
  write_png_8bit(path, image.width, image.height, PNG_COLOR_TYPE_RGB,
                 image.pixels.data(), static_cast<size_t>(image.width) * 3,
                 nullptr);
}

void write_pgm(const std::string& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError("expected binary PGM (P5): " + path);
  int w, h, maxval;
  in >> w >> h >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval != 255)
    throw FormatError("unsupported PGM header: " + path);
  in.get();  // single whitespace after header
  GrayImage image(w, h);
  in.read(reinterpret_cast<char*>(image.pixels.data()),
          static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size()))
    throw FormatError("truncated PGM payload: " + path);
  return image;
}

RgbImage make_overlay(const GrayImage& image, const ClassMask& mask) {
  if (image.width != mask.width || image.height != mask.height)
    throw DataError("make_overlay: image and mask shapes differ");
  RgbImage overlay(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const size_t o = (static_cast<size_t>(y) * image.width + x) * 3;
      const uint8_t cls = mask.at(y, x);
      if (cls > 0 && cls < kClassPalette.size()) {
        overlay.pixels[o] = kClassPalette[cls][0];
        overlay.pixels[o + 1] = kClassPalette[cls][1];
        overlay.pixels[o + 2] = kClassPalette[cls][2];
      } else {
        const uint8_t g = image.at(y, x);
        overlay.pixels[o] = overlay.pixels[o + 1] = overlay.pixels[o + 2] = g;
      }
    }
  return overlay;
}

}  // namespace sanet
