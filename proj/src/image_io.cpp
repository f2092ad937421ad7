#include "blurvid/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace blurvid {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image decode_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }

  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  int height = 0;
  int width = 0;
  int file_channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG: " + path.string());
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte bit_depth = png_get_bit_depth(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported bit depth 16 in " + path.string());
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  file_channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);

  if (width == 0 || height == 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("zero-sized image: " + path.string());
  }

  pixels.resize(stride * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (file_channels != 1 && file_channels != 3) {
    throw IoError("unsupported channel layout in " + path.string());
  }
  if (height < 2 || width < 2) throw IoError("image smaller than 2x2: " + path.string());

  std::vector<double> data(static_cast<std::size_t>(height) * width * file_channels);
  for (int y = 0; y < height; ++y) {
    for (int i = 0; i < width * file_channels; ++i) {
      data[static_cast<std::size_t>(y) * width * file_channels + i] = rows[y][i] / 255.0;
    }
  }
  return Image(height, width, file_channels, std::move(data));
}

void encode_png(const Image& img, const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }

  const int w = img.width();
  const int h = img.height();
  const int c = img.channels();
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.data()[i]);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * c;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, w, h, 8, c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Skips whitespace and '#' comments in a PNM header.
int read_pnm_int(std::istream& in) {
  int ch = in.peek();
  while (ch != EOF) {
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
    ch = in.peek();
  }
  int value = -1;
  in >> value;
  return value;
}

Image decode_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw IoError("unsupported PNM variant '" + magic + "' in " + path.string());
  }
  const int width = read_pnm_int(in);
  const int height = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (width <= 0 || height <= 0) throw IoError("zero-sized image: " + path.string());
  if (maxval != 255) throw IoError("unsupported bit depth (maxval " + std::to_string(maxval) + ")");
  if (height < 2 || width < 2) throw IoError("image smaller than 2x2: " + path.string());
  in.get();  // single whitespace before raster

  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError("truncated raster in " + path.string());
  }
  std::vector<double> data(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) data[i] = bytes[i] / 255.0;
  return Image(height, width, channels, std::move(data));
}

void encode_pnm(const Image& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (img.channels() == 1 ? "P5" : "P6") << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.data()[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

Image load_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return decode_pnm(path);
  return decode_png(path);
}

void save_image(const Image& img, const fs::path& path) {
  if (img.empty()) throw InvalidArgument("save_image: empty image");
  const std::string ext = lower_ext(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    encode_pnm(img, path);
  } else {
    encode_png(img, path);
  }
}

Image quantize8(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace blurvid
