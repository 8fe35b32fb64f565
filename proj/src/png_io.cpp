#include "erobot/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>

namespace erobot {

void ImageTensor::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be positive");
  if (pixels.rows() != static_cast<Eigen::Index>(width) * height || pixels.cols() != 3) {
    throw std::invalid_argument("image pixel matrix must be (width*height) x 3");
  }
  if (!pixels.allFinite() || (pixels.array() < 0.0).any() || (pixels.array() > 1.0).any()) {
    throw std::invalid_argument("image components must lie in [0, 1]");
  }
}

ImageTensor ImageTensor::filled(int width, int height, double r, double g, double b) {
  ImageTensor img;
  img.width = width;
  img.height = height;
  img.pixels = Matrix(static_cast<Eigen::Index>(width) * height, 3);
  img.pixels.col(0).setConstant(r);
  img.pixels.col(1).setConstant(g);
  img.pixels.col(2).setConstant(b);
  img.validate();
  return img;
}

namespace {

ImageTensor from_buffer(const png_image& info, const std::vector<png_byte>& buf) {
  ImageTensor img;
  img.width = static_cast<int>(info.width);
  img.height = static_cast<int>(info.height);
  img.pixels = Matrix(static_cast<Eigen::Index>(img.width) * img.height, 3);
  for (Eigen::Index p = 0; p < img.pixels.rows(); ++p) {
    for (int c = 0; c < 3; ++c) img.pixels(p, c) = buf[static_cast<std::size_t>(3 * p + c)] / 255.0;
  }
  return img;
}

std::vector<png_byte> to_buffer(const ImageTensor& image) {
  image.validate();
  std::vector<png_byte> buf(static_cast<std::size_t>(image.pixels.rows()) * 3);
  for (Eigen::Index p = 0; p < image.pixels.rows(); ++p) {
    for (int c = 0; c < 3; ++c) {
      buf[static_cast<std::size_t>(3 * p + c)] =
          static_cast<png_byte>(std::floor(image.pixels(p, c) * 255.0 + 0.5));
    }
  }
  return buf;
}

png_image blank_image() {
  png_image info;
  std::memset(&info, 0, sizeof info);
  info.version = PNG_IMAGE_VERSION;
  return info;
}

ImageTensor finish_read(png_image& info, const std::string& what) {
  info.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(info));
  if (!png_image_finish_read(&info, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = info.message;
    png_image_free(&info);
    throw std::runtime_error("cannot decode PNG " + what + ": " + msg);
  }
  return from_buffer(info, buf);
}

}  // namespace

ImageTensor read_png(const std::string& path) {
  png_image info = blank_image();
  if (!png_image_begin_read_from_file(&info, path.c_str())) {
    throw std::runtime_error("cannot read PNG '" + path + "': " + info.message);
  }
  return finish_read(info, "'" + path + "'");
}

ImageTensor decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image info = blank_image();
  if (!png_image_begin_read_from_memory(&info, bytes.data(), bytes.size())) {
    throw std::runtime_error(std::string("cannot decode PNG buffer: ") + info.message);
  }
  return finish_read(info, "buffer");
}

void write_png(const std::string& path, const ImageTensor& image) {
  const std::vector<png_byte> buf = to_buffer(image);
  png_image info = blank_image();
  info.width = static_cast<png_uint_32>(image.width);
  info.height = static_cast<png_uint_32>(image.height);
  info.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&info, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG '" + path + "': " + info.message);
  }
}

std::vector<std::uint8_t> encode_png(const ImageTensor& image) {
  const std::vector<png_byte> buf = to_buffer(image);
  png_image info = blank_image();
  info.width = static_cast<png_uint_32>(image.width);
  info.height = static_cast<png_uint_32>(image.height);
  info.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&info, nullptr, &size, 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("cannot size PNG buffer: ") + info.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&info, out.data(), &size, 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("cannot encode PNG: ") + info.message);
  }
  out.resize(size);
  return out;
}

}  // namespace erobot
