// SPDX-License-Identifier: Apache-2.0
#include "cxgan/data/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace cxgan::data {

namespace {

// OpenCV stores color as BGR; tensors are RGB.
std::size_t cv_channel(std::size_t c, std::size_t channels) {
  return channels == 3 ? 2 - c : c;
}

template <typename Px>
void unpack(const cv::Mat &m, nn::Tensor &out, double scale) {
  const std::size_t C = out.shape().c;
  for (int y = 0; y < m.rows; ++y) {
    const Px *row = m.ptr<Px>(y);
    for (int x = 0; x < m.cols; ++x)
      for (std::size_t c = 0; c < C; ++c)
        out(0, c, y, x) = static_cast<float>(row[x * C + cv_channel(c, C)] / scale);
  }
}

template <typename Px>
void pack(const nn::Tensor &in, cv::Mat &m, double scale) {
  const std::size_t C = in.shape().c;
  for (int y = 0; y < m.rows; ++y) {
    Px *row = m.ptr<Px>(y);
    for (int x = 0; x < m.cols; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        const double v = std::clamp(static_cast<double>(in(0, c, y, x)), 0.0, 1.0);
        row[x * C + cv_channel(c, C)] = static_cast<Px>(std::lround(v * scale));
      }
  }
}

} // namespace

bool is_image_file(const std::filesystem::path &path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

nn::Tensor load_image(const std::filesystem::path &path) {
  if (!std::filesystem::is_regular_file(path))
    throw Error("cannot read image " + path.string() + ": no such file");
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty())
    throw Error("cannot read image " + path.string() + ": unsupported or corrupt file");
  const int channels = m.channels();
  if (channels != 1 && channels != 3)
    throw Error("image " + path.string() + " has " + std::to_string(channels) +
                " channels; expected grayscale or RGB");

  nn::Tensor out({1, static_cast<std::size_t>(channels), static_cast<std::size_t>(m.rows),
                  static_cast<std::size_t>(m.cols)});
  switch (m.depth()) {
  case CV_8U:
    unpack<std::uint8_t>(m, out, 255.0);
    break;
  case CV_16U:
    unpack<std::uint16_t>(m, out, 65535.0);
    break;
  default:
    throw Error("image " + path.string() + ": unsupported bit depth (need 8 or 16 bit)");
  }
  return out;
}

void save_image(const std::filesystem::path &path, const nn::Tensor &image, int bit_depth) {
  const nn::Shape s = image.shape();
  if (s.n != 1 || (s.c != 1 && s.c != 3))
    throw ShapeError("save_image expects (1, 1|3, H, W), got " + s.str());
  if (bit_depth != 8 && bit_depth != 16)
    throw Error("save_image: bit depth must be 8 or 16");
  if (!is_image_file(path))
    throw Error("save_image: " + path.string() + " is not a .png/.tif/.tiff path");

  const int rows = static_cast<int>(s.h), cols = static_cast<int>(s.w);
  const int cn = static_cast<int>(s.c);
  cv::Mat m;
  if (bit_depth == 8) {
    m.create(rows, cols, CV_MAKETYPE(CV_8U, cn));
    pack<std::uint8_t>(image, m, 255.0);
  } else {
    m.create(rows, cols, CV_MAKETYPE(CV_16U, cn));
    pack<std::uint16_t>(image, m, 65535.0);
  }
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m))
    throw Error("cannot write image " + path.string());
}

} // namespace cxgan::data
