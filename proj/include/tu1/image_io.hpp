#pragma once

#include "tu1/synthetic.hpp"
#include "tu1/tensor.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tu1 {

inline std::vector<std::string> list_image_files(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp") {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no image files in: " + dir);
  return out;
}

/// Decodes equal-sized color images into a (rows, cols, 3, frames) tensor with
/// RGB channel order and values in [0,1].
inline RTensor load_image_stack(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::invalid_argument("no image paths given");
  std::vector<cv::Mat> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) {
    cv::Mat img = cv::imread(p, cv::IMREAD_COLOR);
    if (img.empty()) throw std::runtime_error("cannot decode image: " + p);
    if (!frames.empty() && (img.rows != frames.front().rows || img.cols != frames.front().cols)) {
      throw std::runtime_error("mixed image sizes in stack: " + p);
    }
    frames.push_back(std::move(img));
  }
  const Index rows = frames.front().rows;
  const Index cols = frames.front().cols;
  const Index nf = static_cast<Index>(frames.size());
  RTensor t({rows, cols, 3, nf});
  for (Index f = 0; f < nf; ++f) {
    const cv::Mat& img = frames[static_cast<std::size_t>(f)];
    for (Index y = 0; y < rows; ++y) {
      for (Index x = 0; x < cols; ++x) {
        const auto& px = img.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x));
        for (Index c = 0; c < 3; ++c) {
          t(y, x, c, f) = static_cast<double>(px[static_cast<int>(2 - c)]) / 255.0;
        }
      }
    }
  }
  return t;
}

/// Lists, optionally shuffles (frame order permutation, deterministic per
/// seed) and loads a directory of images.
inline RTensor ingest_images(const std::string& dir, bool shuffle = false,
                             std::uint64_t seed = 0) {
  std::vector<std::string> paths = list_image_files(dir);
  if (shuffle) {
    std::mt19937_64 rng(seed);
    for (std::size_t j = 0; j + 1 < paths.size(); ++j) {
      const std::size_t pick =
          j + static_cast<std::size_t>(
                  detail::uniform_below(rng, static_cast<std::uint64_t>(paths.size() - j)));
      std::swap(paths[j], paths[pick]);
    }
  }
  return load_image_stack(paths);
}

inline cv::Mat frame_to_mat(const RTensor& t, Index f) {
  if (t.order() != 4 || t.extent(2) != 3) {
    throw std::invalid_argument("image stack must have shape (rows, cols, 3, frames)");
  }
  cv::Mat img(static_cast<int>(t.extent(0)), static_cast<int>(t.extent(1)), CV_8UC3);
  for (Index y = 0; y < t.extent(0); ++y) {
    for (Index x = 0; x < t.extent(1); ++x) {
      auto& px = img.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x));
      for (Index c = 0; c < 3; ++c) {
        const double v = std::clamp(t(y, x, c, f), 0.0, 1.0);
        px[static_cast<int>(2 - c)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

/// Writes each frame of a (rows, cols, 3, frames) stack as PNG files
/// prefix0000.png, prefix0001.png, ...
inline std::vector<std::string> save_image_stack(const RTensor& t, const std::string& dir,
                                                 const std::string& prefix = "frame_") {
  namespace fs = std::filesystem;
  if (t.order() != 4 || t.extent(2) != 3) {
    throw std::invalid_argument("image stack must have shape (rows, cols, 3, frames)");
  }
  fs::create_directories(dir);
  std::vector<std::string> written;
  for (Index f = 0; f < t.extent(3); ++f) {
    char num[16];
    std::snprintf(num, sizeof(num), "%04d", static_cast<int>(f));
    const std::string path = (fs::path(dir) / (prefix + num + ".png")).string();
    if (!cv::imwrite(path, frame_to_mat(t, f))) {
      throw std::runtime_error("cannot write image: " + path);
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace tu1
