#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "invar/imgcore.hpp"

namespace invar::io {

// 8-bit grayscale loaders map byte b to b / 255 exactly.
Raster read_pgm(const std::filesystem::path& path);
Raster read_png(const std::filesystem::path& path);
/// Dispatches on the file's magic bytes (P2/P5 or PNG).
Raster read_image(const std::filesystem::path& path);

/// Values are clamped to [0, 1] and rounded to the nearest byte.
void write_pgm(const std::filesystem::path& path, const Raster& img, bool binary = true);
void write_png(const std::filesystem::path& path, const Raster& img);

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);

// 16-bit label maps (P5, maxval 65535, big-endian samples).
void write_labels_pgm16(const std::filesystem::path& path, const LabelImage& labels);
LabelImage read_labels_pgm(const std::filesystem::path& path);

// Middlebury .flo: float tag 202021.25, int32 width, int32 height, then
// interleaved float32 (u, v) in row-major order, all little-endian.
inline constexpr float kFloTag = 202021.25f;
void write_flo(const std::filesystem::path& path, const VectorField& field);
VectorField read_flo(const std::filesystem::path& path);

// Plain numeric CSV, one row per line, no header.
Eigen::MatrixXd read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
std::string to_csv(const Eigen::MatrixXd& m);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace invar::io
