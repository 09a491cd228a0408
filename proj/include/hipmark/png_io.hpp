#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hipmark/types.hpp"

namespace hipmark {

// 8-bit grayscale PNG io, enough for the dataset contract. Reading supports
// non-interlaced 8-bit grayscale files with any scanline filter; everything
// else is rejected with an error naming the file.

void write_gray8_png(const std::string& path, const MatrixXd& image01);
MatrixXd read_gray8_png(const std::string& path);

std::vector<std::uint8_t> encode_gray8_png(const MatrixXd& image01);
MatrixXd decode_gray8_png(const std::vector<std::uint8_t>& bytes,
                          const std::string& origin = "<memory>");

}  // namespace hipmark
