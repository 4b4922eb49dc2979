#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "leakprobe/image.hpp"

namespace leakprobe {

/// Decodes a PNG or JPEG file. Color images come back as 8-bit RGB with any
/// alpha composited over black; grayscale inputs stay single-channel.
/// 16-bit samples are rescaled to 8 bits. Throws DataError naming the file
/// when it cannot be read or decoded.
ImageRecord decode_image_file(const std::filesystem::path& path);

/// Same as decode_image_file but from an in-memory buffer; `origin` is used
/// only for error messages and the record's source_path.
ImageRecord decode_image_buffer(std::span<const std::uint8_t> bytes,
                                const std::filesystem::path& origin);

/// Writes a grayscale or RGB record as a PNG file, creating parent
/// directories as needed.
void write_png(const std::filesystem::path& path, const ImageRecord& image);

}  // namespace leakprobe
