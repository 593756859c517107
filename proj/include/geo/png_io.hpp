#pragma once

#include <string>

#include "geo/raster.hpp"

namespace geo {

// Masks persist as single-channel 8-bit PNG with pixel value equal to the
// label id; images as 8-bit RGB PNG. Compression settings are pinned so the
// emitted bytes are reproducible.
void write_mask_png(const std::string& path, const LabelMask& mask);
LabelMask read_mask_png(const std::string& path);

void write_image_png(const std::string& path, const ImagePatch& img);
ImagePatch read_image_png(const std::string& path);

}  // namespace geo
