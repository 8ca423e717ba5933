#pragma once

#include "p2ps/imaging/image.hpp"

namespace p2ps::imaging {

enum class Interp { bilinear, nearest };

/// Resamples with half-pixel-centered source coordinates. Bilinear rounds
/// half away from zero; nearest picks an existing pixel, so binary masks
/// stay binary. Same-size resize is the identity for both methods.
Image2D resize(const Image2D& img, int out_w, int out_h, Interp method);

/// Contrast-limited adaptive histogram equalization. Per-tile clipped
/// histograms with even excess redistribution, bilinear blending between
/// tile mappings. The mapping targets the image's own [min, max] interval,
/// so constant images pass through unchanged and the 8-bit range never
/// widens. Throws DataError when the image is smaller than the tile grid
/// or ConfigError for nonpositive parameters.
Image2D clahe(const Image2D& img, double clip_limit = 2.0, int tiles_x = 8, int tiles_y = 8);

}  // namespace p2ps::imaging
