#pragma once

#include <utility>

#include "p2ps/imaging/image.hpp"
#include "p2ps/imaging/ops.hpp"
#include "p2ps/nn/rng.hpp"

namespace p2ps::imaging {

/// Ranges for random affine augmentation of training pairs.
struct AugmentConfig {
    double rotation_range_deg = 5.0;
    double width_shift_frac = 0.05;
    double height_shift_frac = 0.05;
    double shear_range = 0.01;  // radians
    double zoom_low = 0.8;
    double zoom_high = 1.2;
    bool horizontal_flip = true;
    bool vertical_flip = false;

    void validate() const;  // throws ConfigError

    /// All ranges collapsed so sample_affine returns the identity.
    static AugmentConfig identity();
};

/// One concrete draw from AugmentConfig ranges. Defaults are the identity.
struct AffineParams {
    double rotation_deg = 0.0;
    double shift_x_frac = 0.0;
    double shift_y_frac = 0.0;
    double shear = 0.0;
    double zoom_x = 1.0;
    double zoom_y = 1.0;
    bool flip_h = false;
    bool flip_v = false;

    bool is_identity() const;
};

/// Draw order is fixed (rotation, shift x, shift y, shear, zoom, flips) so
/// streams are reproducible. Zoom is isotropic: one draw sets both axes.
AffineParams sample_affine(nn::Pcg32& rng, const AugmentConfig& cfg);

/// Applies one center-anchored affine map (rotation, then shear, then zoom,
/// then translation; flips fold into the zoom signs) to both rasters by
/// inverse mapping: bilinear for the image, nearest for the mask, with
/// out-of-range samples clamped to the nearest edge pixel.
std::pair<Image2D, Image2D> apply_affine(const Image2D& img, const Image2D& mask,
                                         const AffineParams& p);

/// Single-raster variant with an explicit interpolation choice.
Image2D apply_affine_one(const Image2D& img, const AffineParams& p, Interp interp);

}  // namespace p2ps::imaging
