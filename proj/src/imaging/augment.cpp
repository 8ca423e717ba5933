#include "p2ps/imaging/augment.hpp"

#include <algorithm>
#include <cmath>

#include "p2ps/errors.hpp"

namespace p2ps::imaging {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::uint8_t round_away(double v) {
    double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}
}  // namespace

void AugmentConfig::validate() const {
    if (rotation_range_deg < 0.0 || width_shift_frac < 0.0 || height_shift_frac < 0.0 ||
        shear_range < 0.0) {
        throw ConfigError("augment ranges must be nonnegative");
    }
    if (shear_range >= 1.5) throw ConfigError("augment shear range must stay below 1.5 rad");
    if (zoom_low <= 0.0 || zoom_high < zoom_low) {
        throw ConfigError("augment zoom range must satisfy 0 < low <= high");
    }
}

AugmentConfig AugmentConfig::identity() {
    AugmentConfig c;
    c.rotation_range_deg = 0.0;
    c.width_shift_frac = 0.0;
    c.height_shift_frac = 0.0;
    c.shear_range = 0.0;
    c.zoom_low = 1.0;
    c.zoom_high = 1.0;
    c.horizontal_flip = false;
    c.vertical_flip = false;
    return c;
}

bool AffineParams::is_identity() const {
    return rotation_deg == 0.0 && shift_x_frac == 0.0 && shift_y_frac == 0.0 && shear == 0.0 &&
           zoom_x == 1.0 && zoom_y == 1.0 && !flip_h && !flip_v;
}

AffineParams sample_affine(nn::Pcg32& rng, const AugmentConfig& cfg) {
    cfg.validate();
    AffineParams p;
    p.rotation_deg = rng.uniform(-cfg.rotation_range_deg, cfg.rotation_range_deg);
    p.shift_x_frac = rng.uniform(-cfg.width_shift_frac, cfg.width_shift_frac);
    p.shift_y_frac = rng.uniform(-cfg.height_shift_frac, cfg.height_shift_frac);
    p.shear = rng.uniform(-cfg.shear_range, cfg.shear_range);
    double z = rng.uniform(cfg.zoom_low, cfg.zoom_high);
    p.zoom_x = z;
    p.zoom_y = z;
    if (cfg.horizontal_flip) p.flip_h = rng.bernoulli(0.5);
    if (cfg.vertical_flip) p.flip_v = rng.bernoulli(0.5);
    return p;
}

Image2D apply_affine_one(const Image2D& img, const AffineParams& p, Interp interp) {
    if (img.width <= 0 || img.height <= 0) throw DataError("apply_affine: empty image");
    if (p.is_identity()) return img;

    double theta = p.rotation_deg * kPi / 180.0;
    double ct = std::cos(theta), st = std::sin(theta);
    double cs = std::cos(p.shear), ss = std::sin(p.shear);
    double zx = p.zoom_x * (p.flip_h ? -1.0 : 1.0);
    double zy = p.zoom_y * (p.flip_v ? -1.0 : 1.0);

    // Forward map about the raster center c: q = Z * Sh * R * (p - c) + c + t,
    // with Sh = [[1, -sin s], [0, cos s]]. Output pixels pull from the inverse.
    double a11 = zx * (ct - ss * st);
    double a12 = zx * (-st - ss * ct);
    double a21 = zy * cs * st;
    double a22 = zy * cs * ct;
    double det = a11 * a22 - a12 * a21;
    if (std::abs(det) < 1e-12) throw ConfigError("apply_affine: singular transform");
    double i11 = a22 / det, i12 = -a12 / det;
    double i21 = -a21 / det, i22 = a11 / det;

    double cx = (img.width - 1) / 2.0;
    double cy = (img.height - 1) / 2.0;
    double tx = p.shift_x_frac * img.width;
    double ty = p.shift_y_frac * img.height;

    Image2D out(img.width, img.height);
    for (int oy = 0; oy < img.height; ++oy) {
        double dy = oy - cy - ty;
        for (int ox = 0; ox < img.width; ++ox) {
            double dx = ox - cx - tx;
            double sx = i11 * dx + i12 * dy + cx;
            double sy = i21 * dx + i22 * dy + cy;
            if (interp == Interp::nearest) {
                int ix = std::clamp(static_cast<int>(std::floor(sx + 0.5)), 0, img.width - 1);
                int iy = std::clamp(static_cast<int>(std::floor(sy + 0.5)), 0, img.height - 1);
                out.at(ox, oy) = img.at(ix, iy);
            } else {
                int x0 = static_cast<int>(std::floor(sx));
                int y0 = static_cast<int>(std::floor(sy));
                double fx = sx - x0;
                double fy = sy - y0;
                int x0c = std::clamp(x0, 0, img.width - 1);
                int x1c = std::clamp(x0 + 1, 0, img.width - 1);
                int y0c = std::clamp(y0, 0, img.height - 1);
                int y1c = std::clamp(y0 + 1, 0, img.height - 1);
                double top = (1.0 - fx) * img.at(x0c, y0c) + fx * img.at(x1c, y0c);
                double bot = (1.0 - fx) * img.at(x0c, y1c) + fx * img.at(x1c, y1c);
                out.at(ox, oy) = round_away((1.0 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

std::pair<Image2D, Image2D> apply_affine(const Image2D& img, const Image2D& mask,
                                         const AffineParams& p) {
    if (!img.same_extents(mask)) throw DataError("apply_affine: image/mask extents mismatch");
    return {apply_affine_one(img, p, Interp::bilinear),
            apply_affine_one(mask, p, Interp::nearest)};
}

}  // namespace p2ps::imaging
