#include "p2ps/imaging/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "p2ps/errors.hpp"

namespace p2ps::imaging {

namespace {

int clamp_index(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

std::uint8_t round_away(double v) {
    double r = std::floor(v + 0.5);  // inputs are nonnegative
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace

Image2D resize(const Image2D& img, int out_w, int out_h, Interp method) {
    if (out_w <= 0 || out_h <= 0) {
        throw ConfigError("resize target must be positive, got " + std::to_string(out_w) + "x" +
                          std::to_string(out_h));
    }
    if (img.width <= 0 || img.height <= 0) throw DataError("resize: empty source image");
    if (out_w == img.width && out_h == img.height) return img;

    Image2D out(out_w, out_h);
    double sx_scale = static_cast<double>(img.width) / out_w;
    double sy_scale = static_cast<double>(img.height) / out_h;
    for (int oy = 0; oy < out_h; ++oy) {
        double sy = (oy + 0.5) * sy_scale - 0.5;
        for (int ox = 0; ox < out_w; ++ox) {
            double sx = (ox + 0.5) * sx_scale - 0.5;
            if (method == Interp::nearest) {
                int ix = clamp_index(static_cast<int>(std::floor(sx + 0.5)), 0, img.width - 1);
                int iy = clamp_index(static_cast<int>(std::floor(sy + 0.5)), 0, img.height - 1);
                out.at(ox, oy) = img.at(ix, iy);
            } else {
                int x0 = static_cast<int>(std::floor(sx));
                int y0 = static_cast<int>(std::floor(sy));
                double fx = sx - x0;
                double fy = sy - y0;
                int x0c = clamp_index(x0, 0, img.width - 1);
                int x1c = clamp_index(x0 + 1, 0, img.width - 1);
                int y0c = clamp_index(y0, 0, img.height - 1);
                int y1c = clamp_index(y0 + 1, 0, img.height - 1);
                double top = (1.0 - fx) * img.at(x0c, y0c) + fx * img.at(x1c, y0c);
                double bot = (1.0 - fx) * img.at(x0c, y1c) + fx * img.at(x1c, y1c);
                out.at(ox, oy) = round_away((1.0 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

Image2D clahe(const Image2D& img, double clip_limit, int tiles_x, int tiles_y) {
    if (clip_limit <= 0.0 || tiles_x <= 0 || tiles_y <= 0) {
        throw ConfigError("clahe: clip limit and tile counts must be positive");
    }
    if (img.width < tiles_x || img.height < tiles_y) {
        throw DataError("clahe: image " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + " is smaller than the " +
                        std::to_string(tiles_x) + "x" + std::to_string(tiles_y) + " tile grid");
    }

    std::uint8_t gmin = 255;
    std::uint8_t gmax = 0;
    for (std::uint8_t p : img.pixels) {
        gmin = std::min(gmin, p);
        gmax = std::max(gmax, p);
    }
    if (gmin == gmax) return img;
    double out_span = static_cast<double>(gmax) - gmin;

    // Tile t spans [start(t), start(t+1)); centers drive the blending grid.
    auto tile_start_x = [&](int i) { return static_cast<int>(static_cast<long long>(i) * img.width / tiles_x); };
    auto tile_start_y = [&](int j) { return static_cast<int>(static_cast<long long>(j) * img.height / tiles_y); };

    std::vector<std::array<std::uint8_t, 256>> luts(
        static_cast<std::size_t>(tiles_x) * tiles_y);
    std::vector<double> center_x(tiles_x);
    std::vector<double> center_y(tiles_y);

    for (int tj = 0; tj < tiles_y; ++tj) {
        int y0 = tile_start_y(tj);
        int y1 = tile_start_y(tj + 1);
        center_y[tj] = 0.5 * (y0 + y1 - 1);
        for (int ti = 0; ti < tiles_x; ++ti) {
            int x0 = tile_start_x(ti);
            int x1 = tile_start_x(ti + 1);
            if (tj == 0) center_x[ti] = 0.5 * (x0 + x1 - 1);

            long long hist[256] = {};
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) ++hist[img.at(x, y)];
            }
            long long n = static_cast<long long>(x1 - x0) * (y1 - y0);

            // Clip scaled to the tile population: a limit of 1.0 means the
            // uniform-histogram level; redistribute the excess evenly.
            long long clip = std::max<long long>(
                1, static_cast<long long>(clip_limit * static_cast<double>(n) / 256.0));
            long long excess = 0;
            for (long long& b : hist) {
                if (b > clip) {
                    excess += b - clip;
                    b = clip;
                }
            }
            long long per_bin = excess / 256;
            long long leftover = excess % 256;
            for (int v = 0; v < 256; ++v) hist[v] += per_bin + (v < leftover ? 1 : 0);

            auto& lut = luts[static_cast<std::size_t>(tj) * tiles_x + ti];
            long long cdf = 0;
            for (int v = 0; v < 256; ++v) {
                cdf += hist[v];
                double mapped = gmin + std::floor(static_cast<double>(cdf) / n * out_span + 0.5);
                lut[v] = static_cast<std::uint8_t>(std::clamp(mapped, 0.0, 255.0));
            }
        }
    }

    auto lut_at = [&](int tj, int ti) -> const std::array<std::uint8_t, 256>& {
        return luts[static_cast<std::size_t>(tj) * tiles_x + ti];
    };
    // For a coordinate c, locate the bracketing tile centers and the blend
    // weight toward the higher one; outside the first/last center, clamp.
    auto bracket = [](double c, const std::vector<double>& centers, int& lo, int& hi, double& w) {
        int n = static_cast<int>(centers.size());
        if (n == 1 || c <= centers.front()) {
            lo = hi = 0;
            w = 0.0;
            return;
        }
        if (c >= centers.back()) {
            lo = hi = n - 1;
            w = 0.0;
            return;
        }
        int i = 0;
        while (c > centers[i + 1]) ++i;
        lo = i;
        hi = i + 1;
        w = (c - centers[i]) / (centers[i + 1] - centers[i]);
    };

    Image2D out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        int j0, j1;
        double wy;
        bracket(y, center_y, j0, j1, wy);
        for (int x = 0; x < img.width; ++x) {
            int i0, i1;
            double wx;
            bracket(x, center_x, i0, i1, wx);
            std::uint8_t v = img.at(x, y);
            double top = (1.0 - wx) * lut_at(j0, i0)[v] + wx * lut_at(j0, i1)[v];
            double bot = (1.0 - wx) * lut_at(j1, i0)[v] + wx * lut_at(j1, i1)[v];
            out.at(x, y) = round_away((1.0 - wy) * top + wy * bot);
        }
    }
    return out;
}

}  // namespace p2ps::imaging
