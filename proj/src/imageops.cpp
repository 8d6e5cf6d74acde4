#include "ctlayer/imageops.hpp"

#include "ctlayer/error.hpp"
#include "ctlayer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>

namespace ctlayer {

Image::Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width_ * height_ * kChannels) {
        throw Error(ErrorCode::invalid_argument, "pixel buffer does not match image size");
    }
}

Mask::Mask(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), values_(width * height, fill ? 1 : 0) {}

Mask::Mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != width_ * height_) {
        throw Error(ErrorCode::invalid_argument, "mask buffer does not match mask size");
    }
    for (auto& v : values_) v = v ? 1 : 0;
}

namespace {

std::uint8_t round_to_byte(double v) {
    const double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

// A W x H x 3 grid of doubles; used for intermediate (unrounded) results.
struct Plane {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c, std::size_t ch) const {
        return values[(r * width + c) * Image::kChannels + ch];
    }
};

Plane to_plane(const Image& img) {
    Plane p{img.width(), img.height(), {}};
    p.values.assign(img.pixels().begin(), img.pixels().end());
    return p;
}

// Bilinear resample with half-pixel centres and edge clamping.
Image resample(const Plane& src, std::size_t width, std::size_t height) {
    Image out(width, height);
    const double sx_scale = static_cast<double>(src.width) / static_cast<double>(width);
    const double sy_scale = static_cast<double>(src.height) / static_cast<double>(height);
    const double max_x = static_cast<double>(src.width - 1);
    const double max_y = static_cast<double>(src.height - 1);
    for (std::size_t y = 0; y < height; ++y) {
        const double sy = std::clamp((static_cast<double>(y) + 0.5) * sy_scale - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, src.height - 1);
        const double ty = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double sx =
                std::clamp((static_cast<double>(x) + 0.5) * sx_scale - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, src.width - 1);
            const double tx = sx - static_cast<double>(x0);
            for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
                const double top = src.at(y0, x0, ch) * (1.0 - tx) + src.at(y0, x1, ch) * tx;
                const double bottom = src.at(y1, x0, ch) * (1.0 - tx) + src.at(y1, x1, ch) * tx;
                out.at(y, x, ch) = round_to_byte(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    return out;
}

void require_nonempty(const Image& img) {
    if (img.width() == 0 || img.height() == 0) {
        throw Error(ErrorCode::empty_input, "image has zero size");
    }
}

Image rotate_right_angle(const Image& img, int angle) {
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    if (angle == 0) return img;
    if (angle == 180) {
        Image out(w, h);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j)
                for (std::size_t ch = 0; ch < Image::kChannels; ++ch)
                    out.at(i, j, ch) = img.at(h - 1 - i, w - 1 - j, ch);
        return out;
    }
    // 90 and 270 swap the dimensions.
    Image out(h, w);
    for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < h; ++j)
            for (std::size_t ch = 0; ch < Image::kChannels; ++ch)
                out.at(i, j, ch) =
                    angle == 90 ? img.at(j, w - 1 - i, ch) : img.at(h - 1 - j, i, ch);
    return out;
}

Image rotate_bilinear(const Image& img, double angle_degrees) {
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    const double theta = angle_degrees * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double cx = static_cast<double>(w) / 2.0;
    const double cy = static_cast<double>(h) / 2.0;

    auto sample = [&](long r, long col, std::size_t ch) -> double {
        if (r < 0 || col < 0 || r >= static_cast<long>(h) || col >= static_cast<long>(w)) {
            return 0.0;
        }
        return img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(col), ch);
    };

    Image out(w, h);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const double x = static_cast<double>(j) + 0.5 - cx;
            const double y = static_cast<double>(i) + 0.5 - cy;
            // Inverse map: output (x, y) reads source (x c - y s, x s + y c).
            const double px = x * c - y * s + cx - 0.5;
            const double py = x * s + y * c + cy - 0.5;
            if (px <= -1.0 || py <= -1.0 || px >= static_cast<double>(w) ||
                py >= static_cast<double>(h)) {
                continue;
            }
            const double fx = std::floor(px);
            const double fy = std::floor(py);
            const double tx = px - fx;
            const double ty = py - fy;
            const auto x0 = static_cast<long>(fx);
            const auto y0 = static_cast<long>(fy);
            for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
                const double top = sample(y0, x0, ch) * (1.0 - tx) + sample(y0, x0 + 1, ch) * tx;
                const double bottom =
                    sample(y0 + 1, x0, ch) * (1.0 - tx) + sample(y0 + 1, x0 + 1, ch) * tx;
                out.at(i, j, ch) = round_to_byte(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    return out;
}

}  // namespace

Image rotate(const Image& img, double angle_degrees, RotateMode mode) {
    require_nonempty(img);
    if (!std::isfinite(angle_degrees)) {
        throw Error(ErrorCode::invalid_argument, "rotation angle must be finite");
    }
    if (mode == RotateMode::bilinear) return rotate_bilinear(img, angle_degrees);
    for (int a : {0, 90, 180, 270}) {
        if (angle_degrees == a) return rotate_right_angle(img, a);
    }
    throw Error(ErrorCode::invalid_argument,
                "right-angle rotation needs an angle in {0, 90, 180, 270}, got " +
                    std::to_string(angle_degrees));
}

Image down_up(const Image& img, std::size_t factor) {
    require_nonempty(img);
    if (factor < 1) throw Error(ErrorCode::invalid_argument, "down-up factor must be >= 1");
    if (img.width() % factor != 0 || img.height() % factor != 0) {
        throw Error(ErrorCode::invalid_argument,
                    "down-up factor " + std::to_string(factor) + " does not divide " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    if (factor == 1) return img;
    Plane small{img.width() / factor, img.height() / factor, {}};
    small.values.assign(small.width * small.height * Image::kChannels, 0.0);
    const double area = static_cast<double>(factor * factor);
    for (std::size_t r = 0; r < small.height; ++r) {
        for (std::size_t c = 0; c < small.width; ++c) {
            for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
                double sum = 0.0;
                for (std::size_t dr = 0; dr < factor; ++dr)
                    for (std::size_t dc = 0; dc < factor; ++dc)
                        sum += img.at(r * factor + dr, c * factor + dc, ch);
                small.values[(r * small.width + c) * Image::kChannels + ch] = sum / area;
            }
        }
    }
    return resample(small, img.width(), img.height());
}

Image resize_bilinear(const Image& img, std::size_t width, std::size_t height) {
    require_nonempty(img);
    if (width == 0 || height == 0) {
        throw Error(ErrorCode::invalid_argument, "resize target has zero size");
    }
    if (width == img.width() && height == img.height()) return img;
    return resample(to_plane(img), width, height);
}

Image cover_resize(const Image& img, std::size_t width, std::size_t height) {
    require_nonempty(img);
    const double scale = std::max(static_cast<double>(width) / static_cast<double>(img.width()),
                                  static_cast<double>(height) / static_cast<double>(img.height()));
    const auto rw = std::max(width, static_cast<std::size_t>(
                                        std::ceil(static_cast<double>(img.width()) * scale)));
    const auto rh = std::max(height, static_cast<std::size_t>(
                                         std::ceil(static_cast<double>(img.height()) * scale)));
    const Image resized = resize_bilinear(img, rw, rh);
    const std::size_t ox = (rw - width) / 2;
    const std::size_t oy = (rh - height) / 2;
    Image out(width, height);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            for (std::size_t ch = 0; ch < Image::kChannels; ++ch)
                out.at(r, c, ch) = resized.at(r + oy, c + ox, ch);
    return out;
}

Image shuffle_patches(const Image& img, std::size_t grid, const std::vector<std::size_t>& perm) {
    require_nonempty(img);
    if (grid < 1 || img.width() % grid != 0 || img.height() % grid != 0) {
        throw Error(ErrorCode::invalid_argument,
                    "patch grid " + std::to_string(grid) + " does not divide " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    const std::size_t tiles = grid * grid;
    if (perm.size() != tiles) {
        throw Error(ErrorCode::invalid_argument, "permutation has " + std::to_string(perm.size()) +
                                                     " entries, expected " +
                                                     std::to_string(tiles));
    }
    std::vector<bool> seen(tiles, false);
    for (std::size_t p : perm) {
        if (p >= tiles || seen[p]) {
            throw Error(ErrorCode::invalid_argument, "perm is not a permutation of the tiles");
        }
        seen[p] = true;
    }
    const std::size_t tw = img.width() / grid;
    const std::size_t th = img.height() / grid;
    Image out(img.width(), img.height());
    for (std::size_t t = 0; t < tiles; ++t) {
        const std::size_t dst_r = (t / grid) * th;
        const std::size_t dst_c = (t % grid) * tw;
        const std::size_t src_r = (perm[t] / grid) * th;
        const std::size_t src_c = (perm[t] % grid) * tw;
        for (std::size_t r = 0; r < th; ++r)
            for (std::size_t c = 0; c < tw; ++c)
                for (std::size_t ch = 0; ch < Image::kChannels; ++ch)
                    out.at(dst_r + r, dst_c + c, ch) = img.at(src_r + r, src_c + c, ch);
    }
    return out;
}

std::vector<std::size_t> random_permutation(std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> perm(count);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm.begin(), perm.end());
    return perm;
}

Image shuffle_patches(const Image& img, std::size_t grid, std::uint64_t seed) {
    return shuffle_patches(img, grid, random_permutation(grid * grid, seed));
}

Image composite_background(const Image& fg, const Mask& mask, const Image& bg) {
    if (fg.width() != bg.width() || fg.height() != bg.height() || mask.width() != fg.width() ||
        mask.height() != fg.height()) {
        throw Error(ErrorCode::dim_mismatch, "foreground, mask and background sizes differ");
    }
    Image out = bg;
    for (std::size_t r = 0; r < fg.height(); ++r)
        for (std::size_t c = 0; c < fg.width(); ++c)
            if (mask.at(r, c))
                for (std::size_t ch = 0; ch < Image::kChannels; ++ch)
                    out.at(r, c, ch) = fg.at(r, c, ch);
    return out;
}

Image gaussian_background(std::size_t width, std::size_t height, double mean, double stddev,
                          std::uint64_t seed) {
    if (!(stddev >= 0.0) || !std::isfinite(stddev) || !std::isfinite(mean)) {
        throw Error(ErrorCode::invalid_argument, "noise std must be >= 0 and parameters finite");
    }
    Rng rng(seed);
    std::vector<std::uint8_t> pixels(width * height * Image::kChannels);
    for (auto& p : pixels) p = round_to_byte(std::clamp(rng.normal(mean, stddev) * 255.0, 0.0, 255.0));
    return Image(width, height, std::move(pixels));
}

int random_right_angle(std::uint64_t seed) {
    Rng rng(seed);
    return 90 * static_cast<int>(1 + rng.uniform_index(3));
}

}  // namespace ctlayer
