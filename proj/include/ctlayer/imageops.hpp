#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ctlayer {

/// 8-bit RGB image, row-major, interleaved channels.
class Image {
public:
    static constexpr std::size_t kChannels = 3;

    Image() = default;
    Image(std::size_t width, std::size_t height, std::uint8_t fill = 0)
        : width_(width), height_(height), pixels_(width * height * kChannels, fill) {}
    Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }

    std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
        return pixels_[(row * width_ + col) * kChannels + ch];
    }
    std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch) {
        return pixels_[(row * width_ + col) * kChannels + ch];
    }

    const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Binary foreground mask; 1 keeps the foreground pixel.
class Mask {
public:
    Mask() = default;
    Mask(std::size_t width, std::size_t height, std::uint8_t fill = 0);
    Mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> values);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::uint8_t at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
    std::uint8_t& at(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
    const std::vector<std::uint8_t>& values() const noexcept { return values_; }

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> values_;
};

enum class RotateMode { right_angle, bilinear };

// Counter-clockwise rotation. Right-angle mode accepts 0/90/180/270 (or any
// multiple of 90) and permutes pixels; bilinear mode keeps the image size,
// rotates about the centre and fills uncovered pixels with black.
Image rotate(const Image& img, double angle_degrees, RotateMode mode);

// Average-pool by `factor`, then bilinearly upsample back to the source size.
Image down_up(const Image& img, std::size_t factor);

// Bilinear resize (half-pixel centres, edge clamp), round-half-up.
Image resize_bilinear(const Image& img, std::size_t width, std::size_t height);
// Scales to cover width x height, then crops the centre.
Image cover_resize(const Image& img, std::size_t width, std::size_t height);

// Output tile t is source tile perm[t]; tiles are numbered row-major.
Image shuffle_patches(const Image& img, std::size_t grid, const std::vector<std::size_t>& perm);
// Same, with a uniform permutation drawn from `seed`.
Image shuffle_patches(const Image& img, std::size_t grid, std::uint64_t seed);
std::vector<std::size_t> random_permutation(std::size_t count, std::uint64_t seed);

// out = mask ? fg : bg, per pixel.
Image composite_background(const Image& fg, const Mask& mask, const Image& bg);

// i.i.d. N(mean, std^2) per pixel and channel in [0,1] units, scaled to
// [0,255], clipped and rounded half-up.
Image gaussian_background(std::size_t width, std::size_t height, double mean, double stddev,
                          std::uint64_t seed);

// Per-image seed for batch runs: seed XOR image index.
inline std::uint64_t image_seed(std::uint64_t seed, std::size_t index) {
    return seed ^ static_cast<std::uint64_t>(index);
}

// Angle drawn uniformly from {90, 180, 270}.
int random_right_angle(std::uint64_t seed);

// PNG I/O. Any input colour type is converted to 8-bit RGB; masks treat any
// non-zero channel as foreground.
Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);
Mask read_mask_png(const std::string& path);

}  // namespace ctlayer
