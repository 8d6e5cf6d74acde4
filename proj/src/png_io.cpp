#include "ctlayer/error.hpp"
#include "ctlayer/imageops.hpp"

#include <png.h>

#include <cstring>

namespace ctlayer {

namespace {

Image read_rgb(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw Error(ErrorCode::io_error, "cannot read PNG '" + path + "': " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::io_error, "cannot decode PNG '" + path + "': " + msg);
    }
    return Image(image.width, image.height, std::move(pixels));
}

}  // namespace

Image read_png(const std::string& path) { return read_rgb(path); }

Mask read_mask_png(const std::string& path) {
    const Image rgb = read_rgb(path);
    std::vector<std::uint8_t> values(rgb.width() * rgb.height());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto* p = rgb.pixels().data() + i * Image::kChannels;
        values[i] = (p[0] | p[1] | p[2]) ? 1 : 0;
    }
    return Mask(rgb.width(), rgb.height(), std::move(values));
}

void write_png(const Image& img, const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels().data(), 0, nullptr)) {
        throw Error(ErrorCode::io_error, "cannot write PNG '" + path + "': " + image.message);
    }
}

}  // namespace ctlayer
