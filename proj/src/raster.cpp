#include "granulo/raster.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

// jpeglib.h needs size_t and FILE declared first.
#include <jpeglib.h>

namespace granulo {

namespace {

bool is_png(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff;
}

// Reads the IHDR bit depth directly so 16-bit files are rejected instead of
// being quietly reduced by the simplified libpng API.
int png_bit_depth(std::span<const std::uint8_t> bytes) {
    // signature(8) + length(4) + "IHDR"(4) + width(4) + height(4) + depth(1)
    if (bytes.size() < 25 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
        throw DecodeError("PNG stream has no IHDR chunk");
    }
    return bytes[24];
}

ColorImage decode_png(std::span<const std::uint8_t> bytes) {
    if (png_bit_depth(bytes) > 8) {
        throw DecodeError("16-bit PNG images are not supported");
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw DecodeError(std::string("PNG decode failed: ") + image.message);
    }
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw DimensionError("PNG image has zero size");
    }
    // Read with alpha so it can be dropped rather than composited.
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("PNG decode failed: " + msg);
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    std::vector<Rgb> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = Rgb{buffer[4 * i], buffer[4 * i + 1], buffer[4 * i + 2]};
    }
    return ColorImage(w, h, std::move(px));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Kept free of objects with non-trivial destructors between setjmp and the
// last libjpeg call.
bool decode_jpeg_raw(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& out,
                     int& width, int& height, int& channels, char* message) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        std::memcpy(message, err.message, JMSG_LENGTH_MAX);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, const_cast<unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.data_precision != 8) {
        std::snprintf(message, JMSG_LENGTH_MAX, "only 8-bit JPEG is supported");
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    channels = cinfo.output_components;
    out.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data() + static_cast<std::size_t>(cinfo.output_scanline) * static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

ColorImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> raw;
    int w = 0, h = 0, ch = 0;
    char message[JMSG_LENGTH_MAX] = {};
    if (!decode_jpeg_raw(bytes, raw, w, h, ch, message)) {
        throw DecodeError(std::string("JPEG decode failed: ") + message);
    }
    if (w == 0 || h == 0) {
        throw DimensionError("JPEG image has zero size");
    }
    if (ch != 3) {
        throw DecodeError("JPEG decoder did not produce RGB output");
    }
    std::vector<Rgb> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = Rgb{raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]};
    }
    return ColorImage(w, h, std::move(px));
}

std::vector<std::uint8_t> encode_png_raw(const std::uint8_t* data, int w, int h, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
        throw Error(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

struct JpegCompressError {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_compress_error_exit(j_common_ptr cinfo) {
    std::longjmp(reinterpret_cast<JpegCompressError*>(cinfo->err)->jump, 1);
}

bool encode_jpeg_raw(const std::uint8_t* rgb, int w, int h, int quality, unsigned char** buf,
                     unsigned long* len) {
    jpeg_compress_struct cinfo;
    JpegCompressError err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_compress_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, buf, len);
    cinfo.image_width = static_cast<JDIMENSION>(w);
    cinfo.image_height = static_cast<JDIMENSION>(h);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<std::uint8_t*>(rgb) + static_cast<std::size_t>(cinfo.next_scanline) * static_cast<std::size_t>(w) * 3;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

}  // namespace

ColorImage decode_image(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) {
        return decode_png(bytes);
    }
    if (is_jpeg(bytes)) {
        return decode_jpeg(bytes);
    }
    throw DecodeError("unrecognized image format (expected PNG or JPEG)");
}

ColorImage read_image(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file(path);
    } catch (const Error& e) {
        throw DecodeError(e.what());
    }
    return decode_image(bytes);
}

std::uint8_t luma(Rgb px) noexcept {
    const unsigned v = 299u * px.r + 587u * px.g + 114u * px.b + 500u;
    return static_cast<std::uint8_t>(v / 1000u);
}

GrayImage to_grayscale(const ColorImage& img) {
    GrayImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = luma(src[i]);
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    return encode_png_raw(img.pixels().data(), img.width(), img.height(), PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> encode_png(const ColorImage& img) {
    static_assert(sizeof(Rgb) == 3);
    return encode_png_raw(reinterpret_cast<const std::uint8_t*>(img.pixels().data()), img.width(),
                          img.height(), PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_jpeg(const ColorImage& img, int quality) {
    unsigned char* buf = nullptr;
    unsigned long len = 0;
    const bool ok = encode_jpeg_raw(reinterpret_cast<const std::uint8_t*>(img.pixels().data()),
                                    img.width(), img.height(), quality, &buf, &len);
    std::vector<std::uint8_t> out;
    if (ok) {
        out.assign(buf, buf + len);
    }
    std::free(buf);
    if (!ok) {
        throw Error("JPEG encode failed");
    }
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open for reading: " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace granulo
