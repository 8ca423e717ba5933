#include "p2ps/imaging/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "p2ps/errors.hpp"

namespace p2ps::imaging {

namespace {

struct MemReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
    auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
    if (r->pos + count > r->size) {
        png_error(png, "read past end of buffer");
        return;
    }
    std::memcpy(out, r->data + r->pos, count);
    r->pos += count;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t count) {
    auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    v->insert(v->end(), data, data + count);
}

void flush_noop(png_structp) {}

[[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err != nullptr && msg != nullptr) *err = msg;
    longjmp(png_jmpbuf(png), 1);
}

void on_png_warning(png_structp, png_const_charp) {}

std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(y + 0.5);
}

}  // namespace

Image2D decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw DataError("not a PNG stream");
    }
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error,
                                             on_png_warning);
    if (png == nullptr) throw DataError("png decoder allocation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("png decoder allocation failed");
    }

    std::vector<png_byte> interleaved;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("malformed PNG: " + (err.empty() ? std::string("decode failed") : err));
    }

    MemReader reader{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &reader, read_from_memory);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    // Normalize every input to 8-bit RGB or gray, dropping alpha.
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    std::size_t rowbytes = png_get_rowbytes(png, info);
    interleaved.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = interleaved.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image2D img(static_cast<int>(w), static_cast<int>(h));
    if (channels == 1) {
        for (png_uint_32 y = 0; y < h; ++y) {
            std::memcpy(&img.at(0, static_cast<int>(y)), interleaved.data() + rowbytes * y, w);
        }
    } else if (channels == 3) {
        for (png_uint_32 y = 0; y < h; ++y) {
            const png_byte* row = interleaved.data() + rowbytes * y;
            for (png_uint_32 x = 0; x < w; ++x) {
                img.at(static_cast<int>(x), static_cast<int>(y)) =
                    luma601(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
            }
        }
    } else {
        throw DataError("unsupported PNG channel count " + std::to_string(channels));
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const Image2D& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * img.height) {
        throw DataError("encode_png: inconsistent image extents");
    }
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error,
                                              on_png_warning);
    if (png == nullptr) throw DataError("png encoder allocation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("png encoder allocation failed");
    }

    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG encode failed: " + (err.empty() ? std::string("unknown") : err));
    }

    png_set_write_fn(png, &out, write_to_vector, flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        rows[y] = const_cast<png_bytep>(&img.at(0, y));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Image2D load_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw IoError("read failed for " + path);
    try {
        return decode_png(bytes);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void save_png(const Image2D& img, const std::string& path) {
    std::vector<std::uint8_t> bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw IoError("write failed for " + path);
}

}  // namespace p2ps::imaging
