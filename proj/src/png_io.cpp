#include "diffscrub/png_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace diffscrub {

uint8_t quantize_unit(float v) {
    float u = (v + 1.0f) * 0.5f * 255.0f;
    int q = static_cast<int>(std::lround(u));
    if (q < 0) q = 0;
    if (q > 255) q = 255;
    return static_cast<uint8_t>(q);
}

float dequantize_unit(uint8_t b) { return static_cast<float>(b) / 255.0f * 2.0f - 1.0f; }

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t read_u32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void write_chunk(std::vector<uint8_t>& out, const char type[4],
                 const std::vector<uint8_t>& payload) {
    put_u32(out, static_cast<uint32_t>(payload.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uint32_t crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32(out, crc);
}

uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<uint8_t>(a);
    if (pb <= pc) return static_cast<uint8_t>(b);
    return static_cast<uint8_t>(c);
}

}  // namespace

void save_png(const std::string& path, const Tensorf& image) {
    if (image.rank() != 3 || image.dim(0) != 3) throw IoError("save_png expects a [3,H,W] image");
    int h = image.dim(1), w = image.dim(2);

    // raw scanlines: filter byte 0 + RGB triples
    std::vector<uint8_t> raw(static_cast<size_t>(h) * (1 + 3 * w));
    for (int y = 0; y < h; y++) {
        uint8_t* row = raw.data() + static_cast<size_t>(y) * (1 + 3 * w);
        row[0] = 0;
        for (int x = 0; x < w; x++)
            for (int c = 0; c < 3; c++)
                row[1 + 3 * x + c] =
                    quantize_unit(image[static_cast<size_t>(c) * h * w + y * w + x]);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("zlib compression failed for " + path);
    compressed.resize(bound);

    std::vector<uint8_t> out;
    const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.insert(out.end(), sig, sig + 8);
    std::vector<uint8_t> ihdr;
    put_u32(ihdr, static_cast<uint32_t>(w));
    put_u32(ihdr, static_cast<uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // no interlace
    write_chunk(out, "IHDR", ihdr);
    write_chunk(out, "IDAT", compressed);
    write_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to " + path);
}

Tensorf load_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw IoError(path + " is not a PNG file");

    size_t pos = 8;
    uint32_t w = 0, h = 0;
    std::vector<uint8_t> idat;
    bool saw_ihdr = false;
    while (pos + 12 <= bytes.size()) {
        uint32_t len = read_u32(bytes.data() + pos);
        std::string type(reinterpret_cast<const char*>(bytes.data() + pos + 4), 4);
        if (pos + 12 + len > bytes.size()) throw IoError(path + ": truncated chunk");
        const uint8_t* payload = bytes.data() + pos + 8;
        if (type == "IHDR") {
            if (len != 13) throw IoError(path + ": bad IHDR");
            w = read_u32(payload);
            h = read_u32(payload + 4);
            if (payload[8] != 8 || payload[9] != 2 || payload[12] != 0)
                throw IoError(path + ": unsupported PNG variant (need 8-bit RGB)");
            saw_ihdr = true;
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || idat.empty()) throw IoError(path + ": missing PNG data");

    size_t stride = 1 + 3 * static_cast<size_t>(w);
    std::vector<uint8_t> raw(stride * h);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw IoError(path + ": corrupt PNG stream");

    // undo per-scanline filters
    for (uint32_t y = 0; y < h; y++) {
        uint8_t* row = raw.data() + y * stride;
        uint8_t filt = row[0];
        uint8_t* cur = row + 1;
        const uint8_t* prev = y > 0 ? raw.data() + (y - 1) * stride + 1 : nullptr;
        for (uint32_t i = 0; i < 3 * w; i++) {
            int a = i >= 3 ? cur[i - 3] : 0;
            int b = prev ? prev[i] : 0;
            int c = (prev && i >= 3) ? prev[i - 3] : 0;
            switch (filt) {
                case 0: break;
                case 1: cur[i] = static_cast<uint8_t>(cur[i] + a); break;
                case 2: cur[i] = static_cast<uint8_t>(cur[i] + b); break;
                case 3: cur[i] = static_cast<uint8_t>(cur[i] + (a + b) / 2); break;
                case 4: cur[i] = static_cast<uint8_t>(cur[i] + paeth(a, b, c)); break;
                default: throw IoError(path + ": unknown PNG filter");
            }
        }
    }

    Tensorf img({3, static_cast<int>(h), static_cast<int>(w)});
    for (uint32_t y = 0; y < h; y++) {
        const uint8_t* row = raw.data() + y * stride + 1;
        for (uint32_t x = 0; x < w; x++)
            for (int c = 0; c < 3; c++)
                img[static_cast<size_t>(c) * h * w + y * w + x] = dequantize_unit(row[3 * x + c]);
    }
    return img;
}

}  // namespace diffscrub
