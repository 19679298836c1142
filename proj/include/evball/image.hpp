// 8-bit grayscale image and binary PGM (P5) I/O.
#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace evball {

struct Image8 {
    std::int32_t width = 0;
    std::int32_t height = 0;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(std::int32_t w, std::int32_t h)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t& at(std::int32_t x, std::int32_t y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t at(std::int32_t x, std::int32_t y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t* row(std::int32_t y) { return data.data() + static_cast<std::size_t>(y) * width; }
    const std::uint8_t* row(std::int32_t y) const {
        return data.data() + static_cast<std::size_t>(y) * width;
    }

    void resize(std::int32_t w, std::int32_t h) {
        width = w;
        height = h;
        data.assign(static_cast<std::size_t>(w) * h, 0);
    }

    friend bool operator==(const Image8&, const Image8&) = default;
};

inline void write_pgm(const Image8& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline Image8 read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open");
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255 || w < 1 || h < 1)
        throw std::runtime_error(path + ": unsupported PGM");
    f.get();  // single whitespace after maxval
    Image8 img(w, h);
    f.read(reinterpret_cast<char*>(img.data.data()),
           static_cast<std::streamsize>(img.data.size()));
    if (!f) throw std::runtime_error(path + ": truncated PGM");
    return img;
}

}  // namespace evball
