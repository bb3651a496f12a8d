#include "stainkit/lut.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "stainkit/parallel.hpp"

namespace stainkit {

namespace {

constexpr char kMagic[12] = {'S', 'T', 'A', 'I', 'N', 'K', 'I', 'T', 'L', 'U', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32le(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

std::uint32_t get_u32le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return bytes[0] | (bytes[1] << 8) | (bytes[2] << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

Lut3D bake_lut(const PixelNet& net, int size) {
    if (!net.fully_pointwise()) throw std::invalid_argument("bake_lut: net contains spatial kernels");
    if (!Lut3D::valid_size(size)) throw std::invalid_argument("bake_lut: size must be 33, 64 or 256");

    Lut3D lut;
    lut.size = size;
    lut.table.resize(static_cast<std::size_t>(size) * size * size * 3);

    const double step = 255.0 / (size - 1);
    // One r-slice at a time, evaluated as a batch through the usual
    // float-image forward path so the baked values match direct inference.
    const std::size_t slice = static_cast<std::size_t>(size) * size;
    for (int r = 0; r < size; ++r) {
        FloatImage input(static_cast<int>(slice), 1, 3);
        const double rv = r * step;
        for (int g = 0; g < size; ++g)
            for (int b = 0; b < size; ++b) {
                const std::size_t p = static_cast<std::size_t>(g) * size + b;
                input.data[p * 3 + 0] = 2.0 * rv / 255.0 - 1.0;
                input.data[p * 3 + 1] = 2.0 * (g * step) / 255.0 - 1.0;
                input.data[p * 3 + 2] = 2.0 * (b * step) / 255.0 - 1.0;
            }
        const RgbImage out = from_float(forward(net, input), Scale::Symmetric);
        std::memcpy(lut.table.data() + static_cast<std::size_t>(r) * slice * 3, out.data.data(),
                    slice * 3);
    }
    return lut;
}

RgbImage apply_lut(const Lut3D& lut, const RgbImage& image, int threads) {
    RgbImage out(image.width, image.height);
    const std::size_t px = image.pixel_count();

    if (lut.size == 256) {
        parallel_for(px, threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) {
                const std::uint8_t* e = lut.entry(image.data[p * 3], image.data[p * 3 + 1],
                                                  image.data[p * 3 + 2]);
                out.data[p * 3 + 0] = e[0];
                out.data[p * 3 + 1] = e[1];
                out.data[p * 3 + 2] = e[2];
            }
        });
        return out;
    }

    const double scale = static_cast<double>(lut.size - 1) / 255.0;
    parallel_for(px, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double pos[3];
            int i0[3];
            double f[3];
            for (int c = 0; c < 3; ++c) {
                pos[c] = image.data[p * 3 + c] * scale;
                i0[c] = std::min(static_cast<int>(pos[c]), lut.size - 2);
                f[c] = pos[c] - i0[c];
            }
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dr = 0; dr < 2; ++dr)
                    for (int dg = 0; dg < 2; ++dg)
                        for (int db = 0; db < 2; ++db) {
                            const double w = (dr ? f[0] : 1.0 - f[0]) * (dg ? f[1] : 1.0 - f[1]) *
                                             (db ? f[2] : 1.0 - f[2]);
                            acc += w * lut.entry(i0[0] + dr, i0[1] + dg, i0[2] + db)[c];
                        }
                out.data[p * 3 + c] = quantize8(acc);
            }
        }
    });
    return out;
}

void save_lut(const Lut3D& lut, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_lut: cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    put_u32le(out, kVersion);
    put_u32le(out, static_cast<std::uint32_t>(lut.size));
    out.write(reinterpret_cast<const char*>(lut.table.data()),
              static_cast<std::streamsize>(lut.table.size()));
    if (!out) throw std::runtime_error("save_lut: write failed for " + path);
}

Lut3D load_lut(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_lut: cannot open " + path);
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_lut: bad magic in " + path);
    if (get_u32le(in) != kVersion) throw std::runtime_error("load_lut: unsupported version");
    Lut3D lut;
    lut.size = static_cast<int>(get_u32le(in));
    if (!Lut3D::valid_size(lut.size)) throw std::runtime_error("load_lut: invalid grid size");
    lut.table.resize(static_cast<std::size_t>(lut.size) * lut.size * lut.size * 3);
    in.read(reinterpret_cast<char*>(lut.table.data()), static_cast<std::streamsize>(lut.table.size()));
    if (!in) throw std::runtime_error("load_lut: truncated file " + path);
    return lut;
}

void save_cube(const Lut3D& lut, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cube: cannot open " + path + " for writing");
    out << "# baked by stainkit\nLUT_3D_SIZE " << lut.size << "\n";
    char buf[64];
    // .cube order: red index varies fastest
    for (int b = 0; b < lut.size; ++b)
        for (int g = 0; g < lut.size; ++g)
            for (int r = 0; r < lut.size; ++r) {
                const std::uint8_t* e = lut.entry(r, g, b);
                std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f\n", e[0] / 255.0, e[1] / 255.0,
                              e[2] / 255.0);
                out << buf;
            }
}

}  // namespace stainkit
