#include "stainkit/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stainkit/png_io.hpp"
#include "stainkit/rng.hpp"

namespace stainkit {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ColorTransform ColorTransform::identity() { return {}; }

ColorTransform ColorTransform::linear(const Eigen::Matrix3d& m, const Eigen::Vector3d& offset) {
    ColorTransform t;
    t.kind = Kind::LinearMatrix;
    t.matrix = m;
    t.offset = offset;
    return t;
}

ColorTransform ColorTransform::per_channel_gamma(const Eigen::Vector3d& exponents) {
    for (int c = 0; c < 3; ++c)
        if (exponents[c] < 0.4 || exponents[c] > 2.5)
            throw std::invalid_argument("ColorTransform: gamma exponents must be in [0.4, 2.5]");
    ColorTransform t;
    t.kind = Kind::PerChannelGamma;
    t.gamma = exponents;
    return t;
}

ColorTransform ColorTransform::composed(std::vector<ColorTransform> parts) {
    ColorTransform t;
    t.kind = Kind::Composed;
    t.parts = std::move(parts);
    return t;
}

ColorTransform ColorTransform::parse(const std::string& spec) {
    if (spec == "identity") return identity();
    if (spec.rfind("gamma:", 0) == 0) {
        Eigen::Vector3d g;
        if (std::sscanf(spec.c_str(), "gamma:%lf,%lf,%lf", &g[0], &g[1], &g[2]) != 3)
            throw std::invalid_argument("teacher spec: expected gamma:a,b,c");
        return per_channel_gamma(g);
    }
    if (spec.rfind("matrix:", 0) == 0) {
        std::vector<double> vals;
        std::stringstream ss(spec.substr(7));
        std::string item;
        while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
        if (vals.size() != 9 && vals.size() != 12)
            throw std::invalid_argument("teacher spec: matrix needs 9 or 12 values");
        Eigen::Matrix3d m;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m(r, c) = vals[r * 3 + c];
        Eigen::Vector3d o = Eigen::Vector3d::Zero();
        if (vals.size() == 12)
            for (int c = 0; c < 3; ++c) o[c] = vals[9 + c];
        return linear(m, o);
    }
    throw std::invalid_argument("teacher spec: unknown kind in \"" + spec + "\"");
}

Eigen::Vector3d ColorTransform::apply_rgb(const Eigen::Vector3d& rgb) const {
    switch (kind) {
        case Kind::Identity:
            return rgb;
        case Kind::LinearMatrix:
            return matrix * rgb + offset;
        case Kind::PerChannelGamma: {
            Eigen::Vector3d out;
            for (int c = 0; c < 3; ++c) {
                const double u = std::clamp(rgb[c] / 255.0, 0.0, 1.0);
                out[c] = 255.0 * std::pow(u, gamma[c]);
            }
            return out;
        }
        case Kind::Composed: {
            Eigen::Vector3d v = rgb;
            for (const ColorTransform& part : parts) v = part.apply_rgb(v);
            return v;
        }
    }
    return rgb;
}

RgbImage apply_transform(const ColorTransform& t, const RgbImage& image) {
    RgbImage out(image.width, image.height);
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
        const Eigen::Vector3d in(static_cast<double>(image.data[p * 3 + 0]),
                                 static_cast<double>(image.data[p * 3 + 1]),
                                 static_cast<double>(image.data[p * 3 + 2]));
        const Eigen::Vector3d v = t.apply_rgb(in);
        for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = quantize8(v[c]);
    }
    return out;
}

RgbImage render_scene(const SynthSceneConfig& cfg) {
    if (cfg.width < 64 || cfg.height < 64)
        throw std::invalid_argument("render_scene: size must be >= 64");
    auto rng = make_rng(cfg.seed, "synth-scene");

    RgbImage img(cfg.width, cfg.height);
    // background with mild uniform noise (high-frequency content by design)
    std::uniform_real_distribution<double> noise(-cfg.noise_amplitude, cfg.noise_amplitude);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c)
            img.data[p * 3 + c] = quantize8(cfg.background_color[c] + noise(rng));

    std::uniform_int_distribution<int> n_cells_dist(cfg.min_cells, cfg.max_cells);
    const int n_cells = cfg.min_cells == cfg.max_cells ? cfg.min_cells : n_cells_dist(rng);
    std::uniform_real_distribution<double> fx(0.0, 1.0);

    for (int cell = 0; cell < n_cells; ++cell) {
        const double cx = fx(rng) * cfg.width;
        const double cy = fx(rng) * cfg.height;
        const double rx = 4.0 + fx(rng) * 0.08 * cfg.width;   // nucleus radii
        const double ry = 4.0 + fx(rng) * 0.08 * cfg.height;
        const double halo = 1.6 + fx(rng) * 0.8;              // cytoplasm extent
        const double angle = fx(rng) * M_PI;
        const double ca = std::cos(angle), sa = std::sin(angle);

        const int x_lo = std::max(0, static_cast<int>(cx - rx * halo - 2));
        const int x_hi = std::min(cfg.width - 1, static_cast<int>(cx + rx * halo + 2));
        const int y_lo = std::max(0, static_cast<int>(cy - ry * halo - 2));
        const int y_hi = std::min(cfg.height - 1, static_cast<int>(cy + ry * halo + 2));
        for (int y = y_lo; y <= y_hi; ++y)
            for (int x = x_lo; x <= x_hi; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double u = (dx * ca + dy * sa) / rx;
                const double v = (-dx * sa + dy * ca) / ry;
                const double d = u * u + v * v;
                if (d <= 1.0) {
                    for (int c = 0; c < 3; ++c) img.at(x, y, c) = cfg.nucleus_color[c];
                } else if (d <= halo * halo) {
                    // blend cytoplasm over whatever is underneath
                    const double w = (halo * halo - d) / (halo * halo - 1.0);
                    for (int c = 0; c < 3; ++c)
                        img.at(x, y, c) = quantize8(w * cfg.cytoplasm_color[c] +
                                                    (1.0 - w) * img.at(x, y, c));
                }
            }
    }
    return img;
}

PairedDataset generate_dataset(const SynthSceneConfig& scene_cfg, const ColorTransform& teacher,
                               int n_train, int n_val, const std::string& out_dir) {
    if (n_train < 1) throw std::invalid_argument("generate_dataset: n_train must be >= 1");
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "source");
    fs::create_directories(fs::path(out_dir) / "target");

    PairedDataset ds;
    const int total = n_train + n_val;
    for (int i = 0; i < total; ++i) {
        SynthSceneConfig cfg = scene_cfg;
        cfg.seed = substream_seed(scene_cfg.seed, "synth-image-" + std::to_string(i));
        const RgbImage source = render_scene(cfg);
        const RgbImage target = apply_transform(teacher, source);

        char name[16];
        std::snprintf(name, sizeof(name), "%04d.png", i);
        const std::string src_path = (fs::path(out_dir) / "source" / name).string();
        const std::string tgt_path = (fs::path(out_dir) / "target" / name).string();
        save_image(source, src_path);
        save_image(target, tgt_path);
        ds.samples.push_back({src_path, tgt_path, i < n_train ? "train" : "val"});
    }
    ds.save_manifest((fs::path(out_dir) / "manifest.jsonl").string());
    std::ofstream tf((fs::path(out_dir) / "teacher.json").string());
    tf << teacher.to_json();
    return ds;
}

std::string ColorTransform::to_json() const {
    switch (kind) {
        case Kind::Identity:
            return "{\"kind\": \"identity\"}\n";
        case Kind::LinearMatrix: {
            std::string s = "{\"kind\": \"linear_matrix\", \"matrix\": [";
            for (int r = 0; r < 3; ++r) {
                s += r ? ", [" : "[";
                for (int c = 0; c < 3; ++c) s += (c ? ", " : "") + fmt17(matrix(r, c));
                s += "]";
            }
            s += "], \"offset\": [";
            for (int c = 0; c < 3; ++c) s += (c ? ", " : "") + fmt17(offset[c]);
            return s + "]}\n";
        }
        case Kind::PerChannelGamma: {
            std::string s = "{\"kind\": \"per_channel_gamma\", \"gamma\": [";
            for (int c = 0; c < 3; ++c) s += (c ? ", " : "") + fmt17(gamma[c]);
            return s + "]}\n";
        }
        case Kind::Composed: {
            std::string s = "{\"kind\": \"composed\", \"parts\": [";
            for (std::size_t i = 0; i < parts.size(); ++i) {
                std::string part = parts[i].to_json();
                if (!part.empty() && part.back() == '\n') part.pop_back();
                s += (i ? ", " : "") + part;
            }
            return s + "]}\n";
        }
    }
    return "{}\n";
}

ColorTransform ColorTransform::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::function<ColorTransform(const nlohmann::json&)> build =
        [&](const nlohmann::json& node) -> ColorTransform {
        const std::string kind = node.at("kind").get<std::string>();
        if (kind == "identity") return identity();
        if (kind == "linear_matrix") {
            Eigen::Matrix3d m;
            Eigen::Vector3d o;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) m(r, c) = node.at("matrix").at(r).at(c).get<double>();
            for (int c = 0; c < 3; ++c) o[c] = node.at("offset").at(c).get<double>();
            return linear(m, o);
        }
        if (kind == "per_channel_gamma") {
            Eigen::Vector3d g;
            for (int c = 0; c < 3; ++c) g[c] = node.at("gamma").at(c).get<double>();
            return per_channel_gamma(g);
        }
        if (kind == "composed") {
            std::vector<ColorTransform> parts;
            for (const auto& p : node.at("parts")) parts.push_back(build(p));
            return composed(std::move(parts));
        }
        throw std::runtime_error("ColorTransform: unknown kind " + kind);
    };
    return build(j);
}

}  // namespace stainkit
