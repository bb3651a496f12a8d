#include "stainkit/pixelnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "stainkit/parallel.hpp"
#include "stainkit/rng.hpp"

namespace stainkit {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline int reflect(int i, int n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

template <typename T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// (in*9) x N patch matrix with reflection padding; column layout matches the
// (i*k + ky)*k + kx weight ordering.
template <typename T>
MatT<T> im2col3(const MatT<T>& input, int width, int height) {
    const int in = static_cast<int>(input.rows());
    MatT<T> cols(in * 9, input.cols());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Eigen::Index p = static_cast<Eigen::Index>(y) * width + x;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = reflect(y + ky - 1, height);
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = reflect(x + kx - 1, width);
                    const Eigen::Index q = static_cast<Eigen::Index>(sy) * width + sx;
                    for (int i = 0; i < in; ++i)
                        cols(static_cast<Eigen::Index>(i) * 9 + ky * 3 + kx, p) = input(i, q);
                }
            }
        }
    }
    return cols;
}

template <typename T>
MatT<T> layer_forward(const PixelNet::Layer& layer, const MatT<T>& input, int width, int height,
                      int threads) {
    const MatT<T> w = layer.weights.template cast<T>();
    const Eigen::Matrix<T, Eigen::Dynamic, 1> b = layer.bias.template cast<T>();
    MatT<T> out(layer.spec.out_channels, input.cols());
    if (layer.spec.kernel == 1) {
        // Work is split into fixed-width column blocks and the blocks are
        // distributed over threads, so every GEMM call sees the same shape
        // regardless of the thread count and results stay bit-identical.
        constexpr std::size_t kBlock = 4096;
        const std::size_t cols = static_cast<std::size_t>(input.cols());
        const std::size_t blocks = (cols + kBlock - 1) / kBlock;
        parallel_for(blocks, threads, [&](std::size_t blo, std::size_t bhi) {
            for (std::size_t blk = blo; blk < bhi; ++blk) {
                const Eigen::Index lo = static_cast<Eigen::Index>(blk * kBlock);
                const Eigen::Index n =
                    static_cast<Eigen::Index>(std::min(cols, (blk + 1) * kBlock)) - lo;
                out.middleCols(lo, n).noalias() = w * input.middleCols(lo, n);
                out.middleCols(lo, n).colwise() += b;
            }
        });
    } else {
        const MatT<T> cols = im2col3(input, width, height);
        out.noalias() = w * cols;
        out.colwise() += b;
    }
    return out;
}

// Fully-pointwise fast path: each fixed-width column block is carried through
// every layer while its activations stay cache-resident, instead of
// materializing full-image intermediates. GEMM shapes per block are identical
// to the layer-at-a-time path, so outputs are bit-identical to it (and
// independent of thread count).
template <typename T>
PlanarImage<T> forward_pointwise(const PixelNet& net, const PlanarImage<T>& image, int threads) {
    const Eigen::Index n = static_cast<Eigen::Index>(image.pixel_count());
    const std::size_t nlayers = net.layers.size();
    std::vector<MatT<T>> ws(nlayers);
    std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> bs(nlayers);
    Eigen::Index wmax = 3;
    for (std::size_t l = 0; l < nlayers; ++l) {
        ws[l] = net.layers[l].weights.template cast<T>();
        bs[l] = net.layers[l].bias.template cast<T>();
        wmax = std::max<Eigen::Index>(wmax, net.layers[l].spec.out_channels);
    }
    PlanarImage<T> out(image.width, image.height, 3);
    const Eigen::Map<const MatT<T>> in(image.data.data(), 3, n);
    Eigen::Map<MatT<T>> om(out.data.data(), 3, n);

    constexpr Eigen::Index kBlock = 4096;
    const std::size_t blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
    parallel_for(blocks, threads, [&](std::size_t blo, std::size_t bhi) {
        MatT<T> scratch[2] = {MatT<T>(wmax, kBlock), MatT<T>(wmax, kBlock)};
        for (std::size_t blk = blo; blk < bhi; ++blk) {
            const Eigen::Index c0 = static_cast<Eigen::Index>(blk) * kBlock;
            const Eigen::Index nn = std::min<Eigen::Index>(n - c0, kBlock);
            int cur = 0;
            for (std::size_t l = 0; l + 1 < nlayers; ++l) {
                const Eigen::Index oc = net.layers[l].spec.out_channels;
                auto dst = scratch[cur ^ 1].topLeftCorner(oc, nn);
                if (l == 0)
                    dst.noalias() = ws[0] * in.middleCols(c0, nn);
                else
                    dst.noalias() =
                        ws[l] * scratch[cur].topLeftCorner(net.layers[l].spec.in_channels, nn);
                dst.colwise() += bs[l];
                dst = dst.cwiseMax(T(0));
                cur ^= 1;
            }
            auto dst = om.middleCols(c0, nn);
            if (nlayers == 1)
                dst.noalias() = ws[0] * in.middleCols(c0, nn);
            else
                dst.noalias() = ws[nlayers - 1] *
                                scratch[cur].topLeftCorner(net.layers.back().spec.in_channels, nn);
            dst.colwise() += bs[nlayers - 1];
            dst = dst.cwiseMax(T(-1)).cwiseMin(T(1));
        }
    });
    return out;
}

template <typename T>
PlanarImage<T> forward_impl(const PixelNet& net, const PlanarImage<T>& image, int threads) {
    if (image.channels != 3) throw std::invalid_argument("forward: expected 3 channels");
    if (net.fully_pointwise()) return forward_pointwise(net, image, threads);
    const Eigen::Index n = static_cast<Eigen::Index>(image.pixel_count());
    MatT<T> act = Eigen::Map<const MatT<T>>(image.data.data(), 3, n);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        act = layer_forward(net.layers[l], act, image.width, image.height, threads);
        if (l + 1 < net.layers.size())
            act = act.cwiseMax(T(0));
        else
            act = act.cwiseMax(T(-1)).cwiseMin(T(1));
    }
    PlanarImage<T> out(image.width, image.height, static_cast<int>(act.rows()));
    Eigen::Map<MatT<T>>(out.data.data(), act.rows(), n) = act;
    return out;
}

}  // namespace

PixelNetConfig PixelNetConfig::standard(int hidden_width) {
    PixelNetConfig cfg;
    cfg.hidden_width = hidden_width;
    cfg.layers = {{3, hidden_width, 1}, {hidden_width, hidden_width, 1}, {hidden_width, 3, 1}};
    return cfg;
}

void PixelNetConfig::validate() const {
    if (layers.empty()) throw std::invalid_argument("PixelNetConfig: no layers");
    if (layers.front().in_channels != 3 || layers.back().out_channels != 3)
        throw std::invalid_argument("PixelNetConfig: network must map 3 -> 3 channels");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.kernel != 1 && l.kernel != 3)
            throw std::invalid_argument("PixelNetConfig: kernel must be 1 or 3");
        if (l.in_channels < 1 || l.out_channels < 1)
            throw std::invalid_argument("PixelNetConfig: channels must be >= 1");
        if (i > 0 && layers[i - 1].out_channels != l.in_channels)
            throw std::invalid_argument("PixelNetConfig: broken channel chain");
    }
}

bool PixelNetConfig::fully_pointwise() const {
    for (const LayerSpec& l : layers)
        if (l.kernel != 1) return false;
    return true;
}

PixelNet pixelnet_init(const PixelNetConfig& config, std::uint64_t seed) {
    config.validate();
    PixelNet net;
    net.config = config;
    auto rng = make_rng(seed, "init");
    for (const LayerSpec& spec : config.layers) {
        PixelNet::Layer layer;
        layer.spec = spec;
        const int fan_in = spec.in_channels * spec.kernel * spec.kernel;
        const double bound = std::sqrt(1.0 / fan_in);
        std::uniform_real_distribution<double> unif(-bound, bound);
        layer.weights.resize(spec.out_channels, fan_in);
        for (int o = 0; o < spec.out_channels; ++o)
            for (int i = 0; i < fan_in; ++i) layer.weights(o, i) = unif(rng);
        layer.bias = Eigen::VectorXd::Zero(spec.out_channels);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::size_t param_count(const PixelNetConfig& config) {
    std::size_t n = 0;
    for (const LayerSpec& l : config.layers)
        n += static_cast<std::size_t>(l.in_channels) * l.out_channels * l.kernel * l.kernel +
             l.out_channels;
    return n;
}

std::size_t param_count(const PixelNet& net) { return param_count(net.config); }

FloatImage forward(const PixelNet& net, const FloatImage& image, int threads) {
    return forward_impl(net, image, threads);
}

FloatImage32 forward(const PixelNet& net, const FloatImage32& image, int threads) {
    return forward_impl(net, image, threads);
}

Eigen::Vector3d forward_pixel(const PixelNet& net, const Eigen::Vector3d& rgb) {
    if (!net.fully_pointwise())
        throw std::invalid_argument("forward_pixel: net contains spatial kernels");
    Eigen::VectorXd act = rgb;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        act = (net.layers[l].weights * act + net.layers[l].bias).eval();
        if (l + 1 < net.layers.size())
            act = act.cwiseMax(0.0);
        else
            act = act.cwiseMax(-1.0).cwiseMin(1.0);
    }
    return act;
}

std::array<PixelNetConfig, 4> ablation_variants(int hidden_width) {
    if (hidden_width < 1) throw std::invalid_argument("ablation_variants: hidden_width must be >= 1");
    std::array<PixelNetConfig, 4> variants;
    for (int m = 0; m < 4; ++m) {  // m = number of 3x3 layers, replacing trailing layers first
        PixelNetConfig cfg = PixelNetConfig::standard(hidden_width);
        for (int l = 0; l < m; ++l) cfg.layers[2 - l].kernel = 3;
        variants[m] = cfg;
    }
    return variants;
}

PixelNetConfig parse_variant(const std::string& text, int hidden_width) {
    int n = -1, m = -1;
    if (std::sscanf(text.c_str(), "1x1:%d,3x3:%d", &n, &m) != 2 || n < 0 || m < 0 || n + m != 3)
        throw std::invalid_argument("parse_variant: expected \"1x1:N,3x3:M\" with N+M=3");
    return ablation_variants(hidden_width)[m];
}

std::string PixelNet::to_json() const {
    std::string s = "{\n  \"schema\": 1,\n  \"config\": {\"hidden_width\": " +
                    std::to_string(config.hidden_width) + ", \"layers\": [";
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        const LayerSpec& l = config.layers[i];
        s += (i ? ", " : "");
        s += "{\"in\": " + std::to_string(l.in_channels) + ", \"out\": " +
             std::to_string(l.out_channels) + ", \"k\": " + std::to_string(l.kernel) + "}";
    }
    s += "]},\n  \"layers\": [\n";
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        s += "    {\"in\": " + std::to_string(l.spec.in_channels) +
             ", \"out\": " + std::to_string(l.spec.out_channels) +
             ", \"k\": " + std::to_string(l.spec.kernel) + ", \"weights\": [";
        bool first = true;
        for (int o = 0; o < l.weights.rows(); ++o)
            for (int c = 0; c < l.weights.cols(); ++c) {
                if (!first) s += ", ";
                s += fmt17(l.weights(o, c));
                first = false;
            }
        s += "], \"bias\": [";
        for (int o = 0; o < l.bias.size(); ++o) s += (o ? ", " : "") + fmt17(l.bias[o]);
        s += "]}";
        s += (i + 1 < layers.size()) ? ",\n" : "\n";
    }
    s += "  ]\n}\n";
    return s;
}

PixelNet PixelNet::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema").get<int>() != 1)
        throw std::runtime_error("checkpoint: unsupported schema version");
    PixelNet net;
    net.config.hidden_width = j.at("config").at("hidden_width").get<int>();
    for (const auto& jl : j.at("config").at("layers"))
        net.config.layers.push_back(
            {jl.at("in").get<int>(), jl.at("out").get<int>(), jl.at("k").get<int>()});
    net.config.validate();
    const auto& jlayers = j.at("layers");
    if (jlayers.size() != net.config.layers.size())
        throw std::runtime_error("checkpoint: layer count mismatch");
    for (std::size_t i = 0; i < jlayers.size(); ++i) {
        const auto& jl = jlayers[i];
        Layer layer;
        layer.spec = net.config.layers[i];
        if (jl.at("in").get<int>() != layer.spec.in_channels ||
            jl.at("out").get<int>() != layer.spec.out_channels ||
            jl.at("k").get<int>() != layer.spec.kernel)
            throw std::runtime_error("checkpoint: layer spec mismatch with config");
        const int fan_in = layer.spec.in_channels * layer.spec.kernel * layer.spec.kernel;
        const auto& jw = jl.at("weights");
        const auto& jb = jl.at("bias");
        if (static_cast<int>(jw.size()) != layer.spec.out_channels * fan_in ||
            static_cast<int>(jb.size()) != layer.spec.out_channels)
            throw std::runtime_error("checkpoint: parameter count mismatch");
        layer.weights.resize(layer.spec.out_channels, fan_in);
        for (int o = 0; o < layer.spec.out_channels; ++o)
            for (int c = 0; c < fan_in; ++c)
                layer.weights(o, c) = jw.at(o * fan_in + c).get<double>();
        layer.bias.resize(layer.spec.out_channels);
        for (int o = 0; o < layer.spec.out_channels; ++o) layer.bias[o] = jb.at(o).get<double>();
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace stainkit
