#include "stainkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stainkit/metrics.hpp"
#include "stainkit/png_io.hpp"
#include "stainkit/rng.hpp"

namespace stainkit {

namespace {

using Mat = Eigen::MatrixXd;

inline int reflect(int i, int n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

Mat im2col3(const Mat& input, int width, int height) {
    const int in = static_cast<int>(input.rows());
    Mat cols(in * 9, input.cols());
    for (int y = 0; y < height; ++y)
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
    return cols;
}

// Scatter-add of patch-column gradients back to input pixels (the adjoint of
// im2col3, including the reflection).
Mat col2im3(const Mat& cols_grad, int in, int width, int height) {
    Mat grad = Mat::Zero(in, static_cast<Eigen::Index>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const Eigen::Index p = static_cast<Eigen::Index>(y) * width + x;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = reflect(y + ky - 1, height);
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = reflect(x + kx - 1, width);
                    const Eigen::Index q = static_cast<Eigen::Index>(sy) * width + sx;
                    for (int i = 0; i < in; ++i)
                        grad(i, q) += cols_grad(static_cast<Eigen::Index>(i) * 9 + ky * 3 + kx, p);
                }
            }
        }
    return grad;
}

struct ForwardCache {
    std::vector<Mat> inputs;   // input to each layer
    std::vector<Mat> preacts;  // pre-activation output of each layer
    Mat output;                // after the final clamp
};

ForwardCache forward_cached(const PixelNet& net, const FloatImage& image) {
    ForwardCache cache;
    const Eigen::Index n = static_cast<Eigen::Index>(image.pixel_count());
    Mat act = Eigen::Map<const Mat>(image.data.data(), 3, n);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const PixelNet::Layer& layer = net.layers[l];
        cache.inputs.push_back(act);
        Mat z;
        if (layer.spec.kernel == 1)
            z = layer.weights * act;
        else
            z = layer.weights * im2col3(act, image.width, image.height);
        z.colwise() += layer.bias;
        cache.preacts.push_back(z);
        if (l + 1 < net.layers.size())
            act = z.cwiseMax(0.0);
        else
            act = z.cwiseMax(-1.0).cwiseMin(1.0);
    }
    cache.output = act;
    return cache;
}

}  // namespace

double cosine_lr(int epoch, int total, double lr0) {
    if (epoch < 0 || epoch > total) throw std::invalid_argument("cosine_lr: epoch out of range");
    return 0.5 * lr0 * (1.0 + std::cos(M_PI * static_cast<double>(epoch) / total));
}

double l1_loss(const FloatImage& pred, const FloatImage& target) {
    if (pred.width != target.width || pred.height != target.height ||
        pred.channels != target.channels)
        throw std::invalid_argument("l1_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i)
        acc += std::abs(pred.data[i] - target.data[i]);
    return acc / static_cast<double>(pred.data.size());
}

ParamVector ParamVector::zeros_like(const PixelNet& net) {
    ParamVector v;
    for (const PixelNet::Layer& l : net.layers) {
        v.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
        v.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return v;
}

Eigen::VectorXd ParamVector::flatten() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += weights[l].size() + bias[l].size();
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (int r = 0; r < weights[l].rows(); ++r)
            for (int c = 0; c < weights[l].cols(); ++c) out[at++] = weights[l](r, c);
        for (int r = 0; r < bias[l].size(); ++r) out[at++] = bias[l][r];
    }
    return out;
}

ParamVector backward(const PixelNet& net, const std::vector<FloatImage>& batch_src,
                     const std::vector<FloatImage>& batch_tgt, double* loss_out) {
    if (batch_src.empty() || batch_src.size() != batch_tgt.size())
        throw std::invalid_argument("backward: empty or mismatched batch");

    ParamVector grads = ParamVector::zeros_like(net);
    double loss = 0.0;
    std::size_t total_elems = 0;
    for (const FloatImage& img : batch_src) total_elems += img.data.size();

    for (std::size_t b = 0; b < batch_src.size(); ++b) {
        const FloatImage& src = batch_src[b];
        const FloatImage& tgt = batch_tgt[b];
        if (src.width != tgt.width || src.height != tgt.height)
            throw std::invalid_argument("backward: source/target shape mismatch");

        const ForwardCache cache = forward_cached(net, src);
        const Eigen::Index n = static_cast<Eigen::Index>(src.pixel_count());
        const Eigen::Map<const Mat> target(tgt.data.data(), 3, n);

        // d(mean L1)/d(output); sign(0) = 0 by convention
        Mat delta = cache.output - target;
        loss += delta.cwiseAbs().sum();
        delta = delta.unaryExpr([total_elems](double r) {
            return r > 0.0 ? 1.0 / static_cast<double>(total_elems)
                           : (r < 0.0 ? -1.0 / static_cast<double>(total_elems) : 0.0);
        });
        // through the final clamp: zero outside [-1, 1]
        const Mat& z_last = cache.preacts.back();
        delta = (z_last.array().abs() <= 1.0).select(delta, Mat::Zero(delta.rows(), delta.cols()));

        for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
            const PixelNet::Layer& layer = net.layers[l];
            grads.bias[l] += delta.rowwise().sum();
            Mat input_grad;
            if (layer.spec.kernel == 1) {
                grads.weights[l].noalias() += delta * cache.inputs[l].transpose();
                if (l > 0) input_grad.noalias() = layer.weights.transpose() * delta;
            } else {
                const Mat cols = im2col3(cache.inputs[l], src.width, src.height);
                grads.weights[l].noalias() += delta * cols.transpose();
                if (l > 0)
                    input_grad = col2im3(layer.weights.transpose() * delta,
                                         layer.spec.in_channels, src.width, src.height);
            }
            if (l > 0) {
                // ReLU sub-gradient; 0 at exactly 0
                const Mat& z = cache.preacts[l - 1];
                delta = (z.array() > 0.0)
                            .select(input_grad, Mat::Zero(input_grad.rows(), input_grad.cols()));
            }
        }
    }
    if (loss_out) *loss_out = loss / static_cast<double>(total_elems);
    return grads;
}

void sgd_step(PixelNet& net, const ParamVector& grads, ParamVector& velocity, double lr,
              double momentum) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        velocity.weights[l] = momentum * velocity.weights[l] + grads.weights[l];
        velocity.bias[l] = momentum * velocity.bias[l] + grads.bias[l];
        net.layers[l].weights -= lr * velocity.weights[l];
        net.layers[l].bias -= lr * velocity.bias[l];
    }
}

double validation_psnr(const PixelNet& net, const std::vector<ImagePair>& val_pairs) {
    double acc = 0.0;
    for (const ImagePair& pair : val_pairs) {
        const RgbImage out = from_float(forward(net, to_float(pair.first, Scale::Symmetric)),
                                        Scale::Symmetric);
        acc += psnr(out, pair.second);
    }
    return acc / static_cast<double>(val_pairs.size());
}

TrainResult train(const PixelNet& net, const std::vector<ImagePair>& train_pairs,
                  const std::vector<ImagePair>& val_pairs, const TrainConfig& cfg) {
    if (train_pairs.empty() || val_pairs.empty())
        throw std::invalid_argument("train: empty dataset");
    for (const ImagePair& p : train_pairs) {
        if (p.first.width != p.second.width || p.first.height != p.second.height)
            throw std::invalid_argument("train: pair dimension mismatch");
        if (cfg.crop > 0 && (p.first.width < cfg.crop || p.first.height < cfg.crop))
            throw std::invalid_argument("train: image smaller than crop size");
    }

    // Precompute float representations of full images.
    std::vector<FloatImage> src_f, tgt_f;
    for (const ImagePair& p : train_pairs) {
        src_f.push_back(to_float(p.first, Scale::Symmetric));
        tgt_f.push_back(to_float(p.second, Scale::Symmetric));
    }

    auto shuffle_rng = make_rng(cfg.seed, "shuffle");
    auto crop_rng = make_rng(cfg.seed, "crop");

    PixelNet model = net;
    ParamVector velocity = ParamVector::zeros_like(model);
    TrainResult result;
    result.best_net = model;

    auto crop_of = [&](const FloatImage& img, int x0, int y0) {
        FloatImage out(cfg.crop, cfg.crop, 3);
        for (int y = 0; y < cfg.crop; ++y)
            for (int x = 0; x < cfg.crop; ++x)
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
        return out;
    };

    std::vector<std::size_t> order(train_pairs.size());
    std::iota(order.begin(), order.end(), std::size_t(0));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t epoch_items = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), at + cfg.batch_size);
            std::vector<FloatImage> bs, bt;
            for (std::size_t i = at; i < end; ++i) {
                const std::size_t idx = order[i];
                if (cfg.crop > 0) {
                    std::uniform_int_distribution<int> dx(0, src_f[idx].width - cfg.crop);
                    std::uniform_int_distribution<int> dy(0, src_f[idx].height - cfg.crop);
                    const int x0 = dx(crop_rng), y0 = dy(crop_rng);
                    bs.push_back(crop_of(src_f[idx], x0, y0));
                    bt.push_back(crop_of(tgt_f[idx], x0, y0));
                } else {
                    bs.push_back(src_f[idx]);
                    bt.push_back(tgt_f[idx]);
                }
            }
            double batch_loss = 0.0;
            const ParamVector grads = backward(model, bs, bt, &batch_loss);
            sgd_step(model, grads, velocity, lr, cfg.momentum);
            epoch_loss += batch_loss * static_cast<double>(bs.size());
            epoch_items += bs.size();
        }

        TrainReport::Row row;
        row.epoch = epoch;
        row.loss = epoch_loss / static_cast<double>(epoch_items);
        row.lr = lr;
        row.psnr = std::numeric_limits<double>::quiet_NaN();
        if ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs) {
            row.psnr = validation_psnr(model, val_pairs);
            if (row.psnr > result.report.best_psnr) {
                result.report.best_psnr = row.psnr;
                result.report.best_epoch = epoch;
                result.best_net = model;
            }
        }
        result.report.rows.push_back(row);
    }
    return result;
}

TrainResult train(const PixelNet& net, const PairedDataset& dataset, const TrainConfig& cfg) {
    std::vector<ImagePair> train_pairs, val_pairs;
    for (const PairedSample& s : dataset.samples) {
        ImagePair p{load_image(s.source), load_image(s.target)};
        (s.split == "val" ? val_pairs : train_pairs).push_back(std::move(p));
    }
    return train(net, train_pairs, val_pairs, cfg);
}

std::vector<PairedSample> PairedDataset::split(const std::string& tag) const {
    std::vector<PairedSample> out;
    for (const PairedSample& s : samples)
        if (s.split == tag) out.push_back(s);
    return out;
}

PairedDataset PairedDataset::load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path);
    PairedDataset ds;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        ds.samples.push_back({j.at("source").get<std::string>(), j.at("target").get<std::string>(),
                              j.at("split").get<std::string>()});
    }
    return ds;
}

void PairedDataset::save_manifest(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_manifest: cannot open " + path + " for writing");
    for (const PairedSample& s : samples)
        out << "{\"source\": \"" << s.source << "\", \"target\": \"" << s.target
            << "\", \"split\": \"" << s.split << "\"}\n";
}

std::string TrainReport::to_csv() const {
    std::ostringstream out;
    out << "epoch,loss,lr,psnr\n";
    char buf[128];
    for (const Row& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,", r.epoch, r.loss, r.lr);
        out << buf;
        if (std::isnan(r.psnr))
            out << "";
        else if (std::isinf(r.psnr))
            out << "inf";
        else {
            std::snprintf(buf, sizeof(buf), "%.17g", r.psnr);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace stainkit
