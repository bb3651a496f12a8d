#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stainkit/image.hpp"
#include "stainkit/pixelnet.hpp"

namespace stainkit {

struct TrainConfig {
    double lr0 = 0.01;
    int batch_size = 10;
    int epochs = 300;
    double momentum = 0.9;
    int crop = 0;  // 0 = train on full images
    std::uint64_t seed = 0;
    int eval_every = 1;
};

struct PairedSample {
    std::string source;
    std::string target;
    std::string split;  // "train" or "val"
};

struct PairedDataset {
    std::vector<PairedSample> samples;

    std::vector<PairedSample> split(const std::string& tag) const;
    static PairedDataset load_manifest(const std::string& path);
    void save_manifest(const std::string& path) const;
};

struct TrainReport {
    struct Row {
        int epoch;
        double loss;
        double lr;
        double psnr;  // NaN on epochs without evaluation
    };
    std::vector<Row> rows;
    int best_epoch = -1;
    double best_psnr = -std::numeric_limits<double>::infinity();

    std::string to_csv() const;
};

/// 0.5 * lr0 * (1 + cos(pi * epoch / total)): lr0 at epoch 0, 0 at the end.
double cosine_lr(int epoch, int total, double lr0);

/// Mean absolute difference over all pixels and channels.
double l1_loss(const FloatImage& pred, const FloatImage& target);

/// Parameter-shaped container for gradients and momentum state.
struct ParamVector {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;

    static ParamVector zeros_like(const PixelNet& net);
    Eigen::VectorXd flatten() const;
};

/// Exact analytic gradient of the mean L1 loss over the batch; L1 and ReLU
/// sub-gradients at zero are fixed to 0.
ParamVector backward(const PixelNet& net, const std::vector<FloatImage>& batch_src,
                     const std::vector<FloatImage>& batch_tgt, double* loss_out = nullptr);

/// Classic momentum SGD: v <- momentum*v + g; theta <- theta - lr*v.
void sgd_step(PixelNet& net, const ParamVector& grads, ParamVector& velocity, double lr,
              double momentum);

using ImagePair = std::pair<RgbImage, RgbImage>;

struct TrainResult {
    PixelNet best_net;
    TrainReport report;
};

/// Full distillation loop over preloaded image pairs; deterministic given
/// cfg.seed (separate init/shuffle/crop RNG streams).
TrainResult train(const PixelNet& net, const std::vector<ImagePair>& train_pairs,
                  const std::vector<ImagePair>& val_pairs, const TrainConfig& cfg);

/// Convenience wrapper that loads the dataset's PNG pairs from disk first.
TrainResult train(const PixelNet& net, const PairedDataset& dataset, const TrainConfig& cfg);

/// Mean validation PSNR of 8-bit reconstructions (the checkpoint-selection
/// metric).
double validation_psnr(const PixelNet& net, const std::vector<ImagePair>& val_pairs);

}  // namespace stainkit
