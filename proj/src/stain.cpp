#include "stainkit/stain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "stainkit/metrics.hpp"
#include "stainkit/rng.hpp"

namespace stainkit {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Tissue OD samples as a 3 x n matrix: pixels whose OD exceeds the threshold
// in every channel.
Eigen::MatrixXd tissue_od(const RgbImage& image, double i0, double od_threshold) {
    const std::size_t px = image.pixel_count();
    std::vector<std::size_t> keep;
    keep.reserve(px);
    std::vector<double> od(px * 3);
    for (std::size_t p = 0; p < px; ++p) {
        bool tissue = true;
        for (int c = 0; c < 3; ++c) {
            od[p * 3 + c] = od_from_intensity(static_cast<double>(image.data[p * 3 + c]), i0);
            if (od[p * 3 + c] < od_threshold) tissue = false;
        }
        if (tissue) keep.push_back(p);
    }
    Eigen::MatrixXd out(3, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (int c = 0; c < 3; ++c) out(c, static_cast<Eigen::Index>(i)) = od[keep[i] * 3 + c];
    return out;
}

// Flip so all components are nonnegative (clamping residual negatives) and
// renormalize to unit length.
Eigen::Vector3d sign_correct(Eigen::Vector3d v) {
    if (v.sum() < 0.0) v = -v;
    v = v.cwiseMax(0.0);
    const double n = v.norm();
    if (n > 0.0) v /= n;
    return v;
}

// Column 0 is the hematoxylin-like stain: larger blue OD component, ties
// broken by larger red.
Eigen::Matrix<double, 3, 2> order_columns(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    bool a_first;
    if (a[2] != b[2])
        a_first = a[2] > b[2];
    else
        a_first = a[0] >= b[0];
    Eigen::Matrix<double, 3, 2> w;
    w.col(0) = a_first ? a : b;
    w.col(1) = a_first ? b : a;
    return w;
}

// Per-pixel least squares W c ~= od via the 2x2 normal equations, negatives
// clipped to zero.
Eigen::MatrixXd solve_concentrations(const Eigen::Matrix<double, 3, 2>& w,
                                     const Eigen::MatrixXd& od) {
    const Eigen::Matrix2d gram = w.transpose() * w;
    const Eigen::Matrix2d gram_inv = gram.inverse();
    Eigen::MatrixXd c = gram_inv * (w.transpose() * od);
    return c.cwiseMax(0.0);
}

Eigen::Vector2d robust_max_concentrations(const Eigen::Matrix<double, 3, 2>& w,
                                          const Eigen::MatrixXd& od, double pct) {
    const Eigen::MatrixXd c = solve_concentrations(w, od);
    Eigen::Vector2d out;
    for (int i = 0; i < 2; ++i) {
        std::vector<double> row(c.cols());
        for (Eigen::Index j = 0; j < c.cols(); ++j) row[j] = c(i, j);
        out[i] = percentile(std::move(row), pct);
    }
    return out;
}

// Extreme-percentile angle directions in the principal OD plane: the same
// geometry macenko_fit uses, reused as a data-driven SNMF starting point so
// the multiplicative updates begin near the edges of the data cone. Returns
// false on degenerate clouds (the caller falls back to a seeded random
// start).
bool percentile_directions(const Eigen::MatrixXd& od, double pct,
                           Eigen::Matrix<double, 3, 2>* w_out) {
    if (od.cols() < 2) return false;
    const Eigen::Vector3d mean = od.rowwise().mean();
    const Eigen::MatrixXd centered = od.colwise() - mean;
    const Eigen::Matrix3d cov = (centered * centered.transpose()) / static_cast<double>(od.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (!(eig.eigenvalues()[1] > 0.0)) return false;
    Eigen::Vector3d v1 = eig.eigenvectors().col(2);
    Eigen::Vector3d v2 = eig.eigenvectors().col(1);
    if (mean.dot(v1) < 0.0) v1 = -v1;
    if (v2.sum() < 0.0) v2 = -v2;
    std::vector<double> angles(od.cols());
    for (Eigen::Index j = 0; j < od.cols(); ++j)
        angles[j] = std::atan2(v2.dot(od.col(j)), v1.dot(od.col(j)));
    const double phi_lo = percentile(angles, pct);
    const double phi_hi = percentile(angles, 100.0 - pct);
    w_out->col(0) = sign_correct(std::cos(phi_lo) * v1 + std::sin(phi_lo) * v2);
    w_out->col(1) = sign_correct(std::cos(phi_hi) * v1 + std::sin(phi_hi) * v2);
    // strictly positive entries: multiplicative updates can never move an
    // entry off an exact zero
    for (int c = 0; c < 2; ++c) w_out->col(c) = w_out->col(c).cwiseMax(1e-3).normalized();
    return w_out->allFinite();
}

}  // namespace

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::string ReinhardParams::to_json() const {
    std::string s = "{\n  \"method\": \"reinhard\",\n  \"mean\": [";
    for (int i = 0; i < 3; ++i) s += (i ? ", " : "") + fmt17(mean[i]);
    s += "],\n  \"std\": [";
    for (int i = 0; i < 3; ++i) s += (i ? ", " : "") + fmt17(std[i]);
    s += "]\n}\n";
    return s;
}

ReinhardParams ReinhardParams::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ReinhardParams p;
    for (int i = 0; i < 3; ++i) {
        p.mean[i] = j.at("mean").at(i).get<double>();
        p.std[i] = j.at("std").at(i).get<double>();
    }
    return p;
}

std::string StainModel::to_json(const std::string& method) const {
    std::string s = "{\n  \"method\": \"" + method + "\",\n  \"stain_matrix\": [";
    for (int r = 0; r < 3; ++r) {
        s += r ? ", [" : "[";
        for (int c = 0; c < 2; ++c) s += (c ? ", " : "") + fmt17(stain_matrix(r, c));
        s += "]";
    }
    s += "],\n  \"max_concentrations\": [";
    for (int i = 0; i < 2; ++i) s += (i ? ", " : "") + fmt17(max_concentrations[i]);
    s += "]\n}\n";
    return s;
}

StainModel StainModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    StainModel m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) m.stain_matrix(r, c) = j.at("stain_matrix").at(r).at(c).get<double>();
    for (int i = 0; i < 2; ++i) m.max_concentrations[i] = j.at("max_concentrations").at(i).get<double>();
    return m;
}

ReinhardParams reinhard_fit(const RgbImage& reference) {
    const LabImage lab = rgb_to_lab(reference);
    const std::size_t px = lab.pixel_count();
    ReinhardParams p;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < px; ++i)
        for (int c = 0; c < 3; ++c) sum[c] += lab.data[i * 3 + c];
    p.mean = sum / static_cast<double>(px);
    Eigen::Vector3d sq = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < px; ++i)
        for (int c = 0; c < 3; ++c) {
            const double d = lab.data[i * 3 + c] - p.mean[c];
            sq[c] += d * d;
        }
    p.std = (sq / static_cast<double>(px)).cwiseSqrt().cwiseMax(ReinhardParams::kStdFloor);
    return p;
}

RgbImage reinhard_normalize(const RgbImage& source, const ReinhardParams& ref_params) {
    return reinhard_normalize(source, ref_params, reinhard_fit(source));
}

RgbImage reinhard_normalize(const RgbImage& source, const ReinhardParams& ref_params,
                            const ReinhardParams& src_params) {
    LabImage lab = rgb_to_lab(source);
    const Eigen::Vector3d gain = ref_params.std.cwiseQuotient(src_params.std);
    const std::size_t px = lab.pixel_count();
    for (std::size_t i = 0; i < px; ++i)
        for (int c = 0; c < 3; ++c)
            lab.data[i * 3 + c] =
                (lab.data[i * 3 + c] - src_params.mean[c]) * gain[c] + ref_params.mean[c];
    return lab_to_rgb(lab);
}

StainModel macenko_fit(const RgbImage& image, const MacenkoConfig& cfg) {
    const Eigen::MatrixXd od = tissue_od(image, cfg.i0, cfg.od_threshold);
    if (od.cols() < 100) throw std::runtime_error("insufficient tissue pixels");

    const Eigen::Vector3d mean = od.rowwise().mean();
    const Eigen::MatrixXd centered = od.colwise() - mean;
    const Eigen::Matrix3d cov = (centered * centered.transpose()) / static_cast<double>(od.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    // eigenvalues ascending: the stain plane is spanned by columns 1 and 2
    const double ev_top = eig.eigenvalues()[2];
    const double ev_second = eig.eigenvalues()[1];
    if (ev_second < 1e-6 * ev_top) throw std::runtime_error("degenerate stain plane");

    Eigen::Vector3d v1 = eig.eigenvectors().col(2);
    Eigen::Vector3d v2 = eig.eigenvectors().col(1);
    // orient the basis towards the (all-positive) OD cloud so projection
    // angles do not wrap
    if (mean.dot(v1) < 0.0) v1 = -v1;
    if (v2.sum() < 0.0) v2 = -v2;

    std::vector<double> angles(od.cols());
    for (Eigen::Index j = 0; j < od.cols(); ++j)
        angles[j] = std::atan2(v2.dot(od.col(j)), v1.dot(od.col(j)));
    const double phi_lo = percentile(angles, cfg.angle_percentile);
    const double phi_hi = percentile(angles, 100.0 - cfg.angle_percentile);

    const Eigen::Vector3d s_lo = sign_correct(std::cos(phi_lo) * v1 + std::sin(phi_lo) * v2);
    const Eigen::Vector3d s_hi = sign_correct(std::cos(phi_hi) * v1 + std::sin(phi_hi) * v2);

    StainModel model;
    model.stain_matrix = order_columns(s_lo, s_hi);
    model.max_concentrations = robust_max_concentrations(model.stain_matrix, od, cfg.conc_percentile);
    return model;
}

SnmfResult snmf_factorize(const Eigen::MatrixXd& samples, const VahadaneConfig& cfg,
                          SnmfTrace* trace) {
    Eigen::Matrix<double, 3, 2> w;
    if (!percentile_directions(samples, 1.0, &w)) {
        auto rng = make_rng(cfg.seed, "snmf-init");
        std::uniform_real_distribution<double> unif(0.1, 1.0);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c) w(r, c) = unif(rng);
        w.col(0).normalize();
        w.col(1).normalize();
    }
    Eigen::MatrixXd h = solve_concentrations(w, samples).cwiseMax(1e-6);

    const double eps = 1e-12;
    if (trace) trace->objective.clear();
    for (int it = 0; it < cfg.n_iterations; ++it) {
        // multiplicative update for H under ||V - WH||_F^2 + lambda * ||H||_1;
        // the factor 2 matches the gradient of the squared (not halved) fit
        // term, which is what the recorded objective measures
        const Eigen::Matrix2d wtw = w.transpose() * w;
        const Eigen::MatrixXd wtv = w.transpose() * samples;
        h.array() *= 2.0 * wtv.array() / (2.0 * (wtw * h).array() + cfg.sparsity + eps);
        // normalized-dictionary multiplicative update for W (Eggert-Korner
        // form): unit-norm columns are baked into the step, so normalizing W
        // never perturbs the L1 term on H. The step is kept only when it
        // lowers the penalized objective, which keeps the recorded trace
        // non-increasing (the H update above descends by construction).
        const Eigen::MatrixXd vht = samples * h.transpose();
        const Eigen::MatrixXd whht = w * (h * h.transpose());
        Eigen::Matrix<double, 3, 2> num, den;
        for (int c = 0; c < 2; ++c) {
            num.col(c) = vht.col(c) + w.col(c) * whht.col(c).dot(w.col(c));
            den.col(c) = whht.col(c) + w.col(c) * vht.col(c).dot(w.col(c));
        }
        Eigen::Matrix<double, 3, 2> w_next = w;
        w_next.array() *= num.array() / (den.array() + eps);
        for (int c = 0; c < 2; ++c) {
            const double d = w_next.col(c).norm();
            if (d > 0.0) w_next.col(c) /= d;
        }
        const double penalty = cfg.sparsity * h.sum();
        const double obj_keep = (samples - w * h).squaredNorm() + penalty;
        const double obj_step = (samples - w_next * h).squaredNorm() + penalty;
        double obj = obj_keep;
        if (obj_step <= obj_keep) {
            w = w_next;
            obj = obj_step;
        }
        if (!std::isfinite(obj)) throw std::runtime_error("objective diverged");
        if (trace) trace->objective.push_back(obj);
    }
    return {w, std::move(h)};
}

StainModel vahadane_fit(const RgbImage& image, const VahadaneConfig& cfg, SnmfTrace* trace) {
    Eigen::MatrixXd v = tissue_od(image, cfg.i0, cfg.od_threshold);
    if (v.cols() < 100) throw std::runtime_error("insufficient tissue pixels");

    Eigen::MatrixXd samples;
    if (static_cast<std::size_t>(v.cols()) > cfg.sample_limit) {
        auto rng = make_rng(cfg.seed, "snmf-subsample");
        std::vector<Eigen::Index> idx(v.cols());
        std::iota(idx.begin(), idx.end(), Eigen::Index(0));
        // partial Fisher-Yates: the first sample_limit entries are a uniform
        // draw without replacement
        for (std::size_t i = 0; i < cfg.sample_limit; ++i) {
            std::uniform_int_distribution<std::size_t> d(i, idx.size() - 1);
            std::swap(idx[i], idx[d(rng)]);
        }
        samples.resize(3, static_cast<Eigen::Index>(cfg.sample_limit));
        for (std::size_t i = 0; i < cfg.sample_limit; ++i) samples.col(i) = v.col(idx[i]);
    } else {
        samples = v;
    }

    const SnmfResult snmf = snmf_factorize(samples, cfg, trace);
    const Eigen::Vector3d a = sign_correct(snmf.w.col(0));
    const Eigen::Vector3d b = sign_correct(snmf.w.col(1));
    StainModel model;
    model.stain_matrix = order_columns(a, b);
    model.max_concentrations = robust_max_concentrations(model.stain_matrix, v, cfg.conc_percentile);
    return model;
}

RgbImage stain_normalize(const RgbImage& source, const StainModel& src_model,
                         const StainModel& tgt_model, double i0) {
    const std::size_t px = source.pixel_count();
    const Eigen::Matrix2d gram_inv = (src_model.stain_matrix.transpose() * src_model.stain_matrix).inverse();
    const Eigen::Matrix<double, 2, 3> solver = gram_inv * src_model.stain_matrix.transpose();

    Eigen::Vector2d scale;
    for (int i = 0; i < 2; ++i) {
        const double src_max = src_model.max_concentrations[i];
        scale[i] = src_max > 0.0 ? tgt_model.max_concentrations[i] / src_max : 1.0;
    }

    RgbImage out(source.width, source.height);
    for (std::size_t p = 0; p < px; ++p) {
        Eigen::Vector3d od;
        for (int c = 0; c < 3; ++c)
            od[c] = od_from_intensity(static_cast<double>(source.data[p * 3 + c]), i0);
        Eigen::Vector2d conc = (solver * od).cwiseMax(0.0).cwiseProduct(scale);
        const Eigen::Vector3d od_out = tgt_model.stain_matrix * conc;
        for (int c = 0; c < 3; ++c)
            out.data[p * 3 + c] = quantize8(intensity_from_od(od_out[c], i0));
    }
    return out;
}

Eigen::MatrixXd reference_sensitivity_report(const RgbImage& source,
                                             const std::vector<RgbImage>& references,
                                             NormMethod method) {
    if (references.size() < 2)
        throw std::invalid_argument("reference_sensitivity_report: need at least 2 references");

    std::vector<RgbImage> outputs;
    outputs.reserve(references.size());
    for (const RgbImage& ref : references) {
        switch (method) {
            case NormMethod::Reinhard:
                outputs.push_back(reinhard_normalize(source, reinhard_fit(ref)));
                break;
            case NormMethod::Macenko: {
                const StainModel src = macenko_fit(source);
                outputs.push_back(stain_normalize(source, src, macenko_fit(ref)));
                break;
            }
            case NormMethod::Vahadane: {
                const StainModel src = vahadane_fit(source);
                outputs.push_back(stain_normalize(source, src, vahadane_fit(ref)));
                break;
            }
        }
    }

    const Eigen::Index n = static_cast<Eigen::Index>(outputs.size());
    Eigen::MatrixXd psnr_matrix(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            psnr_matrix(i, j) = i == j ? std::numeric_limits<double>::infinity()
                                       : psnr(outputs[i], outputs[j]);
    return psnr_matrix;
}

}  // namespace stainkit
