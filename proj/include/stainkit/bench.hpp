#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stainkit/image.hpp"

namespace stainkit {

struct BenchResult {
    std::string method;
    std::size_t images = 0;       // per measured rep
    int reps = 0;
    double seconds = 0.0;         // elapsed for the median rep
    double fps = 0.0;             // images / seconds, median of reps
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double fit_ms = 0.0;          // one-time setup cost, reported separately
    int threads = 1;
    std::string precision = "f64";

    std::string csv_row() const;
    static std::string csv_header();
};

using Normalizer = std::function<RgbImage(const RgbImage&)>;

/// Times only the per-image transform on pre-decoded images: warmup runs are
/// untimed, each rep processes the whole list on a monotonic clock, and
/// outputs are checked unchanged across reps.
BenchResult measure_fps(const std::string& method, const Normalizer& normalizer,
                        const std::vector<RgbImage>& images, int warmup = 5, int reps = 3);

/// Table-I-shaped text rendering of a result set.
std::string format_table(const std::vector<BenchResult>& results);

}  // namespace stainkit
