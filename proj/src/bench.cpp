#include "stainkit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "stainkit/stain.hpp"

namespace stainkit {

namespace {
using Clock = std::chrono::steady_clock;
}

BenchResult measure_fps(const std::string& method, const Normalizer& normalizer,
                        const std::vector<RgbImage>& images, int warmup, int reps) {
    if (images.empty()) throw std::invalid_argument("measure_fps: empty image list");
    if (reps < 1) throw std::invalid_argument("measure_fps: reps must be >= 1");

    std::vector<RgbImage> reference;
    for (int w = 0; w < warmup; ++w) {
        for (std::size_t i = 0; i < images.size(); ++i) {
            RgbImage out = normalizer(images[i]);
            if (w == 0) reference.push_back(std::move(out));
        }
    }

    std::vector<double> rep_seconds;
    std::vector<double> latencies_ms;
    for (int r = 0; r < reps; ++r) {
        double elapsed = 0.0;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const auto t0 = Clock::now();
            RgbImage out = normalizer(images[i]);
            const auto t1 = Clock::now();
            const double dt = std::chrono::duration<double>(t1 - t0).count();
            elapsed += dt;
            latencies_ms.push_back(dt * 1e3);
            if (reference.size() <= i)
                reference.push_back(std::move(out));  // warmup 0: first rep is the reference
            else if (!(out == reference[i]))
                throw std::runtime_error("measure_fps: method output changed between reps");
        }
        rep_seconds.push_back(elapsed);
    }

    std::vector<double> sorted = rep_seconds;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];

    BenchResult res;
    res.method = method;
    res.images = images.size();
    res.reps = reps;
    res.seconds = median;
    res.fps = static_cast<double>(images.size()) / median;
    res.p50_ms = percentile(latencies_ms, 50.0);
    res.p95_ms = percentile(latencies_ms, 95.0);
    return res;
}

std::string BenchResult::csv_header() {
    return "method,threads,precision,fit_ms,fps,p50_ms,p95_ms\n";
}

std::string BenchResult::csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%.3f,%.3f,%.3f,%.3f\n", method.c_str(), threads,
                  precision.c_str(), fit_ms, fps, p50_ms, p95_ms);
    return buf;
}

std::string format_table(const std::vector<BenchResult>& results) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-16s %8s %10s %10s %10s %10s %8s\n", "method", "threads",
                  "fit_ms", "fps", "p50_ms", "p95_ms", "prec");
    out << buf;
    for (const BenchResult& r : results) {
        std::snprintf(buf, sizeof(buf), "%-16s %8d %10.3f %10.3f %10.3f %10.3f %8s\n",
                      r.method.c_str(), r.threads, r.fit_ms, r.fps, r.p50_ms, r.p95_ms,
                      r.precision.c_str());
        out << buf;
    }
    return out.str();
}

}  // namespace stainkit
