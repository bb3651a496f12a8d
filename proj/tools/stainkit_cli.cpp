// Batch CLI for the stainkit library: dataset synthesis, model fitting,
// normalization, distillation training, evaluation, benchmarking, and LUT
// baking. Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stainkit/bench.hpp"
#include "stainkit/lut.hpp"
#include "stainkit/metrics.hpp"
#include "stainkit/pixelnet.hpp"
#include "stainkit/png_io.hpp"
#include "stainkit/rng.hpp"
#include "stainkit/stain.hpp"
#include "stainkit/synth.hpp"
#include "stainkit/train.hpp"

namespace fs = std::filesystem;
using namespace stainkit;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::string> list_pngs(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error("no .png files in " + dir);
    return names;
}

std::string fmt_metric(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

struct NormalizeSpec {
    std::string method;      // reinhard | macenko | vahadane | pixelnet | lut
    std::string model_path;  // fit JSON for the conventional methods
    std::string reference;   // alternative: fit the target model from an image
    std::string checkpoint;  // pixelnet
    std::string lut_path;    // lut
    int precision = 64;
    int threads = 1;
    std::uint64_t seed = 0;
    double fit_ms = 0.0;  // one-time target-model fit cost, filled by build()
};

// Builds the per-image transform; any target/reference fitting happens here,
// before the returned callable runs.
Normalizer build_normalizer(NormalizeSpec& spec) {
    const auto t0 = std::chrono::steady_clock::now();
    Normalizer fn;
    if (spec.method == "reinhard") {
        ReinhardParams ref = spec.reference.empty()
                                 ? ReinhardParams::from_json(read_file(spec.model_path))
                                 : reinhard_fit(load_image(spec.reference));
        fn = [ref](const RgbImage& img) { return reinhard_normalize(img, ref); };
    } else if (spec.method == "macenko") {
        StainModel tgt = spec.reference.empty()
                             ? StainModel::from_json(read_file(spec.model_path))
                             : macenko_fit(load_image(spec.reference));
        fn = [tgt](const RgbImage& img) { return stain_normalize(img, macenko_fit(img), tgt); };
    } else if (spec.method == "vahadane") {
        VahadaneConfig cfg;
        cfg.seed = spec.seed;
        StainModel tgt = spec.reference.empty()
                             ? StainModel::from_json(read_file(spec.model_path))
                             : vahadane_fit(load_image(spec.reference), cfg);
        fn = [tgt, cfg](const RgbImage& img) {
            return stain_normalize(img, vahadane_fit(img, cfg), tgt);
        };
    } else if (spec.method == "pixelnet") {
        PixelNet net = PixelNet::from_json(read_file(spec.checkpoint));
        const int threads = spec.threads;
        if (spec.precision == 32)
            fn = [net, threads](const RgbImage& img) {
                return from_float32(forward(net, to_float32(img, Scale::Symmetric), threads),
                                    Scale::Symmetric);
            };
        else
            fn = [net, threads](const RgbImage& img) {
                return from_float(forward(net, to_float(img, Scale::Symmetric), threads),
                                  Scale::Symmetric);
            };
    } else if (spec.method == "lut") {
        Lut3D lut = load_lut(spec.lut_path);
        const int threads = spec.threads;
        fn = [lut, threads](const RgbImage& img) { return apply_lut(lut, img, threads); };
    } else {
        throw CLI::ValidationError("--method", "unknown method \"" + spec.method + "\"");
    }
    spec.fit_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return fn;
}

int run(int argc, char** argv) {
    CLI::App app{"stainkit: per-pixel stain normalization toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
    app.add_option("--threads", threads, "worker thread cap")->capture_default_str();

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic paired-style dataset");
    std::string synth_out, teacher_spec = "identity";
    int n_train = 0, n_val = 0, synth_size = 128;
    double noise = 8.0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--n-train", n_train, "training pairs")->required();
    synth->add_option("--n-val", n_val, "validation pairs")->capture_default_str();
    synth->add_option("--teacher", teacher_spec, "identity | gamma:a,b,c | matrix:9 or 12 values")
        ->capture_default_str();
    synth->add_option("--size", synth_size, "image edge length")->capture_default_str();
    synth->add_option("--noise", noise, "background noise amplitude")->capture_default_str();

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "fit a normalization model from a reference image");
    std::string fit_method, fit_image, fit_out;
    fit->add_option("--method", fit_method, "reinhard | macenko | vahadane")->required();
    fit->add_option("--image", fit_image, "reference image (PNG)")->required();
    fit->add_option("--out", fit_out, "output model JSON")->required();

    // ---- normalize ----
    auto* normalize = app.add_subcommand("normalize", "normalize a directory of images");
    NormalizeSpec nspec;
    std::string norm_in, norm_out;
    normalize->add_option("--method", nspec.method, "reinhard | macenko | vahadane | pixelnet | lut")
        ->required();
    normalize->add_option("--in", norm_in, "input directory")->required();
    normalize->add_option("--out", norm_out, "output directory")->required();
    normalize->add_option("--model", nspec.model_path, "fitted model JSON (conventional methods)");
    normalize->add_option("--reference", nspec.reference, "reference image to fit on the fly");
    normalize->add_option("--checkpoint", nspec.checkpoint, "pixelnet checkpoint JSON");
    normalize->add_option("--lut", nspec.lut_path, "baked .lut3d file");
    normalize->add_option("--precision", nspec.precision, "pixelnet inference precision (32|64)")
        ->check(CLI::IsMember({32, 64}))
        ->capture_default_str();

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "distill a pixelnet from a paired dataset");
    std::string train_manifest, train_ckpt, train_report, variant = "1x1:3,3x3:0";
    TrainConfig tcfg;
    int hidden = 32;
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest (JSON lines)")->required();
    train_cmd->add_option("--out", train_ckpt, "output checkpoint JSON")->required();
    train_cmd->add_option("--report", train_report, "output TrainReport CSV");
    train_cmd->add_option("--lr", tcfg.lr0, "initial learning rate")->capture_default_str();
    train_cmd->add_option("--batch", tcfg.batch_size, "images per step")->capture_default_str();
    train_cmd->add_option("--epochs", tcfg.epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--momentum", tcfg.momentum, "SGD momentum")->capture_default_str();
    train_cmd->add_option("--crop", tcfg.crop, "square crop size (0 = full images)")
        ->capture_default_str();
    train_cmd->add_option("--eval-every", tcfg.eval_every, "epochs between validations")
        ->capture_default_str();
    train_cmd->add_option("--variant", variant, "structure, e.g. 1x1:2,3x3:1")->capture_default_str();
    train_cmd->add_option("--hidden", hidden, "intermediate channel width")->capture_default_str();

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "metrics over (normalized, target, source) triples");
    std::string eval_norm, eval_tgt, eval_src, eval_out, eval_method = "unnamed";
    double eval_fps = 0.0;
    eval_cmd->add_option("--normalized", eval_norm, "normalized image directory")->required();
    eval_cmd->add_option("--target", eval_tgt, "target image directory")->required();
    eval_cmd->add_option("--source", eval_src, "source image directory")->required();
    eval_cmd->add_option("--method", eval_method, "method name for the report row")
        ->capture_default_str();
    eval_cmd->add_option("--fps", eval_fps, "throughput to include in the report row");
    eval_cmd->add_option("--out", eval_out, "output CSV path");

    // ---- bench ----
    auto* bench_cmd = app.add_subcommand("bench", "throughput comparison (transform only, no IO)");
    std::vector<std::string> bench_methods = {"pixelnet", "reinhard", "macenko", "vahadane"};
    std::string bench_images, bench_ckpt, bench_ref, bench_out;
    int bench_n = 100, bench_size = 512, bench_warmup = 5, bench_reps = 3, bench_precision = 32;
    bench_cmd->add_option("--methods", bench_methods, "methods to compare")->capture_default_str();
    bench_cmd->add_option("--images", bench_images, "workload directory (default: synthetic)");
    bench_cmd->add_option("--n", bench_n, "synthetic workload size")->capture_default_str();
    bench_cmd->add_option("--size", bench_size, "synthetic image edge length")->capture_default_str();
    bench_cmd->add_option("--warmup", bench_warmup, "untimed warmup runs")->capture_default_str();
    bench_cmd->add_option("--reps", bench_reps, "timed repetitions")->capture_default_str();
    bench_cmd->add_option("--checkpoint", bench_ckpt, "pixelnet checkpoint (default: seeded init)");
    bench_cmd->add_option("--reference", bench_ref, "reference image (default: first workload image)");
    bench_cmd->add_option("--precision", bench_precision, "pixelnet precision (32|64)")
        ->check(CLI::IsMember({32, 64}))
        ->capture_default_str();
    bench_cmd->add_option("--out", bench_out, "CSV to append results to");

    // ---- bake-lut ----
    auto* bake = app.add_subcommand("bake-lut", "bake a fully-1x1 checkpoint into a 3D LUT");
    std::string bake_ckpt, bake_out, bake_cube;
    int bake_size = 256;
    bake->add_option("--checkpoint", bake_ckpt, "pixelnet checkpoint JSON")->required();
    bake->add_option("--out", bake_out, "output .lut3d file")->required();
    bake->add_option("--size", bake_size, "grid size (33 | 64 | 256)")->capture_default_str();
    bake->add_option("--cube", bake_cube, "also export a text .cube file");

    // ---- refsens ----
    auto* refsens = app.add_subcommand("refsens", "reference-sensitivity PSNR matrix");
    std::string rs_source, rs_method = "reinhard", rs_out;
    std::vector<std::string> rs_refs;
    refsens->add_option("--source", rs_source, "source image")->required();
    refsens->add_option("--refs", rs_refs, "reference images (>= 2)")->required()->expected(2, -1);
    refsens->add_option("--method", rs_method, "reinhard | macenko | vahadane")
        ->capture_default_str();
    refsens->add_option("--out", rs_out, "output CSV path");

    // allow --seed/--threads to appear after the subcommand name
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    nspec.seed = seed;
    nspec.threads = threads;
    tcfg.seed = seed;

    if (synth->parsed()) {
        SynthSceneConfig scfg;
        scfg.width = scfg.height = synth_size;
        scfg.noise_amplitude = noise;
        scfg.seed = seed;
        const ColorTransform teacher = ColorTransform::parse(teacher_spec);
        const PairedDataset ds = generate_dataset(scfg, teacher, n_train, n_val, synth_out);
        std::cout << "wrote " << ds.samples.size() << " pairs to " << synth_out << "\n";
    } else if (fit->parsed()) {
        const RgbImage image = load_image(fit_image);
        if (fit_method == "reinhard") {
            write_file(fit_out, reinhard_fit(image).to_json());
        } else if (fit_method == "macenko") {
            write_file(fit_out, macenko_fit(image).to_json("macenko"));
        } else if (fit_method == "vahadane") {
            VahadaneConfig cfg;
            cfg.seed = seed;
            write_file(fit_out, vahadane_fit(image, cfg).to_json("vahadane"));
        } else {
            throw CLI::ValidationError("--method", "unknown method \"" + fit_method + "\"");
        }
        std::cout << "wrote " << fit_out << "\n";
    } else if (normalize->parsed()) {
        const Normalizer fn = build_normalizer(nspec);
        fs::create_directories(norm_out);
        for (const std::string& name : list_pngs(norm_in)) {
            const RgbImage out = fn(load_image((fs::path(norm_in) / name).string()));
            save_image(out, (fs::path(norm_out) / name).string());
        }
        std::cout << "normalized " << list_pngs(norm_out).size() << " images into " << norm_out
                  << "\n";
    } else if (train_cmd->parsed()) {
        const PairedDataset ds = PairedDataset::load_manifest(train_manifest);
        const PixelNetConfig config = parse_variant(variant, hidden);
        const PixelNet net = pixelnet_init(config, seed);
        const TrainResult result = train(net, ds, tcfg);
        write_file(train_ckpt, result.best_net.to_json());
        if (!train_report.empty()) write_file(train_report, result.report.to_csv());
        std::cout << "best epoch " << result.report.best_epoch << ", best val PSNR "
                  << fmt_metric(result.report.best_psnr) << " dB; checkpoint " << train_ckpt << "\n";
    } else if (eval_cmd->parsed()) {
        double sum_st = 0.0, sum_pt = 0.0, sum_ss = 0.0;
        const auto names = list_pngs(eval_norm);
        for (const std::string& name : names) {
            const RgbImage norm = load_image((fs::path(eval_norm) / name).string());
            const RgbImage tgt = load_image((fs::path(eval_tgt) / name).string());
            const RgbImage src = load_image((fs::path(eval_src) / name).string());
            sum_st += ssim_rgb(norm, tgt);
            sum_pt += psnr(norm, tgt);
            sum_ss += ssim_source(norm, src);
        }
        const double n = static_cast<double>(names.size());
        std::ostringstream csv;
        csv << "method,ssim_target,psnr_target,ssim_source,fps\n"
            << eval_method << "," << fmt_metric(sum_st / n) << "," << fmt_metric(sum_pt / n) << ","
            << fmt_metric(sum_ss / n) << "," << (eval_fps > 0.0 ? fmt_metric(eval_fps) : "") << "\n";
        if (!eval_out.empty()) write_file(eval_out, csv.str());
        std::cout << csv.str();
    } else if (bench_cmd->parsed()) {
        std::vector<RgbImage> workload;
        if (!bench_images.empty()) {
            for (const std::string& name : list_pngs(bench_images))
                workload.push_back(load_image((fs::path(bench_images) / name).string()));
        } else {
            for (int i = 0; i < bench_n; ++i) {
                SynthSceneConfig scfg;
                scfg.width = scfg.height = bench_size;
                scfg.min_cells = scfg.max_cells = 40;
                scfg.seed = substream_seed(seed, "bench-image-" + std::to_string(i));
                workload.push_back(render_scene(scfg));
            }
        }
        std::vector<BenchResult> results;
        for (const std::string& method : bench_methods) {
            NormalizeSpec spec;
            spec.method = method;
            spec.precision = bench_precision;
            spec.threads = threads;
            spec.seed = seed;
            const auto t0 = std::chrono::steady_clock::now();
            Normalizer fn;
            if (method == "pixelnet" || method == "lut") {
                PixelNet net = bench_ckpt.empty()
                                   ? pixelnet_init(PixelNetConfig::standard(), seed)
                                   : PixelNet::from_json(read_file(bench_ckpt));
                if (method == "lut") {
                    Lut3D lut = bake_lut(net, 256);
                    fn = [lut, threads](const RgbImage& img) { return apply_lut(lut, img, threads); };
                } else if (bench_precision == 32) {
                    fn = [net, threads](const RgbImage& img) {
                        return from_float32(forward(net, to_float32(img, Scale::Symmetric), threads),
                                            Scale::Symmetric);
                    };
                } else {
                    fn = [net, threads](const RgbImage& img) {
                        return from_float(forward(net, to_float(img, Scale::Symmetric), threads),
                                          Scale::Symmetric);
                    };
                }
                spec.fit_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            } else {
                if (bench_ref.empty()) {
                    // fit the shared target model from the first workload image
                    spec.reference.clear();
                    const RgbImage& ref = workload.front();
                    const auto tf0 = std::chrono::steady_clock::now();
                    if (method == "reinhard") {
                        const ReinhardParams p = reinhard_fit(ref);
                        fn = [p](const RgbImage& img) { return reinhard_normalize(img, p); };
                    } else if (method == "macenko") {
                        const StainModel tgt = macenko_fit(ref);
                        fn = [tgt](const RgbImage& img) {
                            return stain_normalize(img, macenko_fit(img), tgt);
                        };
                    } else if (method == "vahadane") {
                        VahadaneConfig cfg;
                        cfg.seed = seed;
                        const StainModel tgt = vahadane_fit(ref, cfg);
                        fn = [tgt, cfg](const RgbImage& img) {
                            return stain_normalize(img, vahadane_fit(img, cfg), tgt);
                        };
                    } else {
                        throw CLI::ValidationError("--methods", "unknown method \"" + method + "\"");
                    }
                    spec.fit_ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - tf0)
                                      .count();
                } else {
                    spec.reference = bench_ref;
                    fn = build_normalizer(spec);
                }
            }
            BenchResult res = measure_fps(method, fn, workload, bench_warmup, bench_reps);
            res.threads = threads;
            res.precision = (method == "pixelnet" && bench_precision == 32) ? "f32" : "f64";
            res.fit_ms = spec.fit_ms;
            results.push_back(res);
        }
        std::cout << format_table(results);
        if (!bench_out.empty()) {
            const bool fresh = !fs::exists(bench_out);
            std::ofstream out(bench_out, std::ios::app);
            if (fresh) out << BenchResult::csv_header();
            for (const BenchResult& r : results) out << r.csv_row();
        }
    } else if (bake->parsed()) {
        if (!Lut3D::valid_size(bake_size))
            throw CLI::ValidationError("--size", "grid size must be 33, 64 or 256");
        const PixelNet net = PixelNet::from_json(read_file(bake_ckpt));
        const Lut3D lut = bake_lut(net, bake_size);
        save_lut(lut, bake_out);
        if (!bake_cube.empty()) save_cube(lut, bake_cube);
        std::cout << "wrote " << bake_out << "\n";
    } else if (refsens->parsed()) {
        NormMethod method;
        if (rs_method == "reinhard")
            method = NormMethod::Reinhard;
        else if (rs_method == "macenko")
            method = NormMethod::Macenko;
        else if (rs_method == "vahadane")
            method = NormMethod::Vahadane;
        else
            throw CLI::ValidationError("--method", "unknown method \"" + rs_method + "\"");
        std::vector<RgbImage> refs;
        for (const std::string& p : rs_refs) refs.push_back(load_image(p));
        const Eigen::MatrixXd m = reference_sensitivity_report(load_image(rs_source), refs, method);
        std::ostringstream csv;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                csv << (j ? "," : "") << fmt_metric(m(i, j));
            csv << "\n";
        }
        if (!rs_out.empty()) write_file(rs_out, csv.str());
        std::cout << "pairwise PSNR (dB) between normalized outputs:\n" << csv.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
