// Command-line front end: training runs, evaluation tables, the CAE
// ablation, the mask-as-segmenter evaluation, and mask previews.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "oled/run_config.hpp"
#include "oled/scoring.hpp"
#include "oled/training.hpp"

namespace fs = std::filesystem;
using namespace oled;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_log(const std::string& out_dir, const std::string& message) {
    std::ofstream log(out_dir + "/log.txt", std::ios::app);
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%d %H:%M:%S", std::gmtime(&now));
    log << "[" << stamp << "] " << message << "\n";
}

RunConfig load_config(const std::string& path, int class_override, long long seed_override) {
    RunConfig cfg = parse_run_config(path);
    if (class_override >= 0) cfg.inlier_class = class_override;
    if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);
    return cfg;
}

std::string run_config_path(const std::string& run_dir) { return run_dir + "/config.txt"; }

std::string best_checkpoint_path(const std::string& run_dir) {
    std::ifstream in(run_dir + "/best.txt");
    if (!in) throw IoError("run '" + run_dir + "' has no best.txt (training incomplete?)");
    std::string line, ckpt;
    while (std::getline(in, line)) {
        const std::size_t eq = line.find(" = ");
        if (eq != std::string::npos && line.substr(0, eq) == "checkpoint")
            ckpt = line.substr(eq + 3);
    }
    if (ckpt.empty()) throw IoError(run_dir + "/best.txt names no checkpoint");
    const std::string path = run_dir + "/" + ckpt;
    if (!fs::exists(path)) throw IoError("missing checkpoint '" + path + "'");
    return path;
}

ScoreSet score_test_set(ModelBundle& bundle, const DatasetSplit& split) {
    ScoreSet scores;
    if (bundle.kind == "cae") {
        scores = score_samples_masked(
            bundle.reconstructor, split.test,
            cae_masks(split.test, bundle.cfg.seed, bundle.cfg.cae_crop), split.test_labels,
            bundle.cfg.eval_batch);
    } else {
        scores = score_samples(bundle.reconstructor, *bundle.mask_module, split.test,
                               split.test_labels, bundle.cfg.eval_batch);
    }
    if (!split.test_groups.empty())
        scores = aggregate_by_group(scores, split.test_groups, split.group_labels);
    return scores;
}

void write_scores_csv(const std::string& path, const ScoreSet& s) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "index,label,e_rec,e_mask,e_cont,s_rec,s_mask,s_cont,s_avg\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << i << ',' << s.labels[i] << ',' << fmt(s.e_rec[i]) << ',' << fmt(s.e_mask[i]) << ','
            << fmt(s.e_cont[i]) << ',' << fmt(s.s_rec[i]) << ',' << fmt(s.s_mask[i]) << ','
            << fmt(s.s_cont[i]) << ',' << fmt(s.s_avg[i]) << '\n';
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "score_type,auc,eer,n_inlier,n_outlier\n";
    for (const MetricRow& r : rows)
        out << r.score_type << ',' << fmt(r.auc) << ',' << fmt(r.eer) << ',' << r.n_inlier << ','
            << r.n_outlier << '\n';
}

int cmd_train(const std::string& config_path, int class_override, long long seed_override) {
    RunConfig cfg = load_config(config_path, class_override, seed_override);
    fs::create_directories(cfg.out_dir);
    write_run_config(run_config_path(cfg.out_dir), cfg);
    append_log(cfg.out_dir, "train started (protocol " + cfg.protocol + ")");

    const DatasetSplit split = build_split_from_config(cfg);
    const TrainResult result = train(split, cfg.train, cfg.out_dir);
    append_log(cfg.out_dir, "train finished, best epoch " + std::to_string(result.best_epoch));
    std::cout << "run " << cfg.out_dir << ": best epoch " << result.best_epoch << " of "
              << result.records.size() << "\n";
    return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& score_type) {
    ModelBundle bundle = load_model_bundle(best_checkpoint_path(run_dir));
    const RunConfig cfg = parse_run_config(run_config_path(run_dir));
    const DatasetSplit split = build_split_from_config(cfg);

    ScoreSet scores = score_test_set(bundle, split);
    std::vector<MetricRow> rows = aggregate_scores(scores);
    if (score_type != "all") {
        std::vector<MetricRow> filtered;
        for (const MetricRow& r : rows)
            if (r.score_type == score_type) filtered.push_back(r);
        if (filtered.empty()) throw ConfigError("unknown score type '" + score_type + "'");
        rows = filtered;
    }
    write_scores_csv(run_dir + "/scores.csv", scores);
    write_metrics_csv(run_dir + "/metrics.csv", rows);
    std::cout << "score_type,auc,eer,n_inlier,n_outlier\n";
    for (const MetricRow& r : rows)
        std::cout << r.score_type << ',' << fmt(r.auc) << ',' << fmt(r.eer) << ',' << r.n_inlier
                  << ',' << r.n_outlier << "\n";
    return 0;
}

int cmd_mnist_suite(const std::string& config_path, std::vector<int> classes,
                    long long seed_override) {
    if (classes.empty()) classes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    RunConfig base = load_config(config_path, -1, seed_override);
    if (base.protocol != "mnist") throw ConfigError("mnist-suite requires protocol = mnist");
    const std::string suite_dir = base.out_dir;
    fs::create_directories(suite_dir);

    const char* score_names[4] = {"rec", "mask", "cont", "avg"};
    std::map<std::string, std::vector<double>> auc_by_type;

    for (int cls : classes) {
        RunConfig cfg = base;
        cfg.inlier_class = cls;
        cfg.out_dir = suite_dir + "/class_" + std::to_string(cls);
        fs::create_directories(cfg.out_dir);
        write_run_config(run_config_path(cfg.out_dir), cfg);
        append_log(cfg.out_dir, "suite training class " + std::to_string(cls));

        const DatasetSplit split = build_split_from_config(cfg);
        train(split, cfg.train, cfg.out_dir);
        ModelBundle bundle = load_model_bundle(best_checkpoint_path(cfg.out_dir));
        ScoreSet scores = score_test_set(bundle, split);
        const std::vector<MetricRow> rows = aggregate_scores(scores);
        write_scores_csv(cfg.out_dir + "/scores.csv", scores);
        write_metrics_csv(cfg.out_dir + "/metrics.csv", rows);
        for (const MetricRow& r : rows) auc_by_type[r.score_type].push_back(r.auc);
    }

    std::ostringstream table;
    table << "# mnist-suite over classes:";
    for (int c : classes) table << ' ' << c;
    table << " (seed " << base.train.seed << ")\n";
    table << "score_type";
    for (int c : classes) table << ",class_" << c;
    table << ",average\n";
    for (const char* name : score_names) {
        const std::vector<double>& v = auc_by_type[name];
        double sum = 0.0;
        table << name;
        for (double a : v) {
            table << ',' << fmt(a);
            sum += a;
        }
        table << ',' << fmt(sum / static_cast<double>(v.size())) << '\n';
    }
    std::ofstream out(suite_dir + "/suite.csv");
    out << table.str();
    std::cout << table.str();
    return 0;
}

int cmd_ablate_cae(const std::string& config_path, int class_override, long long seed_override) {
    RunConfig cfg = load_config(config_path, class_override, seed_override);
    const std::string root = cfg.out_dir;
    fs::create_directories(root);
    const DatasetSplit split = build_split_from_config(cfg);

    RunConfig oled_cfg = cfg;
    oled_cfg.out_dir = root + "/oled";
    fs::create_directories(oled_cfg.out_dir);
    write_run_config(run_config_path(oled_cfg.out_dir), oled_cfg);
    train(split, oled_cfg.train, oled_cfg.out_dir);
    ModelBundle oled_bundle = load_model_bundle(best_checkpoint_path(oled_cfg.out_dir));
    ScoreSet oled_scores = score_test_set(oled_bundle, split);
    const std::vector<MetricRow> oled_rows = aggregate_scores(oled_scores);
    write_metrics_csv(oled_cfg.out_dir + "/metrics.csv", oled_rows);

    RunConfig cae_cfg = cfg;
    cae_cfg.out_dir = root + "/cae";
    fs::create_directories(cae_cfg.out_dir);
    write_run_config(run_config_path(cae_cfg.out_dir), cae_cfg);
    train_cae_baseline(split, cae_cfg.train, cae_cfg.out_dir);
    ModelBundle cae_bundle = load_model_bundle(best_checkpoint_path(cae_cfg.out_dir));
    ScoreSet cae_scores = score_test_set(cae_bundle, split);
    const std::vector<MetricRow> cae_rows = aggregate_scores(cae_scores);
    write_metrics_csv(cae_cfg.out_dir + "/metrics.csv", cae_rows);

    std::ostringstream table;
    table << "# ablation on class " << cfg.inlier_class << " (seed " << cfg.train.seed << ")\n";
    table << "method,score_type,auc,eer\n";
    for (const MetricRow& r : oled_rows)
        table << "oled," << r.score_type << ',' << fmt(r.auc) << ',' << fmt(r.eer) << '\n';
    for (const MetricRow& r : cae_rows)
        table << "cae," << r.score_type << ',' << fmt(r.auc) << ',' << fmt(r.eer) << '\n';
    std::ofstream out(root + "/ablation.csv");
    out << table.str();
    std::cout << table.str();
    return 0;
}

int cmd_segment_eval(const std::string& run_dir) {
    ModelBundle bundle = load_model_bundle(best_checkpoint_path(run_dir));
    if (bundle.kind != "oled")
        throw ConfigError("segment-eval needs an OLED run (mask generator required)");
    const RunConfig cfg = parse_run_config(run_config_path(run_dir));
    const DatasetSplit split = build_split_from_config(cfg);

    const SegmentationResult res =
        segmentation_eval(bundle.mask_module->generator, split.test, split.test_labels);
    std::ostringstream table;
    table << "data,pixelwise_auc,n_images,n_skipped\n";
    table << "inlier," << fmt(res.inlier_mean_auc) << ',' << res.n_inlier << ',' << res.n_skipped
          << '\n';
    table << "outlier," << fmt(res.outlier_mean_auc) << ',' << res.n_outlier << ','
          << res.n_skipped << '\n';
    std::ofstream out(run_dir + "/segmentation.csv");
    out << table.str();
    std::cout << table.str();
    return 0;
}

int cmd_mask_preview(const std::string& run_dir, int n, std::string out_path) {
    ModelBundle bundle = load_model_bundle(best_checkpoint_path(run_dir));
    if (bundle.kind != "oled") throw ConfigError("mask-preview needs an OLED run");
    const RunConfig cfg = parse_run_config(run_config_path(run_dir));
    const DatasetSplit split = build_split_from_config(cfg);
    n = std::min(n, split.test.shape[0]);
    if (n < 1) throw ConfigError("no test samples to preview");

    Tensor x(split.test.shape);
    x.shape[0] = n;
    x.data.assign(split.test.data.begin(),
                  split.test.data.begin() + static_cast<std::ptrdiff_t>(
                                                static_cast<std::size_t>(n) *
                                                (split.test.numel() / split.test.shape[0])));
    Tensor mask = bundle.mask_module->masks(x);
    Tensor xm = apply_mask(x, mask);
    Tensor y = bundle.reconstructor.forward(xm, Mode::Infer);

    // grid: one row per sample, three panels (original, masked, recon);
    // multi-channel images are shown as channel means.
    const int C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int pad = 2;
    PgmImage grid;
    grid.height = n * H + (n + 1) * pad;
    grid.width = 3 * W + 4 * pad;
    grid.pixels.assign(static_cast<std::size_t>(grid.height) * grid.width, 255);
    auto blit = [&](const Tensor& src, int sample, int panel) {
        const int oy = pad + sample * (H + pad);
        const int ox = pad + panel * (W + pad);
        for (int yy = 0; yy < H; ++yy)
            for (int xx = 0; xx < W; ++xx) {
                float v = 0.0f;
                for (int c = 0; c < C; ++c) v += src.at4(sample, c, yy, xx);
                v /= static_cast<float>(C);
                const long g = std::lround((v + 1.0f) * 127.5f);
                grid.pixels[static_cast<std::size_t>(oy + yy) * grid.width + ox + xx] =
                    static_cast<std::uint8_t>(std::clamp(g, 0L, 255L));
            }
    };
    for (int i = 0; i < n; ++i) {
        blit(x, i, 0);
        blit(xm, i, 1); // masked pixels sit at 0 -> mid-gray
        blit(y, i, 2);
    }
    if (out_path.empty()) out_path = run_dir + "/mask_preview.pgm";
    write_pgm(out_path, grid);
    std::cout << "wrote " << out_path << " (" << n << " samples, 3 panels each)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"OLED: adversarially masked encoder-decoder for one-class novelty detection"};
    app.require_subcommand(1);

    std::string config_path, run_dir, score_type = "all", preview_out;
    int class_override = -1, preview_n = 8;
    long long seed_override = -1;
    std::vector<int> classes;

    auto* train_cmd = app.add_subcommand("train", "Train OLED on a protocol split");
    train_cmd->add_option("--config", config_path, "run config file")->required();
    train_cmd->add_option("--class", class_override, "override inlier class");
    train_cmd->add_option("--seed", seed_override, "override seed");

    auto* eval_cmd = app.add_subcommand("eval", "Score a finished run's test set");
    eval_cmd->add_option("--run", run_dir, "run directory")->required();
    eval_cmd->add_option("--score-type", score_type, "rec|mask|cont|avg|all");

    auto* suite_cmd = app.add_subcommand("mnist-suite", "Train and evaluate several classes");
    suite_cmd->add_option("--config", config_path, "run config file")->required();
    suite_cmd->add_option("--classes", classes, "classes to run (default 0..9)")->delimiter(',');
    suite_cmd->add_option("--seed", seed_override, "override seed");

    auto* ablate_cmd = app.add_subcommand("ablate-cae", "Paired OLED vs context-AE run");
    ablate_cmd->add_option("--config", config_path, "run config file")->required();
    ablate_cmd->add_option("--class", class_override, "override inlier class");
    ablate_cmd->add_option("--seed", seed_override, "override seed");

    auto* seg_cmd = app.add_subcommand("segment-eval", "Mask generator as a segmenter");
    seg_cmd->add_option("--run", run_dir, "run directory")->required();

    auto* preview_cmd = app.add_subcommand("mask-preview", "Render original/masked/recon grid");
    preview_cmd->add_option("--run", run_dir, "run directory")->required();
    preview_cmd->add_option("--n", preview_n, "number of samples");
    preview_cmd->add_option("--out", preview_out, "output PGM path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, class_override, seed_override);
        if (eval_cmd->parsed()) return cmd_eval(run_dir, score_type);
        if (suite_cmd->parsed()) return cmd_mnist_suite(config_path, classes, seed_override);
        if (ablate_cmd->parsed()) return cmd_ablate_cae(config_path, class_override, seed_override);
        if (seg_cmd->parsed()) return cmd_segment_eval(run_dir);
        if (preview_cmd->parsed()) return cmd_mask_preview(run_dir, preview_n, preview_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
