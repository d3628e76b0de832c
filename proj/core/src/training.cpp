#include "oled/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "oled/checkpoint.hpp"
#include "oled/scoring.hpp"

namespace fs = std::filesystem;

namespace oled {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(float v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

/// L_mask and L_cont of a batch given the reconstruction of the masked
/// images; optionally fills d(l_mask + gamma*l_cont)/d(ym).
std::pair<double, double> masked_losses(const Tensor& x, const Tensor& ym, const Tensor& mask,
                                        double gamma, Tensor* grad_ym) {
    const int N = x.shape[0], C = x.shape[1];
    const int plane = x.shape[2] * x.shape[3];
    double sum_mask = 0.0, sum_cont = 0.0;
    std::vector<double> cont_norm(static_cast<std::size_t>(N), 0.0);

    for (int n = 0; n < N; ++n) {
        const float* m = mask.ptr() + static_cast<std::size_t>(n) * plane;
        double acc = 0.0, acc_region = 0.0;
        for (int c = 0; c < C; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * plane;
            const float* xv = x.ptr() + off;
            const float* yv = ym.ptr() + off;
            for (int i = 0; i < plane; ++i) {
                const double d = static_cast<double>(xv[i]) - yv[i];
                acc += d * d;
                if (m[i] == 0.0f) acc_region += d * d;
            }
        }
        sum_mask += acc;
        cont_norm[static_cast<std::size_t>(n)] = std::sqrt(acc_region);
        sum_cont += cont_norm[static_cast<std::size_t>(n)];
    }
    const double l_mask = sum_mask / N;
    const double l_cont = sum_cont / N;

    if (grad_ym) {
        *grad_ym = Tensor(x.shape);
        for (int n = 0; n < N; ++n) {
            const float* m = mask.ptr() + static_cast<std::size_t>(n) * plane;
            const double norm = cont_norm[static_cast<std::size_t>(n)];
            for (int c = 0; c < C; ++c) {
                const std::size_t off = (static_cast<std::size_t>(n) * C + c) * plane;
                const float* xv = x.ptr() + off;
                const float* yv = ym.ptr() + off;
                float* g = grad_ym->ptr() + off;
                for (int i = 0; i < plane; ++i) {
                    const double r = static_cast<double>(yv[i]) - xv[i];
                    double v = 2.0 * r / N;
                    if (m[i] == 0.0f && norm > 0.0) v += gamma * r / (norm * N);
                    g[i] = static_cast<float>(v);
                }
            }
        }
    }
    return {l_mask, l_cont};
}

/// L_rec of a batch; optionally fills lambda * dL_rec/d(yx).
double rec_loss(const Tensor& x, const Tensor& yx, double lambda, Tensor* grad_yx) {
    const int N = x.shape[0];
    double sum = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const double d = static_cast<double>(x.data[static_cast<std::size_t>(i)]) -
                         yx.data[static_cast<std::size_t>(i)];
        sum += d * d;
    }
    if (grad_yx) {
        *grad_yx = Tensor(x.shape);
        const double scale = 2.0 * lambda / N;
        for (std::int64_t i = 0; i < x.numel(); ++i)
            grad_yx->data[static_cast<std::size_t>(i)] = static_cast<float>(
                scale * (yx.data[static_cast<std::size_t>(i)] - x.data[static_cast<std::size_t>(i)]));
    }
    return sum / N;
}

Tensor gather_rows(const Tensor& t, const std::vector<int>& order, int begin, int end) {
    std::vector<int> shape = t.shape;
    shape[0] = end - begin;
    Tensor out(shape);
    const std::size_t per = static_cast<std::size_t>(t.numel() / t.shape[0]);
    for (int i = begin; i < end; ++i)
        std::memcpy(out.ptr() + static_cast<std::size_t>(i - begin) * per,
                    t.ptr() + static_cast<std::size_t>(order[static_cast<std::size_t>(i)]) * per,
                    sizeof(float) * per);
    return out;
}

MaskGeneratorConfig mask_cfg_from(const TrainConfig& cfg, int in_ch, int h, int w) {
    MaskGeneratorConfig m;
    m.in_ch = in_ch;
    m.height = h;
    m.width = w;
    m.enc_channels = cfg.m_enc;
    m.dec_channels = cfg.m_dec;
    m.leaky_slope = cfg.leaky_slope;
    m.bn_eps = cfg.bn_eps;
    m.bn_momentum = cfg.bn_momentum;
    return m;
}

ReconstructorConfig rec_cfg_from(const TrainConfig& cfg, int in_ch, int h, int w) {
    ReconstructorConfig r;
    r.in_ch = in_ch;
    r.height = h;
    r.width = w;
    r.enc_channels = cfg.r_enc;
    r.dec_channels = cfg.r_dec;
    r.bottleneck = cfg.bottleneck;
    r.leaky_slope = cfg.leaky_slope;
    r.bn_eps = cfg.bn_eps;
    r.bn_momentum = cfg.bn_momentum;
    return r;
}

void write_epochs_csv(const std::string& path, const std::vector<EpochRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "epoch,l_mask,l_cont,l_rec,val_auc_rec,val_auc_mask,val_auc_cont,val_auc_avg\n";
    for (const EpochRecord& r : records)
        out << r.epoch << ',' << fmt(r.l_mask) << ',' << fmt(r.l_cont) << ',' << fmt(r.l_rec)
            << ',' << fmt(r.val_auc_rec) << ',' << fmt(r.val_auc_mask) << ','
            << fmt(r.val_auc_cont) << ',' << fmt(r.val_auc_avg) << '\n';
}

bool has_both_classes(const std::vector<int>& labels) {
    bool a = false, b = false;
    for (int l : labels) (l == 0 ? a : b) = true;
    return a && b;
}

struct ValOutcome {
    double metric; // maximized across epochs
    double auc_rec, auc_mask, auc_cont, auc_avg;
};

} // namespace

LossTerms compute_losses(const Tensor& x, const Tensor& x_m, const Tensor& mask,
                         LayerStack& reconstructor, double gamma, double lambda) {
    if (!x.same_shape(x_m)) throw ShapeError("compute_losses: x and x_m differ in shape");
    Tensor ym = reconstructor.forward(x_m, Mode::Infer);
    Tensor yx = reconstructor.forward(x, Mode::Infer);
    LossTerms lt;
    lt.gamma = gamma;
    lt.lambda = lambda;
    auto [l_mask, l_cont] = masked_losses(x, ym, mask, gamma, nullptr);
    lt.l_mask = l_mask;
    lt.l_cont = l_cont;
    lt.l_rec = rec_loss(x, yx, lambda, nullptr);
    return lt;
}

LossTerms train_step(const Tensor& batch, LayerStack& reconstructor, MaskModule& mm,
                     Adam& opt_r, Adam& opt_m, const TrainConfig& cfg) {
    const ThresholdConfig tcfg = cfg.threshold_cfg();

    // Phase 1: update R with MM frozen. Masks come from the current
    // generator in infer mode.
    Tensor activation = mm.activation_map(batch, Mode::Infer);
    Tensor mask = threshold(activation, tcfg);
    Tensor xm = apply_mask(batch, mask);

    Tape tape_masked, tape_plain;
    Tensor ym = reconstructor.forward(xm, Mode::Train, &tape_masked);
    Tensor yx = reconstructor.forward(batch, Mode::Train, &tape_plain);

    LossTerms lt;
    lt.gamma = cfg.gamma;
    lt.lambda = cfg.lambda;
    Tensor grad_ym, grad_yx;
    {
        auto [l_mask, l_cont] = masked_losses(batch, ym, mask, cfg.gamma, &grad_ym);
        lt.l_mask = l_mask;
        lt.l_cont = l_cont;
    }
    lt.l_rec = rec_loss(batch, yx, cfg.lambda, &grad_yx);
    if (!std::isfinite(lt.total()))
        throw NumericError("non-finite training loss (l_mask=" + fmt(lt.l_mask) +
                           ", l_cont=" + fmt(lt.l_cont) + ", l_rec=" + fmt(lt.l_rec) + ")");

    GradMap grads_r;
    reconstructor.backward(tape_masked, grad_ym, grads_r);
    GradMap grads_r_plain;
    reconstructor.backward(tape_plain, grad_yx, grads_r_plain);
    accumulate_grads(grads_r, grads_r_plain);
    opt_r.step(reconstructor.parameters(), grads_r);

    // Phase 2: update MM with R frozen (parameters fixed; one more
    // train-mode pass through R still advances its batchnorm statistics).
    // Masks are regenerated from a train-mode generator pass so the tape
    // matches. MM's objective is L_mask + gamma*L_cont routed through the
    // threshold surrogate; with the straight-through identity the surrogate
    // inverts the threshold's monotonicity, so descending the surrogate
    // gradient ascends the true objective (the ascent oracle tests pin
    // this direction). L_rec never reaches MM.
    Tape tape_gen;
    Tensor activation2 = mm.activation_map(batch, Mode::Train, &tape_gen);
    Tensor mask2 = threshold(activation2, tcfg);
    Tensor xm2 = apply_mask(batch, mask2);
    Tape tape_r2;
    Tensor ym2 = reconstructor.forward(xm2, Mode::Train, &tape_r2);

    Tensor grad_ym2;
    masked_losses(batch, ym2, mask2, cfg.gamma, &grad_ym2);
    GradMap scratch;
    Tensor grad_xm = reconstructor.backward(tape_r2, grad_ym2, scratch);
    Tensor grad_a = mask_backward(grad_xm, batch, activation2, mask2, tcfg);
    GradMap grads_m;
    mm.generator.backward(tape_gen, grad_a, grads_m);
    opt_m.step(mm.generator.parameters(), grads_m);

    return lt;
}

// ---- checkpoint plumbing ----

void save_model_checkpoint(const std::string& path, const std::string& kind,
                           const TrainConfig& cfg, int in_ch, int height, int width,
                           LayerStack& reconstructor, LayerStack* generator) {
    Checkpoint ckpt;
    ckpt.meta["kind"] = kind;
    ckpt.meta["in_ch"] = std::to_string(in_ch);
    ckpt.meta["height"] = std::to_string(height);
    ckpt.meta["width"] = std::to_string(width);
    ckpt.meta["keep_fraction"] = fmt(cfg.keep_fraction);
    ckpt.meta["gamma"] = fmt(cfg.gamma);
    ckpt.meta["lambda"] = fmt(cfg.lambda);
    ckpt.meta["lr"] = fmt(cfg.adam.lr);
    ckpt.meta["b1"] = fmt(cfg.adam.b1);
    ckpt.meta["b2"] = fmt(cfg.adam.b2);
    ckpt.meta["adam_eps"] = fmt(cfg.adam.eps);
    ckpt.meta["batch"] = std::to_string(cfg.batch);
    ckpt.meta["epochs"] = std::to_string(cfg.epochs);
    ckpt.meta["seed"] = std::to_string(cfg.seed);
    ckpt.meta["grad_mode"] =
        cfg.grad_mode == MaskGradMode::StraightThrough ? "straight-through" : "paper-literal";
    ckpt.meta["val_fraction"] = fmt(cfg.val_fraction);
    ckpt.meta["mask_eps"] = fmt(cfg.mask_eps);
    ckpt.meta["bottleneck"] = std::to_string(cfg.bottleneck);
    ckpt.meta["r_enc"] = join_ints(cfg.r_enc);
    ckpt.meta["r_dec"] = join_ints(cfg.r_dec);
    ckpt.meta["m_enc"] = join_ints(cfg.m_enc);
    ckpt.meta["m_dec"] = join_ints(cfg.m_dec);
    ckpt.meta["leaky_slope"] = fmt(cfg.leaky_slope);
    ckpt.meta["bn_eps"] = fmt(cfg.bn_eps);
    ckpt.meta["bn_momentum"] = fmt(cfg.bn_momentum);
    ckpt.meta["cae_crop"] = std::to_string(cfg.cae_crop);
    ckpt.meta["eval_batch"] = std::to_string(cfg.eval_batch);

    ckpt.add_stack("R", reconstructor);
    if (generator) ckpt.add_stack("M", *generator);
    save_checkpoint(path, ckpt);
}

ModelBundle load_model_bundle(const std::string& path) {
    const Checkpoint ckpt = load_checkpoint(path);
    auto get = [&](const std::string& key) -> std::string {
        auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end())
            throw IoError(path + ": checkpoint meta missing '" + key + "'");
        return it->second;
    };

    ModelBundle bundle;
    bundle.kind = get("kind");
    bundle.in_ch = std::stoi(get("in_ch"));
    bundle.height = std::stoi(get("height"));
    bundle.width = std::stoi(get("width"));

    TrainConfig& cfg = bundle.cfg;
    cfg.keep_fraction = std::stod(get("keep_fraction"));
    cfg.gamma = std::stod(get("gamma"));
    cfg.lambda = std::stod(get("lambda"));
    cfg.adam.lr = std::stof(get("lr"));
    cfg.adam.b1 = std::stof(get("b1"));
    cfg.adam.b2 = std::stof(get("b2"));
    cfg.adam.eps = std::stof(get("adam_eps"));
    cfg.batch = std::stoi(get("batch"));
    cfg.epochs = std::stoi(get("epochs"));
    cfg.seed = std::stoull(get("seed"));
    cfg.grad_mode = get("grad_mode") == "paper-literal" ? MaskGradMode::PaperLiteral
                                                        : MaskGradMode::StraightThrough;
    cfg.val_fraction = std::stod(get("val_fraction"));
    cfg.mask_eps = std::stof(get("mask_eps"));
    cfg.bottleneck = std::stoi(get("bottleneck"));
    cfg.r_enc = split_ints(get("r_enc"));
    cfg.r_dec = split_ints(get("r_dec"));
    cfg.m_enc = split_ints(get("m_enc"));
    cfg.m_dec = split_ints(get("m_dec"));
    cfg.leaky_slope = std::stof(get("leaky_slope"));
    cfg.bn_eps = std::stof(get("bn_eps"));
    cfg.bn_momentum = std::stof(get("bn_momentum"));
    cfg.cae_crop = std::stoi(get("cae_crop"));
    cfg.eval_batch = std::stoi(get("eval_batch"));

    Rng scratch(0); // initial values are overwritten by the restore
    bundle.reconstructor =
        build_reconstructor(rec_cfg_from(cfg, bundle.in_ch, bundle.height, bundle.width), scratch);
    ckpt.restore_stack("R", bundle.reconstructor);
    if (bundle.kind == "oled") {
        MaskModule mm;
        mm.generator = build_mask_generator(
            mask_cfg_from(cfg, bundle.in_ch, bundle.height, bundle.width), scratch);
        ckpt.restore_stack("M", mm.generator);
        mm.threshold_cfg = cfg.threshold_cfg();
        bundle.mask_module.emplace(std::move(mm));
    }
    return bundle;
}

// ---- training loops ----

namespace {

/// Shared epoch loop for OLED and the CAE baseline.
TrainResult run_training(const DatasetSplit& data, const TrainConfig& cfg,
                         const std::string& out_dir, bool cae) {
    if (data.train.rank() != 4 || data.train.shape[0] < 1)
        throw ConfigError("training split is empty");
    if (cfg.batch < 1 || cfg.epochs < 1) throw ConfigError("batch and epochs must be positive");
    const int n_train = data.train.shape[0];
    const int in_ch = data.train.shape[1];
    const int height = data.train.shape[2];
    const int width = data.train.shape[3];
    if (cae && (height < cfg.cae_crop || width < cfg.cae_crop))
        throw ConfigError("images are smaller than the CAE crop square");

    fs::create_directories(out_dir);

    Rng rng(cfg.seed);
    LayerStack reconstructor = build_reconstructor(rec_cfg_from(cfg, in_ch, height, width), rng);
    MaskModule mm;
    if (!cae) {
        mm.generator = build_mask_generator(mask_cfg_from(cfg, in_ch, height, width), rng);
        mm.threshold_cfg = cfg.threshold_cfg();
    }
    Adam opt_r(cfg.adam), opt_m(cfg.adam);

    const bool val_usable = data.val.rank() == 4 && data.val.shape[0] > 0;
    const bool val_has_labels = val_usable && has_both_classes(data.val_labels);

    auto evaluate_validation = [&]() -> ValOutcome {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (!val_usable) return {0.0, nan, nan, nan, nan};
        if (val_has_labels) {
            ScoreSet scores =
                cae ? score_samples_masked(reconstructor, data.val,
                                           cae_masks(data.val, cfg.seed, cfg.cae_crop),
                                           data.val_labels, cfg.eval_batch)
                    : score_samples(reconstructor, mm, data.val, data.val_labels, cfg.eval_batch);
            const std::vector<MetricRow> rows = aggregate_scores(scores);
            return {rows[1].auc, rows[0].auc, rows[1].auc, rows[2].auc, rows[3].auc};
        }
        // Unlabeled validation (UCSD): fall back to the validation L_mask.
        Tensor vmask = cae ? cae_masks(data.val, cfg.seed, cfg.cae_crop)
                           : threshold(mm.activation_map(data.val, Mode::Infer),
                                       cfg.threshold_cfg());
        const LossTerms lt = compute_losses(data.val, apply_mask(data.val, vmask), vmask,
                                            reconstructor, cfg.gamma, cfg.lambda);
        return {-lt.l_mask, nan, nan, nan, nan};
    };

    TrainResult result;
    std::vector<double> metrics;
    std::vector<int> order(static_cast<std::size_t>(n_train));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double sum_mask = 0.0, sum_cont = 0.0, sum_rec = 0.0;
        int batches = 0;
        for (int b = 0; b < n_train; b += cfg.batch) {
            const int e = std::min(n_train, b + cfg.batch);
            Tensor batch = gather_rows(data.train, order, b, e);
            LossTerms lt;
            try {
                if (cae) {
                    // random square crop per image, drawn from the run's rng
                    Tensor mask = Tensor::full({e - b, 1, height, width}, 1.0f);
                    for (int n = 0; n < e - b; ++n) {
                        const int oy = static_cast<int>(rng.index(
                            static_cast<std::size_t>(height - cfg.cae_crop + 1)));
                        const int ox = static_cast<int>(rng.index(
                            static_cast<std::size_t>(width - cfg.cae_crop + 1)));
                        for (int y = 0; y < cfg.cae_crop; ++y) {
                            float* row = mask.ptr() +
                                         (static_cast<std::size_t>(n) * height + oy + y) * width +
                                         ox;
                            for (int x = 0; x < cfg.cae_crop; ++x) row[x] = 0.0f;
                        }
                    }
                    Tensor xm = apply_mask(batch, mask);
                    Tape tape_masked, tape_plain;
                    Tensor ym = reconstructor.forward(xm, Mode::Train, &tape_masked);
                    Tensor yx = reconstructor.forward(batch, Mode::Train, &tape_plain);
                    lt.gamma = cfg.gamma;
                    lt.lambda = cfg.lambda;
                    Tensor grad_ym, grad_yx;
                    auto [l_mask, l_cont] = masked_losses(batch, ym, mask, cfg.gamma, &grad_ym);
                    lt.l_mask = l_mask;
                    lt.l_cont = l_cont;
                    lt.l_rec = rec_loss(batch, yx, cfg.lambda, &grad_yx);
                    if (!std::isfinite(lt.total()))
                        throw NumericError("non-finite training loss");
                    GradMap grads;
                    reconstructor.backward(tape_masked, grad_ym, grads);
                    GradMap grads_plain;
                    reconstructor.backward(tape_plain, grad_yx, grads_plain);
                    accumulate_grads(grads, grads_plain);
                    opt_r.step(reconstructor.parameters(), grads);
                } else {
                    lt = train_step(batch, reconstructor, mm, opt_r, opt_m, cfg);
                }
            } catch (const NumericError& err) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches + 1) + ": " + err.what());
            }
            sum_mask += lt.l_mask;
            sum_cont += lt.l_cont;
            sum_rec += lt.l_rec;
            ++batches;
        }

        const ValOutcome val = evaluate_validation();
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
        const std::string ckpt_path = out_dir + "/" + name;
        save_model_checkpoint(ckpt_path, cae ? "cae" : "oled", cfg, in_ch, height, width,
                              reconstructor, cae ? nullptr : &mm.generator);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.l_mask = sum_mask / batches;
        rec.l_cont = sum_cont / batches;
        rec.l_rec = sum_rec / batches;
        rec.val_auc_rec = val.auc_rec;
        rec.val_auc_mask = val.auc_mask;
        rec.val_auc_cont = val.auc_cont;
        rec.val_auc_avg = val.auc_avg;
        rec.checkpoint_path = ckpt_path;
        result.records.push_back(rec);
        metrics.push_back(val_usable ? val.metric : -rec.l_mask);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < metrics.size(); ++i)
        if (metrics[i] > metrics[best]) best = i;
    result.best_epoch = static_cast<int>(best) + 1;
    result.best_checkpoint = result.records[best].checkpoint_path;

    write_epochs_csv(out_dir + "/epochs.csv", result.records);
    write_split_meta(out_dir + "/split_meta.txt", data.meta);
    {
        std::ofstream bestf(out_dir + "/best.txt");
        if (!bestf) throw IoError("cannot write '" + out_dir + "/best.txt'");
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", result.best_epoch);
        bestf << "best_epoch = " << result.best_epoch << "\n";
        bestf << "checkpoint = " << name << "\n";
        bestf << "selection = "
              << (val_has_labels ? "val_auc_mask" : (val_usable ? "val_l_mask" : "train_l_mask"))
              << "\n";
        bestf << "metric = " << fmt(metrics[best]) << "\n";
    }
    return result;
}

} // namespace

TrainResult train(const DatasetSplit& data, const TrainConfig& cfg, const std::string& out_dir) {
    return run_training(data, cfg, out_dir, false);
}

TrainResult train_cae_baseline(const DatasetSplit& data, const TrainConfig& cfg,
                               const std::string& out_dir) {
    return run_training(data, cfg, out_dir, true);
}

Tensor cae_masks(const Tensor& images, std::uint64_t seed, int crop) {
    if (images.rank() != 4) throw ShapeError("cae_masks wants a rank-4 batch");
    const int N = images.shape[0];
    const int H = images.shape[2], W = images.shape[3];
    if (H < crop || W < crop) throw ConfigError("images are smaller than the CAE crop square");
    const std::size_t per = static_cast<std::size_t>(images.numel() / N);

    Tensor masks = Tensor::full({N, 1, H, W}, 1.0f);
    for (int n = 0; n < N; ++n) {
        // content hash so identical images always get the identical mask
        std::uint64_t h = 1469598103934665603ull ^ seed;
        const float* img = images.ptr() + static_cast<std::size_t>(n) * per;
        for (std::size_t i = 0; i < per; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, img + i, 4);
            h ^= bits;
            h *= 1099511628211ull;
        }
        Rng rng(h);
        const int oy = static_cast<int>(rng.index(static_cast<std::size_t>(H - crop + 1)));
        const int ox = static_cast<int>(rng.index(static_cast<std::size_t>(W - crop + 1)));
        for (int y = 0; y < crop; ++y) {
            float* row = masks.ptr() + (static_cast<std::size_t>(n) * H + oy + y) * W + ox;
            for (int x = 0; x < crop; ++x) row[x] = 0.0f;
        }
    }
    return masks;
}

} // namespace oled
