#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oled/adam.hpp"
#include "oled/datasets.hpp"
#include "oled/models.hpp"

namespace oled {

/// The three reconstruction losses of one batch (means over the batch) and
/// their weights. total() is the Reconstructor's objective.
struct LossTerms {
    double l_mask = 0.0; // sum (x - R(x_m))^2, full canvas
    double l_cont = 0.0; // || x_c - R(x_m)_c ||, unsquared Euclidean norm
    double l_rec = 0.0;  // sum (x - R(x))^2
    double gamma = 50.0;
    double lambda = 1.0;

    double total() const { return l_mask + gamma * l_cont + lambda * l_rec; }
};

struct TrainConfig {
    double keep_fraction = 0.875; // t
    double gamma = 50.0;
    double lambda = 1.0;
    AdamConfig adam{}; // lr 5e-4, b1 0.5, b2 0.9 for both networks
    int batch = 64;
    int epochs = 20;
    std::uint64_t seed = 0;
    MaskGradMode grad_mode = MaskGradMode::StraightThrough;
    double val_fraction = 0.05; // applied by the protocol builders, recorded here
    float mask_eps = 1e-6f;     // paper-literal surrogate epsilon

    // architecture
    int bottleneck = 128;
    std::vector<int> r_enc{32, 64, 128};
    std::vector<int> r_dec{64, 32};
    std::vector<int> m_enc{16, 32};
    std::vector<int> m_dec{16};
    float leaky_slope = 0.2f;
    float bn_eps = 1e-5f;
    float bn_momentum = 0.9f;

    int cae_crop = 10; // context-autoencoder baseline square side
    int eval_batch = 64;

    ThresholdConfig threshold_cfg() const {
        return {keep_fraction, mask_eps, grad_mode};
    }
};

/// One line of the per-epoch training log. Validation AUC columns are NaN
/// when the validation split lacks outliers (epoch selection then falls
/// back to the validation L_mask).
struct EpochRecord {
    int epoch = 0;
    double l_mask = 0.0, l_cont = 0.0, l_rec = 0.0;
    double val_auc_rec = 0.0, val_auc_mask = 0.0, val_auc_cont = 0.0, val_auc_avg = 0.0;
    std::string checkpoint_path;
};

struct TrainResult {
    std::vector<EpochRecord> records;
    int best_epoch = 0; // 1-based
    std::string best_checkpoint;
};

/// Infer-mode loss evaluation for a batch under the given masks.
LossTerms compute_losses(const Tensor& x, const Tensor& x_m, const Tensor& mask,
                         LayerStack& reconstructor, double gamma, double lambda);

/// One adversarial step on a batch: R descends L_mask + g*L_cont + l*L_rec
/// with MM frozen, then masks are regenerated and MM takes one Adam step on
/// L_mask + g*L_cont routed through the threshold surrogate (MM never sees
/// L_rec). Returns the R-phase loss terms. Throws NumericError on a
/// non-finite loss.
LossTerms train_step(const Tensor& batch, LayerStack& reconstructor, MaskModule& mm,
                     Adam& opt_r, Adam& opt_m, const TrainConfig& cfg);

/// Full OLED training run: deterministic in (seed, config, data). Writes
/// epochs.csv, one checkpoint per epoch, best.txt and split_meta.txt into
/// out_dir. Best epoch maximizes validation s_mask AUC.
TrainResult train(const DatasetSplit& data, const TrainConfig& cfg, const std::string& out_dir);

/// Context-autoencoder ablation: R's architecture alone, every training
/// image perturbed by one axis-aligned cae_crop^2 zeroed square at a
/// uniformly random valid position. Evaluation masks are derived from a
/// content hash so duplicate images score identically.
TrainResult train_cae_baseline(const DatasetSplit& data, const TrainConfig& cfg,
                               const std::string& out_dir);

/// Deterministic random-square masks for the CAE baseline at test time.
Tensor cae_masks(const Tensor& images, std::uint64_t seed, int crop);

/// A trained model pair reloaded from a checkpoint, ready for scoring.
struct ModelBundle {
    TrainConfig cfg;
    LayerStack reconstructor;
    std::optional<MaskModule> mask_module; // absent for the CAE baseline
    int in_ch = 0, height = 0, width = 0;
    std::string kind; // "oled" or "cae"
};

void save_model_checkpoint(const std::string& path, const std::string& kind,
                           const TrainConfig& cfg, int in_ch, int height, int width,
                           LayerStack& reconstructor, LayerStack* generator);

ModelBundle load_model_bundle(const std::string& path);

} // namespace oled
