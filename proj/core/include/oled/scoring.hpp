#pragma once

#include <string>
#include <vector>

#include "oled/models.hpp"
#include "oled/tensor.hpp"

namespace oled {

/// Per-sample raw reconstruction errors and min-max-normalized anomaly
/// scores, labels 0 = inlier, 1 = outlier.
struct ScoreSet {
    std::vector<double> e_rec, e_mask, e_cont;
    std::vector<double> s_rec, s_mask, s_cont, s_avg;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
};

/// ROC sweep over descending score thresholds. FPR/TPR are cumulative after
/// each distinct score value, starting from the implicit (0,0) point.
struct RocCurve {
    std::vector<double> thresholds;
    std::vector<double> fpr, tpr;
    double auc = 0.0;
    double eer = 0.0;
};

/// Raw errors for a test batch under trained models:
///   e_mask = sum (x - R(x_m))^2        over the full canvas,
///   e_cont = || x_c - R(x_m)_c ||      over the masked region,
///   e_rec  = sum (x - R(x))^2.
/// Masks come deterministically from MM at its configured keep fraction.
/// Evaluation parallelizes over sample chunks when OLED_THREADS > 1;
/// per-sample results are identical to the sequential order.
ScoreSet score_samples(LayerStack& reconstructor, MaskModule& mm, const Tensor& images,
                       const std::vector<int>& labels, int eval_batch = 64);

/// Same raw errors under caller-supplied masks [N,1,H,W] instead of a mask
/// module (used by the context-autoencoder baseline).
ScoreSet score_samples_masked(LayerStack& reconstructor, const Tensor& images,
                              const Tensor& masks, const std::vector<int>& labels,
                              int eval_batch = 64);

/// (v - min) / (max - min); a constant vector maps to all zeros.
std::vector<double> minmax_scale(const std::vector<double>& raw);

/// Mann-Whitney AUC: P(outlier score > inlier score) + 0.5 P(equal).
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Equal error rate: FPR at the ROC point where FPR = 1 - TPR, linearly
/// interpolated between adjacent sweep points.
double eer(const std::vector<double>& scores, const std::vector<int>& labels);

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricRow {
    std::string score_type;
    double auc = 0.0;
    double eer = 0.0;
    int n_inlier = 0;
    int n_outlier = 0;
};

/// Fills the four normalized score columns (s_avg is the mean of the other
/// three) and computes AUC/EER per score type.
std::vector<MetricRow> aggregate_scores(ScoreSet& scores);

/// Collapses patch-level raw errors to frame level by taking the max raw
/// error over each frame's patches; labels become the frame labels.
ScoreSet aggregate_by_group(const ScoreSet& patch_scores, const std::vector<int>& groups,
                            const std::vector<int>& group_labels);

struct SegmentationResult {
    double inlier_mean_auc = 0.0;
    double outlier_mean_auc = 0.0;
    int n_inlier = 0;
    int n_outlier = 0;
    int n_skipped = 0; // single-class ground truth maps
};

/// Mask-generator-as-segmenter evaluation: per image, pixelwise AUC of the
/// raw activation map against the foreground map (pixels whose original
/// 8-bit intensity was non-zero, i.e. normalized value > -1), averaged
/// separately over inlier and outlier images.
SegmentationResult segmentation_eval(LayerStack& generator, const Tensor& images,
                                     const std::vector<int>& labels);

} // namespace oled
