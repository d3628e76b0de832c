#include "oled/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oled/kernels.hpp"

namespace oled {

namespace {

Tensor slice_batch(const Tensor& t, int begin, int end) {
    std::vector<int> shape = t.shape;
    shape[0] = end - begin;
    const std::size_t per = static_cast<std::size_t>(t.numel() / t.shape[0]);
    Tensor out(shape);
    std::copy(t.ptr() + per * static_cast<std::size_t>(begin),
              t.ptr() + per * static_cast<std::size_t>(end), out.ptr());
    return out;
}

void check_two_classes(const std::vector<int>& labels, const char* what) {
    bool has0 = false, has1 = false;
    for (int l : labels) (l == 0 ? has0 : has1) = true;
    if (!has0 || !has1) throw ConfigError(std::string(what) + ": both classes must be present");
}

/// Midranks (1-based) over the scores; ties share the average rank.
std::vector<double> midranks(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace

namespace {

ScoreSet score_impl(LayerStack& reconstructor, const Tensor& images,
                    const std::vector<int>& labels, int eval_batch,
                    const std::function<Tensor(const Tensor&, int, int)>& make_masks) {
    if (images.rank() != 4) throw ShapeError("score_samples wants a rank-4 image batch");
    const int N = images.shape[0];
    if (labels.size() != static_cast<std::size_t>(N))
        throw ShapeError("score_samples: one label per image required");
    if (eval_batch < 1) throw ConfigError("eval batch must be positive");

    ScoreSet scores;
    scores.labels = labels;
    scores.e_rec.resize(static_cast<std::size_t>(N));
    scores.e_mask.resize(static_cast<std::size_t>(N));
    scores.e_cont.resize(static_cast<std::size_t>(N));

    const int C = images.shape[1];
    const int plane = images.shape[2] * images.shape[3];

    parallel_for_chunks(N, eval_threads(), [&](int begin, int end) {
        for (int b = begin; b < end; b += eval_batch) {
            const int e = std::min(end, b + eval_batch);
            Tensor x = slice_batch(images, b, e);
            Tensor mask = make_masks(x, b, e);
            Tensor xm = apply_mask(x, mask);
            Tensor ym = reconstructor.forward(xm, Mode::Infer);
            Tensor y = reconstructor.forward(x, Mode::Infer);

            for (int n = 0; n < e - b; ++n) {
                double acc_mask = 0.0, acc_rec = 0.0, acc_cont = 0.0;
                const float* m = mask.ptr() + static_cast<std::size_t>(n) * plane;
                for (int c = 0; c < C; ++c) {
                    const std::size_t off = (static_cast<std::size_t>(n) * C + c) * plane;
                    const float* xv = x.ptr() + off;
                    const float* ymv = ym.ptr() + off;
                    const float* yv = y.ptr() + off;
                    for (int i = 0; i < plane; ++i) {
                        const double dm = static_cast<double>(xv[i]) - ymv[i];
                        const double dr = static_cast<double>(xv[i]) - yv[i];
                        acc_mask += dm * dm;
                        acc_rec += dr * dr;
                        if (m[i] == 0.0f) acc_cont += dm * dm;
                    }
                }
                scores.e_mask[static_cast<std::size_t>(b + n)] = acc_mask;
                scores.e_rec[static_cast<std::size_t>(b + n)] = acc_rec;
                scores.e_cont[static_cast<std::size_t>(b + n)] = std::sqrt(acc_cont);
            }
        }
    });
    return scores;
}

} // namespace

ScoreSet score_samples(LayerStack& reconstructor, MaskModule& mm, const Tensor& images,
                       const std::vector<int>& labels, int eval_batch) {
    return score_impl(reconstructor, images, labels, eval_batch, [&](const Tensor& x, int, int) {
        return threshold(mm.activation_map(x, Mode::Infer), mm.threshold_cfg);
    });
}

ScoreSet score_samples_masked(LayerStack& reconstructor, const Tensor& images,
                              const Tensor& masks, const std::vector<int>& labels,
                              int eval_batch) {
    if (masks.rank() != 4 || masks.shape[0] != images.shape[0])
        throw ShapeError("score_samples_masked: one mask per image required");
    return score_impl(reconstructor, images, labels, eval_batch,
                      [&](const Tensor&, int b, int e) { return slice_batch(masks, b, e); });
}

std::vector<double> minmax_scale(const std::vector<double>& raw) {
    if (raw.empty()) throw ConfigError("minmax_scale: empty input");
    const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
    std::vector<double> out(raw.size(), 0.0);
    if (*mx == *mn) return out; // constant column scales to all zeros
    const double span = *mx - *mn;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *mn) / span;
    return out;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw ConfigError("auc: scores/labels size mismatch");
    check_two_classes(labels, "auc");
    const std::vector<double> ranks = midranks(scores);
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1) {
            rank_sum_pos += ranks[i];
            ++n_pos;
        }
    const std::size_t n_neg = labels.size() - n_pos;
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw ConfigError("roc_curve: scores/labels size mismatch");
    check_two_classes(labels, "roc_curve");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double n_pos = 0, n_neg = 0;
    for (int l : labels) (l == 1 ? n_pos : n_neg) += 1;

    RocCurve roc;
    roc.fpr.push_back(0.0);
    roc.tpr.push_back(0.0);
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double v = scores[order[i]];
        while (i < order.size() && scores[order[i]] == v) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        roc.thresholds.push_back(v);
        roc.fpr.push_back(fp / n_neg);
        roc.tpr.push_back(tp / n_pos);
    }
    roc.auc = auc(scores, labels);

    // EER: walk the polyline until FPR - FNR changes sign, interpolate.
    roc.eer = 0.5;
    for (std::size_t p = 0; p + 1 < roc.fpr.size(); ++p) {
        const double d0 = roc.fpr[p] - (1.0 - roc.tpr[p]);
        const double d1 = roc.fpr[p + 1] - (1.0 - roc.tpr[p + 1]);
        if (d1 < 0.0) continue;
        const double denom = d1 - d0;
        const double lambda = denom == 0.0 ? 0.0 : -d0 / denom;
        const double f = roc.fpr[p] + lambda * (roc.fpr[p + 1] - roc.fpr[p]);
        const double t = roc.tpr[p] + lambda * (roc.tpr[p + 1] - roc.tpr[p]);
        roc.eer = 0.5 * (f + (1.0 - t));
        break;
    }
    return roc;
}

double eer(const std::vector<double>& scores, const std::vector<int>& labels) {
    return roc_curve(scores, labels).eer;
}

std::vector<MetricRow> aggregate_scores(ScoreSet& scores) {
    if (scores.e_rec.size() != scores.size() || scores.e_mask.size() != scores.size() ||
        scores.e_cont.size() != scores.size())
        throw ConfigError("aggregate_scores: raw error columns incomplete");
    scores.s_rec = minmax_scale(scores.e_rec);
    scores.s_mask = minmax_scale(scores.e_mask);
    scores.s_cont = minmax_scale(scores.e_cont);
    scores.s_avg.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores.s_avg[i] = (scores.s_rec[i] + scores.s_mask[i] + scores.s_cont[i]) / 3.0;

    int n_out = 0;
    for (int l : scores.labels) n_out += (l == 1);
    const int n_in = static_cast<int>(scores.size()) - n_out;

    std::vector<MetricRow> rows;
    const std::pair<const char*, const std::vector<double>*> cols[] = {
        {"rec", &scores.s_rec},
        {"mask", &scores.s_mask},
        {"cont", &scores.s_cont},
        {"avg", &scores.s_avg},
    };
    for (const auto& [name, col] : cols) {
        const RocCurve roc = roc_curve(*col, scores.labels);
        rows.push_back({name, roc.auc, roc.eer, n_in, n_out});
    }
    return rows;
}

ScoreSet aggregate_by_group(const ScoreSet& patch_scores, const std::vector<int>& groups,
                            const std::vector<int>& group_labels) {
    if (groups.size() != patch_scores.size())
        throw ConfigError("aggregate_by_group: one group id per sample required");
    ScoreSet out;
    out.labels = group_labels;
    const std::size_t n = group_labels.size();
    const double lowest = -std::numeric_limits<double>::infinity();
    out.e_rec.assign(n, lowest);
    out.e_mask.assign(n, lowest);
    out.e_cont.assign(n, lowest);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const std::size_t g = static_cast<std::size_t>(groups[i]);
        if (g >= n) throw ConfigError("aggregate_by_group: group id out of range");
        out.e_rec[g] = std::max(out.e_rec[g], patch_scores.e_rec[i]);
        out.e_mask[g] = std::max(out.e_mask[g], patch_scores.e_mask[i]);
        out.e_cont[g] = std::max(out.e_cont[g], patch_scores.e_cont[i]);
    }
    for (std::size_t g = 0; g < n; ++g)
        if (out.e_rec[g] == lowest)
            throw ConfigError("aggregate_by_group: group " + std::to_string(g) + " has no samples");
    return out;
}

SegmentationResult segmentation_eval(LayerStack& generator, const Tensor& images,
                                     const std::vector<int>& labels) {
    if (images.rank() != 4 || images.shape[1] != 1)
        throw ShapeError("segmentation_eval wants single-channel images");
    const int N = images.shape[0];
    if (labels.size() != static_cast<std::size_t>(N))
        throw ShapeError("segmentation_eval: one label per image required");
    const int plane = images.shape[2] * images.shape[3];

    std::vector<double> per_image_auc(static_cast<std::size_t>(N),
                                      std::numeric_limits<double>::quiet_NaN());
    parallel_for_chunks(N, eval_threads(), [&](int begin, int end) {
        const int chunk = 16;
        std::vector<double> act(static_cast<std::size_t>(plane));
        std::vector<int> truth(static_cast<std::size_t>(plane));
        for (int b = begin; b < end; b += chunk) {
            const int e = std::min(end, b + chunk);
            Tensor x = slice_batch(images, b, e);
            Tensor a = generator.forward(x, Mode::Infer);
            for (int n = 0; n < e - b; ++n) {
                const float* xv = x.ptr() + static_cast<std::size_t>(n) * plane;
                const float* av = a.ptr() + static_cast<std::size_t>(n) * plane;
                int fg = 0;
                for (int i = 0; i < plane; ++i) {
                    // intensity 0 maps exactly to -1 under v/127.5 - 1
                    truth[static_cast<std::size_t>(i)] = xv[i] > -1.0f ? 1 : 0;
                    act[static_cast<std::size_t>(i)] = av[i];
                    fg += truth[static_cast<std::size_t>(i)];
                }
                if (fg == 0 || fg == plane) continue; // single-class map: skip
                per_image_auc[static_cast<std::size_t>(b + n)] = auc(act, truth);
            }
        }
    });

    SegmentationResult res;
    double sum_in = 0.0, sum_out = 0.0;
    for (int n = 0; n < N; ++n) {
        const double v = per_image_auc[static_cast<std::size_t>(n)];
        if (std::isnan(v)) {
            ++res.n_skipped;
            continue;
        }
        if (labels[static_cast<std::size_t>(n)] == 0) {
            sum_in += v;
            ++res.n_inlier;
        } else {
            sum_out += v;
            ++res.n_outlier;
        }
    }
    res.inlier_mean_auc = res.n_inlier ? sum_in / res.n_inlier : 0.0;
    res.outlier_mean_auc = res.n_outlier ? sum_out / res.n_outlier : 0.0;
    return res;
}

} // namespace oled
