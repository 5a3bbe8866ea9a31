#pragma once

// Detection metrics: ROC AUC (Mann-Whitney with half-credit ties), average
// precision (step-wise), equal error rate, and frame-to-video aggregation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pcl/core.hpp"

namespace pcl {

struct ScoredItem {
    double score = 0.0;
    int label = 0;  // 1 = fake/positive
    std::string video;
};

struct ScoredSet {
    std::vector<ScoredItem> items;

    int positives() const {
        int n = 0;
        for (const auto& it : items) n += it.label ? 1 : 0;
        return n;
    }
    int negatives() const { return static_cast<int>(items.size()) - positives(); }
};

// AUC as the Mann-Whitney statistic P(s+ > s-) + 0.5 P(s+ = s-), computed
// exactly via average ranks.
inline double auc(const ScoredSet& s) {
    const int np = s.positives();
    const int nn = s.negatives();
    if (np == 0 || nn == 0) throw MetricError("auc: need both classes");

    std::vector<std::size_t> order(s.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.items[a].score < s.items[b].score; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && s.items[order[j + 1]].score == s.items[order[i]].score) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (s.items[order[k]].label) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    return (rank_sum_pos - 0.5 * np * (np + 1.0)) / (static_cast<double>(np) * nn);
}

// Step-wise (non-interpolated) average precision over the descending-score
// sweep; ties are processed as one block.
inline double average_precision(const ScoredSet& s) {
    const int np = s.positives();
    if (np == 0) throw MetricError("average_precision: need at least one positive");

    std::vector<std::size_t> order(s.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.items[a].score > s.items[b].score; });

    double ap = 0.0;
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        double block_tp = 0.0, block_fp = 0.0;
        while (j < order.size() && s.items[order[j]].score == s.items[order[i]].score) {
            block_tp += s.items[order[j]].label ? 1.0 : 0.0;
            block_fp += s.items[order[j]].label ? 0.0 : 1.0;
            ++j;
        }
        const double prev_recall = tp / np;
        tp += block_tp;
        fp += block_fp;
        const double recall = tp / np;
        const double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        i = j;
    }
    return ap;
}

// Equal error rate: sweep thresholds, pick the point minimizing |FPR - FNR|,
// and return the average of the two rates there (ties resolved toward the
// smaller average).
inline double eer(const ScoredSet& s) {
    const int np = s.positives();
    const int nn = s.negatives();
    if (np == 0 || nn == 0) throw MetricError("eer: need both classes");

    std::vector<std::size_t> order(s.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.items[a].score > s.items[b].score; });

    // Threshold above the max score: nothing predicted positive.
    double tp = 0.0, fp = 0.0;
    double best_diff = 1.0;  // |FPR - FNR| at that threshold: |0 - 1| = 1
    double best_rate = 0.5 * (0.0 + 1.0);

    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && s.items[order[j]].score == s.items[order[i]].score) {
            tp += s.items[order[j]].label ? 1.0 : 0.0;
            fp += s.items[order[j]].label ? 0.0 : 1.0;
            ++j;
        }
        const double fpr = fp / nn;
        const double fnr = 1.0 - tp / np;
        const double diff = std::abs(fpr - fnr);
        const double rate = 0.5 * (fpr + fnr);
        if (diff < best_diff - 1e-15 || (std::abs(diff - best_diff) <= 1e-15 && rate < best_rate)) {
            best_diff = diff;
            best_rate = rate;
        }
        i = j;
    }
    return best_rate;
}

// Collapses frame scores to one item per video (mean score). Frames within a
// video must agree on the label.
inline ScoredSet video_level(const ScoredSet& frames) {
    std::map<std::string, std::pair<double, int>> sums;  // video -> (score sum, count)
    std::map<std::string, int> labels;
    for (const auto& it : frames.items) {
        if (it.video.empty()) throw DataError("video_level: every frame needs a video id");
        auto [pos, inserted] = labels.emplace(it.video, it.label);
        if (!inserted && pos->second != it.label)
            throw DataError("video_level: mixed labels within video " + it.video);
        auto& entry = sums[it.video];
        entry.first += it.score;
        entry.second += 1;
    }
    ScoredSet out;
    for (const auto& [video, acc] : sums)
        out.items.push_back({acc.first / acc.second, labels[video], video});
    return out;
}

}  // namespace pcl
