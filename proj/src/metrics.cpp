#include "regiontag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "regiontag/error.hpp"

namespace regiontag {

void ScoreMatrix::add_row(const std::vector<double>& row_scores, const std::vector<unsigned char>& row_labels) {
    if (row_scores.size() != static_cast<std::size_t>(classes) || row_labels.size() != static_cast<std::size_t>(classes)) {
        usage_error("score row has the wrong number of classes");
    }
    scores.insert(scores.end(), row_scores.begin(), row_scores.end());
    labels.insert(labels.end(), row_labels.begin(), row_labels.end());
}

void ScoreMatrix::validate() const {
    if (classes <= 0) usage_error("score matrix has no classes");
    if (scores.size() != labels.size() || scores.size() % static_cast<std::size_t>(classes) != 0) {
        usage_error("score matrix shape mismatch");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) data_error("score matrix contains non-finite scores");
    }
}

AveragePrecision average_precision(const ScoreMatrix& sm) {
    sm.validate();
    const std::size_t n = sm.rows();
    AveragePrecision out;
    out.per_class.assign(static_cast<std::size_t>(sm.classes), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::size_t> order(n);
    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < sm.classes; ++c) {
        std::size_t positives = 0;
        for (std::size_t i = 0; i < n; ++i) positives += sm.label(i, c) ? 1 : 0;
        if (positives == 0) {
            out.skipped_classes.push_back(c);
            continue;
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return sm.score(a, c) > sm.score(b, c); });
        double ap = 0.0;
        std::size_t hits = 0;
        for (std::size_t rank = 0; rank < n; ++rank) {
            if (sm.label(order[rank], c)) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
            }
        }
        ap /= static_cast<double>(positives);
        out.per_class[static_cast<std::size_t>(c)] = ap;
        sum += ap;
        ++counted;
    }
    if (counted == 0) data_error("mAP undefined: no class has a positive label");
    out.mean = sum / counted;
    return out;
}

double mean_average_precision(const ScoreMatrix& sm) { return average_precision(sm).mean; }

double equal_error_rate(const ScoreMatrix& sm) {
    sm.validate();
    const std::size_t total = sm.scores.size();
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sm.scores[a] > sm.scores[b]; });
    double positives = 0.0;
    for (auto l : sm.labels) positives += l ? 1.0 : 0.0;
    const double negatives = static_cast<double>(total) - positives;
    if (positives == 0.0 || negatives == 0.0) data_error("EER undefined: need both positive and negative labels");

    // operating points from "nothing accepted" down through each distinct score
    double tp = 0.0, fp = 0.0;
    double prev_fpr = 0.0, prev_fnr = 1.0;
    double prev_diff = prev_fpr - prev_fnr;
    std::size_t i = 0;
    while (i < total) {
        const double threshold = sm.scores[order[i]];
        while (i < total && sm.scores[order[i]] == threshold) {
            if (sm.labels[order[i]]) tp += 1.0; else fp += 1.0;
            ++i;
        }
        const double fpr = fp / negatives;
        const double fnr = 1.0 - tp / positives;
        const double diff = fpr - fnr;
        if (diff == 0.0) return fpr;
        if (diff > 0.0) {
            if (prev_diff == 0.0) return prev_fpr;
            const double alpha = prev_diff / (prev_diff - diff);
            const double at_fpr = prev_fpr + alpha * (fpr - prev_fpr);
            const double at_fnr = prev_fnr + alpha * (fnr - prev_fnr);
            return 0.5 * (at_fpr + at_fnr);
        }
        prev_fpr = fpr;
        prev_fnr = fnr;
        prev_diff = diff;
    }
    internal_error("EER sweep ended without crossing");
}

}  // namespace regiontag
