#pragma once

#include <cstddef>
#include <vector>

namespace regiontag {

/// N examples x C classes of scores in [0, 1] with boolean labels, row-major.
struct ScoreMatrix {
    int classes = 0;
    std::vector<double> scores;
    std::vector<unsigned char> labels;

    explicit ScoreMatrix(int classes_ = 0) : classes(classes_) {}
    std::size_t rows() const { return classes == 0 ? 0 : scores.size() / static_cast<std::size_t>(classes); }
    double score(std::size_t n, int c) const { return scores[n * classes + c]; }
    bool label(std::size_t n, int c) const { return labels[n * classes + c] != 0; }
    void add_row(const std::vector<double>& row_scores, const std::vector<unsigned char>& row_labels);
    /// Checks shapes and that every score is finite.
    void validate() const;
};

struct AveragePrecision {
    double mean = 0.0;
    std::vector<double> per_class;    ///< NaN for classes without positives
    std::vector<int> skipped_classes; ///< classes without positives
};

/// Non-interpolated AP per class (positives ranked by descending score, ties by
/// ascending example index), macro-averaged over classes with at least one positive.
/// Throws Error(Data) when no class has a positive.
AveragePrecision average_precision(const ScoreMatrix& sm);
double mean_average_precision(const ScoreMatrix& sm);

/// Class-pooled ROC EER: linear interpolation between the adjacent operating points
/// where FPR - FNR changes sign. Throws Error(Data) without both positives and negatives.
double equal_error_rate(const ScoreMatrix& sm);

}  // namespace regiontag
