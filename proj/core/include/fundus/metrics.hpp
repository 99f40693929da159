#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fundus/features.hpp"

namespace fundus {

/// K x K count table; cell (i,j) is the number of samples with actual class
/// i predicted as class j.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<std::int64_t> cells;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int k)
        : num_classes(k), cells(static_cast<std::size_t>(k) * k, 0) {}

    std::int64_t& at(int actual, int predicted) {
        return cells[static_cast<std::size_t>(actual) * num_classes + predicted];
    }
    std::int64_t at(int actual, int predicted) const {
        return cells[static_cast<std::size_t>(actual) * num_classes + predicted];
    }

    std::int64_t total() const;
    std::int64_t trace() const;
};

/// Rates from one 2x2 table. A metric whose denominator is zero is reported
/// as 0 with its flag set rather than NaN.
struct BinaryRates {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
    bool accuracy_degenerate = false;
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool specificity_degenerate = false;
    bool f1_degenerate = false;
};

struct MetricsReport {
    double accuracy = 0.0;
    bool accuracy_degenerate = false;
    std::vector<BinaryRates> per_class;  // one-vs-rest, class k positive
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double auc = 0.0;        // meaningful only when auc_defined
    bool auc_defined = false;
    ConfusionMatrix confusion;
};

/// Tallies actual vs predicted. Labels outside 0..K-1 throw.
ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          int num_classes);

/// Class 1 is positive: TP = cell(1,1), TN = cell(0,0), FP = cell(0,1),
/// FN = cell(1,0). accuracy (TP+TN)/all, precision TP/(TP+FP), recall
/// TP/(TP+FN), specificity TN/(TN+FP), F1 = 2PR/(P+R).
BinaryRates binary_rates(const ConfusionMatrix& cm);

/// Reduces each class to its one-vs-rest 2x2 table and applies binary_rates;
/// macro metrics are unweighted means over classes (degenerate zeros
/// included); accuracy is trace/total. auc is left undefined (no scores
/// here); callers with score matrices fill it via roc_auc / macro_auc_ovr.
MetricsReport multiclass_report(const ConfusionMatrix& cm);

/// Rank-statistic AUC: [#(s_pos > s_neg) + 0.5 #(s_pos = s_neg)] / (P*N),
/// computed by sorting with exact integer pair accounting. Needs at least
/// one positive and one negative.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& y_true);

/// Unweighted mean over classes k of the one-vs-rest roc_auc using score
/// column k as the positive score. Every class must appear in y_true.
double macro_auc_ovr(const FeatureMatrix& scores, const std::vector<int>& y_true);

/// JSON document with fixed keys accuracy, per_class, macro, auc, confusion.
/// auc serializes as null while undefined. class_names, when given, must
/// have one name per class.
std::string report_to_json(const MetricsReport& report,
                           const std::vector<std::string>& class_names = {});

}  // namespace fundus
