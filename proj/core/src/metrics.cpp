#include "fundus/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace fundus {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(cells.begin(), cells.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t sum = 0;
    for (int k = 0; k < num_classes; ++k) sum += at(k, k);
    return sum;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          int num_classes) {
    if (y_true.size() != y_pred.size()) {
        throw std::invalid_argument("confusion: label vectors differ in length");
    }
    if (num_classes < 1) throw std::invalid_argument("confusion: num_classes must be >= 1");
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= num_classes || y_pred[i] < 0 ||
            y_pred[i] >= num_classes) {
            throw std::invalid_argument("confusion: label out of range at sample " +
                                        std::to_string(i));
        }
        cm.at(y_true[i], y_pred[i])++;
    }
    return cm;
}

namespace {

double ratio(std::int64_t num, std::int64_t den, bool& degenerate) {
    if (den == 0) {
        degenerate = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

BinaryRates binary_rates(const ConfusionMatrix& cm) {
    if (cm.num_classes != 2) throw std::invalid_argument("binary_rates: matrix must be 2x2");
    const std::int64_t tp = cm.at(1, 1);
    const std::int64_t tn = cm.at(0, 0);
    const std::int64_t fp = cm.at(0, 1);
    const std::int64_t fn = cm.at(1, 0);

    BinaryRates r;
    r.accuracy = ratio(tp + tn, tp + tn + fp + fn, r.accuracy_degenerate);
    r.precision = ratio(tp, tp + fp, r.precision_degenerate);
    r.recall = ratio(tp, tp + fn, r.recall_degenerate);
    r.specificity = ratio(tn, tn + fp, r.specificity_degenerate);
    const double pr_sum = r.precision + r.recall;
    if (pr_sum == 0.0) {
        r.f1_degenerate = true;
    } else {
        r.f1 = 2.0 * r.precision * r.recall / pr_sum;
    }
    return r;
}

MetricsReport multiclass_report(const ConfusionMatrix& cm) {
    if (cm.num_classes < 2) {
        throw std::invalid_argument("multiclass_report: need at least 2 classes");
    }
    const std::int64_t total = cm.total();

    MetricsReport report;
    report.confusion = cm;
    report.accuracy = ratio(cm.trace(), total, report.accuracy_degenerate);

    for (int k = 0; k < cm.num_classes; ++k) {
        std::int64_t row = 0, col = 0;
        for (int j = 0; j < cm.num_classes; ++j) {
            row += cm.at(k, j);
            col += cm.at(j, k);
        }
        const std::int64_t tp = cm.at(k, k);
        ConfusionMatrix ovr(2);
        ovr.at(1, 1) = tp;
        ovr.at(1, 0) = row - tp;
        ovr.at(0, 1) = col - tp;
        ovr.at(0, 0) = total - row - col + tp;
        report.per_class.push_back(binary_rates(ovr));
    }

    for (const auto& rates : report.per_class) {
        report.macro_precision += rates.precision;
        report.macro_recall += rates.recall;
        report.macro_f1 += rates.f1;
    }
    report.macro_precision /= cm.num_classes;
    report.macro_recall /= cm.num_classes;
    report.macro_f1 /= cm.num_classes;
    return report;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& y_true) {
    if (scores.size() != y_true.size()) {
        throw std::invalid_argument("roc_auc: scores and labels differ in length");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // 2x the pair statistic stays integral: each strictly ranked pair adds 2,
    // each tied pair adds 1.
    std::uint64_t twice_wins = 0;
    std::uint64_t pos_total = 0, neg_total = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::uint64_t pos_here = 0, neg_here = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (y_true[order[j]] == 1) {
                ++pos_here;
            } else if (y_true[order[j]] == 0) {
                ++neg_here;
            } else {
                throw std::invalid_argument("roc_auc: labels must be 0 or 1");
            }
            ++j;
        }
        twice_wins += 2 * pos_here * neg_total + pos_here * neg_here;
        pos_total += pos_here;
        neg_total += neg_here;
        i = j;
    }
    if (pos_total == 0 || neg_total == 0) {
        throw std::runtime_error("roc_auc: need at least one positive and one negative");
    }
    return static_cast<double>(twice_wins) /
           (2.0 * static_cast<double>(pos_total) * static_cast<double>(neg_total));
}

double macro_auc_ovr(const FeatureMatrix& scores, const std::vector<int>& y_true) {
    if (scores.rows != y_true.size()) {
        throw std::invalid_argument("macro_auc_ovr: rows and labels differ in length");
    }
    if (scores.cols < 2) throw std::invalid_argument("macro_auc_ovr: need at least 2 classes");

    double sum = 0.0;
    for (std::size_t k = 0; k < scores.cols; ++k) {
        std::vector<double> col(scores.rows);
        std::vector<int> is_k(scores.rows);
        std::size_t members = 0;
        for (std::size_t i = 0; i < scores.rows; ++i) {
            col[i] = scores.at(i, k);
            is_k[i] = y_true[i] == static_cast<int>(k) ? 1 : 0;
            members += is_k[i];
        }
        if (members == 0) {
            throw std::runtime_error("macro_auc_ovr: class " + std::to_string(k) +
                                     " missing from y_true");
        }
        sum += roc_auc(col, is_k);
    }
    return sum / static_cast<double>(scores.cols);
}

std::string report_to_json(const MetricsReport& report,
                           const std::vector<std::string>& class_names) {
    const int k = report.confusion.num_classes;
    if (!class_names.empty() && static_cast<int>(class_names.size()) != k) {
        throw std::invalid_argument("report_to_json: class name count mismatch");
    }

    nlohmann::ordered_json doc;
    doc["accuracy"] = report.accuracy;

    doc["per_class"] = nlohmann::ordered_json::array();
    for (int c = 0; c < k; ++c) {
        const auto& rates = report.per_class[static_cast<std::size_t>(c)];
        nlohmann::ordered_json entry;
        entry["name"] = class_names.empty() ? "class_" + std::to_string(c) : class_names[c];
        entry["precision"] = rates.precision;
        entry["recall"] = rates.recall;
        entry["specificity"] = rates.specificity;
        entry["f1"] = rates.f1;
        auto degenerate = nlohmann::ordered_json::array();
        if (rates.precision_degenerate) degenerate.push_back("precision");
        if (rates.recall_degenerate) degenerate.push_back("recall");
        if (rates.specificity_degenerate) degenerate.push_back("specificity");
        if (rates.f1_degenerate) degenerate.push_back("f1");
        entry["degenerate"] = degenerate;
        doc["per_class"].push_back(entry);
    }

    doc["macro"] = {{"precision", report.macro_precision},
                    {"recall", report.macro_recall},
                    {"f1", report.macro_f1}};
    if (report.auc_defined) {
        doc["auc"] = report.auc;
    } else {
        doc["auc"] = nullptr;
    }

    doc["confusion"] = nlohmann::ordered_json::array();
    for (int i = 0; i < k; ++i) {
        auto row = nlohmann::ordered_json::array();
        for (int j = 0; j < k; ++j) row.push_back(report.confusion.at(i, j));
        doc["confusion"].push_back(row);
    }
    return doc.dump(2) + "\n";
}

}  // namespace fundus
