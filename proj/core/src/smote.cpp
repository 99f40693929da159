#include "fundus/smote.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fundus/rng.hpp"

namespace fundus {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

std::vector<std::size_t> class_members(const std::vector<int>& labels, int class_id) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == class_id) members.push_back(i);
    }
    return members;
}

}  // namespace

std::vector<std::vector<std::size_t>> knn_minority(const FeatureMatrix& X,
                                                   const std::vector<int>& labels,
                                                   int class_id, int k) {
    if (k < 1) throw std::invalid_argument("knn_minority: k must be >= 1");
    if (X.rows != labels.size()) {
        throw std::invalid_argument("knn_minority: rows and labels differ in length");
    }
    const std::vector<std::size_t> members = class_members(labels, class_id);
    if (members.size() < 2) {
        throw std::runtime_error("knn_minority: class " + std::to_string(class_id) + " has " +
                                 std::to_string(members.size()) + " member(s), need at least 2");
    }

    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                 members.size() - 1);
    std::vector<std::vector<std::size_t>> table(members.size());
    std::vector<std::pair<double, std::size_t>> dists;
    for (std::size_t m = 0; m < members.size(); ++m) {
        dists.clear();
        for (const std::size_t other : members) {
            if (other == members[m]) continue;
            dists.emplace_back(sq_dist(X.row(members[m]), X.row(other), X.cols), other);
        }
        // Pair ordering breaks distance ties toward the lower index.
        std::partial_sort(dists.begin(), dists.begin() + kk, dists.end());
        table[m].reserve(kk);
        for (std::size_t j = 0; j < kk; ++j) table[m].push_back(dists[j].second);
    }
    return table;
}

std::vector<double> synthesize(const std::vector<double>& x, const std::vector<double>& x_nn,
                               double lambda) {
    if (x.size() != x_nn.size()) {
        throw std::invalid_argument("synthesize: dimension mismatch");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("synthesize: lambda must be in [0,1]");
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] + lambda * (x_nn[i] - x[i]);
    }
    return out;
}

SmoteResult smote(const FeatureMatrix& X, const std::vector<int>& labels,
                  const SmoteParams& params) {
    if (params.k < 1) throw std::invalid_argument("smote: k must be >= 1");
    if (X.rows != labels.size()) {
        throw std::invalid_argument("smote: rows and labels differ in length");
    }

    std::size_t num_classes = params.targets.size();
    if (num_classes == 0) {
        for (const int label : labels) {
            num_classes = std::max(num_classes, static_cast<std::size_t>(label) + 1);
        }
    }
    std::vector<std::size_t> counts(num_classes, 0);
    for (const int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
            throw std::invalid_argument("smote: label " + std::to_string(label) +
                                        " outside target table");
        }
        counts[static_cast<std::size_t>(label)]++;
    }

    std::vector<std::size_t> targets = params.targets;
    if (targets.empty()) {
        const std::size_t majority = *std::max_element(counts.begin(), counts.end());
        targets.assign(num_classes, majority);
        // Absent classes cannot be balanced up; leave them absent.
        for (std::size_t c = 0; c < num_classes; ++c) {
            if (counts[c] == 0) targets[c] = 0;
        }
    }

    std::size_t total = X.rows;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (targets[c] < counts[c]) {
            throw std::runtime_error("smote: target " + std::to_string(targets[c]) +
                                     " for class " + std::to_string(c) +
                                     " is below current count " + std::to_string(counts[c]));
        }
        total += targets[c] - counts[c];
    }

    SmoteResult result;
    result.features = FeatureMatrix(total, X.cols);
    std::copy(X.data.begin(), X.data.end(), result.features.data.begin());
    result.labels = labels;
    result.labels.reserve(total);

    std::size_t out_row = X.rows;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t deficit = targets[c] - counts[c];
        if (deficit == 0) continue;
        if (counts[c] < 2) {
            throw std::runtime_error("smote: class " + std::to_string(c) + " has " +
                                     std::to_string(counts[c]) +
                                     " member(s), need at least 2 to synthesize");
        }

        const int class_id = static_cast<int>(c);
        const auto table = knn_minority(X, labels, class_id, params.k);
        std::vector<std::size_t> order = class_members(labels, class_id);
        std::vector<std::size_t> member_pos(X.rows, 0);
        for (std::size_t m = 0; m < order.size(); ++m) member_pos[order[m]] = m;

        Rng rng(derive_seed(params.seed, c));
        rng.shuffle(order.begin(), order.end());

        for (std::size_t j = 0; j < deficit; ++j) {
            const std::size_t base = order[j % order.size()];
            const auto& neighbors = table[member_pos[base]];
            const std::size_t neighbor = neighbors[rng.next_below(neighbors.size())];
            const double lambda = rng.next_double();

            const double* xb = X.row(base);
            const double* xn = X.row(neighbor);
            double* out = result.features.row(out_row);
            for (std::size_t i = 0; i < X.cols; ++i) {
                out[i] = xb[i] + lambda * (xn[i] - xb[i]);
            }
            result.labels.push_back(class_id);
            result.provenance.push_back({base, neighbor, lambda});
            ++out_row;
        }
    }
    return result;
}

void save_provenance(const std::vector<SmoteProvenance>& provenance, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "base,neighbor,lambda\n";
    char buf[48];
    for (const auto& p : provenance) {
        std::snprintf(buf, sizeof buf, "%.17g", p.lambda);
        out << p.base << ',' << p.neighbor << ',' << buf << '\n';
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

std::vector<SmoteProvenance> load_provenance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || (line != "base,neighbor,lambda" &&
                                    line != "base,neighbor,lambda\r")) {
        throw std::runtime_error(path + ": bad header, expected base,neighbor,lambda");
    }
    std::vector<SmoteProvenance> provenance;
    for (int line_no = 2; std::getline(in, line); ++line_no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        SmoteProvenance p;
        char extra;
        if (std::sscanf(line.c_str(), "%zu,%zu,%lg%c", &p.base, &p.neighbor, &p.lambda,
                        &extra) != 3) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed row");
        }
        provenance.push_back(p);
    }
    return provenance;
}

}  // namespace fundus
