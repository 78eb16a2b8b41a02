#include "milr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "milr/rng.hpp"

namespace milr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, long row, const std::string& col) {
    const std::string t = strip(field);
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::runtime_error("non-numeric value '" + field + "' in column " +
                                 col + " at data row " + std::to_string(row));
    }
    return value;
}

}  // namespace

BagDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string header;
    if (!std::getline(in, header)) {
        throw std::runtime_error("empty file: " + path);
    }
    // Strip a UTF-8 BOM if present.
    if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        header.erase(0, 3);
    }
    auto cols = split_line(header);
    for (auto& c : cols) c = strip(c);

    int id_col = -1, label_col = -1;
    for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
        if (cols[i] == schema.bag_id_column) id_col = i;
        if (cols[i] == schema.label_column) label_col = i;
    }
    if (id_col < 0) {
        throw std::runtime_error("missing column '" + schema.bag_id_column +
                                 "' in " + path);
    }
    const bool labels_present = label_col >= 0;

    std::vector<int> feature_cols;
    std::vector<std::string> feature_names;
    for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
        if (i == id_col || i == label_col) continue;
        feature_cols.push_back(i);
        feature_names.push_back(cols[i]);
    }
    if (feature_cols.empty()) {
        throw std::runtime_error("no feature columns in " + path);
    }
    const int p = static_cast<int>(feature_cols.size());

    struct Raw {
        int label = 0;
        std::vector<double> values;  // row-major m x p
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Raw> groups;

    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (strip(line).empty()) continue;
        auto fields = split_line(line);
        if (static_cast<int>(fields.size()) != static_cast<int>(cols.size())) {
            throw std::runtime_error("row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) +
                                     " fields, expected " +
                                     std::to_string(cols.size()));
        }
        const std::string id = strip(fields[id_col]);
        int label = 0;
        if (labels_present) {
            const double lv = parse_double(fields[label_col], row, schema.label_column);
            if (lv != 0.0 && lv != 1.0) {
                throw std::runtime_error("bag label must be 0 or 1 at data row " +
                                         std::to_string(row));
            }
            label = static_cast<int>(lv);
        }
        auto [it, inserted] = groups.try_emplace(id);
        if (inserted) {
            order.push_back(id);
            it->second.label = label;
        } else if (labels_present && it->second.label != label) {
            throw std::runtime_error("inconsistent bag label for bag '" + id +
                                     "' at data row " + std::to_string(row));
        }
        for (int j = 0; j < p; ++j) {
            it->second.values.push_back(
                parse_double(fields[feature_cols[j]], row, feature_names[j]));
        }
    }
    if (order.empty()) throw std::runtime_error("no data rows in " + path);

    BagDataset ds;
    ds.feature_names = feature_names;
    ds.labels_present = labels_present;
    ds.bags.reserve(order.size());
    for (const auto& id : order) {
        const Raw& raw = groups[id];
        Bag bag;
        bag.id = id;
        bag.label = raw.label;
        const int m = static_cast<int>(raw.values.size()) / p;
        bag.features.resize(m, p);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < p; ++j)
                bag.features(i, j) = raw.values[static_cast<size_t>(i) * p + j];
        ds.bags.push_back(std::move(bag));
    }
    return ds;
}

void write_csv(const BagDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "bag_id";
    if (ds.labels_present) out << ",label";
    for (const auto& name : ds.feature_names) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (const auto& bag : ds.bags) {
        for (int i = 0; i < bag.size(); ++i) {
            out << bag.id;
            if (ds.labels_present) out << ',' << bag.label;
            for (int j = 0; j < bag.features.cols(); ++j)
                out << ',' << bag.features(i, j);
            out << '\n';
        }
    }
}

std::pair<BagDataset, StandardizationStats> standardize(const BagDataset& ds) {
    if (ds.standardized) {
        throw std::invalid_argument("dataset is already standardized");
    }
    if (ds.n() < 1) throw std::invalid_argument("empty dataset");
    const int p = ds.p();
    const long N = ds.total_instances();
    const long n = ds.n();

    StandardizationStats stats;
    stats.means = Eigen::VectorXd::Zero(p);
    stats.scales = Eigen::VectorXd::Ones(p);

    for (const auto& bag : ds.bags)
        stats.means += bag.features.colwise().sum().transpose();
    stats.means /= static_cast<double>(N);

    Eigen::VectorXd ssq = Eigen::VectorXd::Zero(p);
    for (const auto& bag : ds.bags) {
        ssq += (bag.features.rowwise() - stats.means.transpose())
                   .array()
                   .square()
                   .colwise()
                   .sum()
                   .matrix()
                   .transpose();
    }

    if (N == n) {
        std::cerr << "warning: every bag has a single instance (N == n); "
                     "standardizing by centering only\n";
        stats.centered_only = true;
        for (int k = 0; k < p; ++k)
            if (ssq[k] == 0.0) stats.constant_columns.push_back(k);
    } else {
        const double target = static_cast<double>(N - n);
        for (int k = 0; k < p; ++k) {
            if (ssq[k] == 0.0) {
                stats.constant_columns.push_back(k);
                stats.scales[k] = 1.0;
            } else {
                stats.scales[k] = std::sqrt(ssq[k] / target);
            }
        }
    }

    BagDataset out = apply_standardization(ds, stats);
    return {std::move(out), std::move(stats)};
}

BagDataset apply_standardization(const BagDataset& ds,
                                 const StandardizationStats& stats) {
    if (stats.means.size() != ds.p()) {
        throw std::invalid_argument("standardization stats dimension mismatch");
    }
    BagDataset out = ds;
    for (auto& bag : out.bags) {
        bag.features.rowwise() -= stats.means.transpose();
        bag.features.array().rowwise() /=
            stats.scales.transpose().array();
    }
    out.standardized = true;
    return out;
}

BagDataset invert_standardization(const BagDataset& ds,
                                  const StandardizationStats& stats) {
    if (stats.means.size() != ds.p()) {
        throw std::invalid_argument("standardization stats dimension mismatch");
    }
    BagDataset out = ds;
    for (auto& bag : out.bags) {
        bag.features.array().rowwise() *= stats.scales.transpose().array();
        bag.features.rowwise() += stats.means.transpose();
    }
    out.standardized = false;
    return out;
}

FoldAssignment stratified_kfold(const BagDataset& ds, int k,
                                std::uint64_t seed) {
    const int n = ds.n();
    if (k < 2) throw std::invalid_argument("fold count must be at least 2");
    if (k > n) {
        throw std::invalid_argument("fold count " + std::to_string(k) +
                                    " exceeds bag count " + std::to_string(n));
    }
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i)
        (ds.bags[i].label == 1 ? pos : neg).push_back(i);

    FoldAssignment fa;
    fa.folds = k;
    fa.seed = seed;
    fa.fold_of_bag.assign(n, 0);

    Rng rng(splitmix64(seed));
    const int minority = static_cast<int>(std::min(pos.size(), neg.size()));
    if (minority < k && !pos.empty() && !neg.empty()) {
        std::cerr << "warning: cannot stratify " << k << " folds with "
                  << pos.size() << " positive / " << neg.size()
                  << " negative bags; using an unstratified split\n";
        fa.stratified = false;
    } else if (pos.empty() || neg.empty()) {
        fa.stratified = false;
    }

    if (fa.stratified) {
        rng.shuffle(pos);
        rng.shuffle(neg);
        for (std::size_t i = 0; i < pos.size(); ++i)
            fa.fold_of_bag[pos[i]] = static_cast<int>(i % k);
        // Offset keeps the total fold sizes within one bag of each other.
        const std::size_t offset = pos.size();
        for (std::size_t i = 0; i < neg.size(); ++i)
            fa.fold_of_bag[neg[i]] = static_cast<int>((offset + i) % k);
    } else {
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        rng.shuffle(all);
        for (std::size_t i = 0; i < all.size(); ++i)
            fa.fold_of_bag[all[i]] = static_cast<int>(i % k);
    }
    return fa;
}

BagDataset subset_bags(const BagDataset& ds, const std::vector<int>& indices) {
    BagDataset out;
    out.feature_names = ds.feature_names;
    out.labels_present = ds.labels_present;
    out.standardized = false;
    out.bags.reserve(indices.size());
    for (int i : indices) out.bags.push_back(ds.bags.at(static_cast<size_t>(i)));
    return out;
}

}  // namespace milr
