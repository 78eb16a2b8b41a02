#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace milr {

/// One bag: a binary bag label and an m x p matrix of instance features.
/// latent_labels is filled by the simulator for audit only; it is never
/// consulted by any fitter.
struct Bag {
    std::string id;
    int label = 0;  // z in {0,1}
    Eigen::MatrixXd features;
    std::vector<int> latent_labels;

    int size() const { return static_cast<int>(features.rows()); }
};

struct BagDataset {
    std::vector<Bag> bags;
    std::vector<std::string> feature_names;
    bool standardized = false;
    bool labels_present = true;

    int n() const { return static_cast<int>(bags.size()); }
    int p() const {
        return bags.empty() ? static_cast<int>(feature_names.size())
                            : static_cast<int>(bags.front().features.cols());
    }
    long total_instances() const {
        long total = 0;
        for (const auto& b : bags) total += b.size();
        return total;
    }
    int positive_bags() const {
        int c = 0;
        for (const auto& b : bags) c += b.label;
        return c;
    }
};

/// Column means and scales. The inverse transform (x * scale + mean)
/// recovers the raw features to round-off.
struct StandardizationStats {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;
    std::vector<int> constant_columns;  // flagged, scale pinned to 1
    bool centered_only = false;         // N == n degenerate case
};

struct FoldAssignment {
    std::vector<int> fold_of_bag;
    int folds = 0;
    bool stratified = true;
    std::uint64_t seed = 0;
};

struct CsvSchema {
    std::string bag_id_column = "bag_id";
    std::string label_column = "label";
};

/// Reads `bag_id,label,<f1>,...,<fp>` CSV; rows are grouped by bag_id in
/// first-appearance order. When the label column is missing from the header
/// the dataset is loaded unlabeled (all labels 0, labels_present = false).
BagDataset load_csv(const std::string& path, const CsvSchema& schema = {});

void write_csv(const BagDataset& ds, const std::string& path);

/// Centers every column to mean zero over all N instances and rescales so the
/// column sum of squares is exactly N - n. That target (rather than unit
/// variance) is what makes the closed-form lambda_max below exact.
/// Constant columns are centered, get scale 1, and are flagged. When N == n
/// no rescaling is possible; columns are centered only, with a warning.
std::pair<BagDataset, StandardizationStats> standardize(const BagDataset& ds);

/// Applies existing stats (e.g. training-fold stats to a held-out fold).
BagDataset apply_standardization(const BagDataset& ds,
                                 const StandardizationStats& stats);

/// Inverse of apply_standardization.
BagDataset invert_standardization(const BagDataset& ds,
                                  const StandardizationStats& stats);

/// Splits bags (never instances) into k folds, stratified by bag label and
/// deterministic in the seed. Falls back to an unstratified split with a
/// warning when k exceeds the size of either class.
FoldAssignment stratified_kfold(const BagDataset& ds, int k,
                                std::uint64_t seed);

/// Subset of a dataset by bag index; standardized flag is reset so fold-local
/// standardization can be applied.
BagDataset subset_bags(const BagDataset& ds, const std::vector<int>& indices);

}  // namespace milr
