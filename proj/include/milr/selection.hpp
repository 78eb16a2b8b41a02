#pragma once

#include <cstdint>
#include <vector>

#include "milr/dataset.hpp"
#include "milr/em.hpp"

namespace milr {

struct CVReport {
    std::vector<double> lambdas;
    std::vector<double> mean_deviance;
    std::vector<double> se_deviance;    // standard error across folds
    Eigen::MatrixXd fold_deviances;     // folds x |lambdas|
    std::vector<char> valid;            // lambda usable for selection
    double chosen_lambda = 0.0;
    bool boundary_minimum = false;      // minimum sits at the smallest lambda
    int folds = 0;
    std::uint64_t seed = 0;
};

/// k-fold cross-validated deviance over a fixed lambda grid. One fold
/// assignment is shared by every lambda so the per-lambda deviances are
/// comparable. Each training fold is restandardized internally and its stats
/// applied to the held-out fold, so no held-out information reaches the fit.
/// Held-out deviance uses cfg.clip to stay finite. Fold fits that fail mark
/// their (lambda, fold) cell invalid; any lambda with an invalid cell is
/// excluded from selection with a warning.
CVReport cross_validate(const BagDataset& ds, const std::vector<double>& grid,
                        int folds, std::uint64_t seed,
                        const FitConfig& cfg = {}, int jobs = 1);

/// argmin of mean deviance; ties break toward the larger lambda.
double select_lambda_cv(const CVReport& report);

/// BIC = deviance + df log(n) with df = 1 + #nonzero slopes and n = bags.
double bic(const FitResult& fit, const BagDataset& ds);

/// Lambda minimizing BIC over an already fitted path (single fit, no CV);
/// ties break toward the larger lambda.
double select_lambda_bic(const LambdaPath& path, const BagDataset& ds);

}  // namespace milr
