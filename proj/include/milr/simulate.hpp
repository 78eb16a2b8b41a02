#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "milr/dataset.hpp"
#include "milr/em.hpp"

namespace milr {

struct BagSizeRule {
    enum class Kind { Fixed, PoissonPlusOne };
    Kind kind = Kind::Fixed;
    double value = 3.0;  // fixed size, or the Poisson mean before the +1
};

/// A fully resolved generator configuration. Named schemes are built by
/// make_scheme; all fields can also be set directly for custom designs.
struct SimScheme {
    std::string name;
    int n = 100;
    int p = 3;
    BagSizeRule bag_size;
    double intercept = 0.0;
    Eigen::VectorXd coef;                 // explicit coefficient vector
    bool shuffle_support = false;         // re-place support_values per replicate
    std::vector<double> support_values;   // used when shuffle_support is set
    std::uint64_t seed = 0;
};

/// Named designs:
///   table1: n=100, m=3, p=3, intercept -2, slopes (1,-1,0)
///   A:      n=100, m=3, p=100, slopes {-2,-1,1,2,0.5} at fresh random
///           positions per replicate, the remaining 95 zero
///   D:      n=100, m=5 fixed, p=166, fixed sparse surrogate slopes
///   E:      n=100, m ~ Poisson(4)+1, p=166, same surrogate
///   F:      n=100, m ~ Poisson(64)+1, p=166, same surrogate
/// D/E/F share one surrogate vector (9 nonzero entries from {+-2,+-1,+-0.5}
/// drawn once from a fixed internal seed); their intercepts are pinned so the
/// bag-positive rates land near 1/2 for D/E and near 0.18 for F.
SimScheme make_scheme(const std::string& name, std::uint64_t seed);

struct SimDataset {
    BagDataset data;
    Coefficients truth;
    int regenerations = 0;  // label-degenerate draws that were retried
};

/// Standard-normal covariates, latent labels y ~ Bernoulli(p(eta)), bag label
/// z = I(sum y > 0). Latent labels are stored on the bags for audit.
/// Deterministic in (scheme.seed, replicate). Replicates whose bag labels
/// come out all equal are regenerated with an incremented sub-seed.
SimDataset gen_dataset(const SimScheme& scheme, std::uint64_t replicate);

struct EstimationSummary {
    std::vector<std::string> coef_names;  // beta0, beta1, ...
    Eigen::VectorXd truth;
    Eigen::VectorXd milr_mean, milr_sd, milr_se;
    Eigen::VectorXd naive_mean, naive_sd, naive_se;
    int replicates = 0;
    int excluded = 0;  // non-converged replicates dropped from the averages
};

/// Table-1-style experiment: B replicates of the table1 design, fit by
/// fit_naive and by fit_milr at lambda = 0; reports per-coefficient means,
/// SDs, and standard errors of the mean.
EstimationSummary run_estimation_experiment(int B, std::uint64_t seed,
                                            const FitConfig& cfg = {},
                                            int jobs = 1);

struct SelectionRates {
    double tp = 0, fp = 0, tn = 0, fn = 0;
    int replicates = 0;
};

struct LambdaRule {
    enum class Kind { CV, BIC, FixedFraction };
    Kind kind = Kind::CV;
    double fraction = 1.0;  // of lambda_max, for FixedFraction
};

/// Table-2-style experiment on scheme A: per replicate, fit the lambda path,
/// pick lambda by the rule, and score the support of the selected model
/// against the true support. Rates are averaged over replicates.
SelectionRates run_selection_experiment(int B, std::uint64_t seed,
                                        const LambdaRule& rule,
                                        const FitConfig& cfg = {},
                                        int jobs = 1);

struct MethodOutcome {
    std::string method;
    double acc_mean = 0, acc_se = 0;
    double auc_mean = 0, auc_se = 0;
    int failures = 0;
};

/// Table-3-style comparison: per replicate, 10-fold stratified CV predictions
/// from MILR-LASSO with BIC- and CV-chosen lambda and from the softmax fits
/// s(3) and s(0). Every method is thresholded through the bag probability at
/// 0.5; AUC uses the bag probability as the score.
std::vector<MethodOutcome> run_comparison_experiment(const SimScheme& scheme,
                                                     int B, std::uint64_t seed,
                                                     const FitConfig& cfg = {},
                                                     int jobs = 1);

}  // namespace milr
