#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "milr/dataset.hpp"
#include "milr/model.hpp"

namespace milr {

struct FitConfig {
    int max_em_iter = 500;
    double tol = 1e-6;        // max absolute coefficient change
    double clip = 1e-5;       // probability clip for the working quantities
    int max_cd_sweeps = 1;    // inner coordinate sweeps per M-step
};

struct FitResult {
    Coefficients coef;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    double deviance = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> objective_trace;  // penalized -loglik per iterate
    int objective_increases = 0;          // logged, not asserted
    bool failed = false;                  // path bookkeeping
    std::string error;
};

struct LambdaPath {
    std::vector<double> lambdas;  // strictly descending
    std::vector<FitResult> fits;
};

/// E-step weights for one bag: E(Y_ij | Z_i) at the current coefficients.
/// Zero for negative bags; p_ij / (1 - prod_l (1-p_il)) for positive ones,
/// with the denominator in log space. Exactly 1 when m_i = 1.
Eigen::VectorXd gamma_weights(const Coefficients& coef, const Bag& bag);

/// z_i * gamma_ij stacked over all instances in dataset order.
Eigen::VectorXd estep_targets(const BagDataset& ds, const Coefficients& coef);

/// The EM surrogate at fixed targets t_ij = z_i gamma_ij^t:
/// Q = sum_ij [ t_ij eta_ij - log(1 + exp(eta_ij)) ].
double q_objective(const BagDataset& ds, const Coefficients& coef,
                   const Eigen::VectorXd& targets);

/// Gradient of q_objective; slot 0 is the intercept.
Eigen::VectorXd q_gradient(const BagDataset& ds, const Coefficients& coef,
                           const Eigen::VectorXd& targets);

struct WorkingSet {
    Eigen::VectorXd u;  // working response per instance
    Eigen::VectorXd w;  // curvature weight per instance
};

/// Linearization of Q at coef: u = eta + (z gamma - p)/(p q), w = p q,
/// with the clip rule applied first: p > 1-clip -> p := 1, w := clip;
/// p < clip -> p := 0, w := clip.
WorkingSet working_quantities(const Coefficients& coef, const BagDataset& ds,
                              const FitConfig& cfg);

/// Soft-threshold coordinate update: (S -+ lambda)/denom outside the dead
/// zone, 0 when |S| <= lambda. lambda = 0 reduces to S/denom.
double soft_threshold_update(double s, double lambda, double denom);

/// EM fit: exact E-step, one (configurable) coordinate-descent sweep over the
/// quadratic M-step per iteration, soft-thresholding the slopes; intercept is
/// never penalized. Stops when the largest coefficient change drops below
/// cfg.tol.
FitResult fit_milr(const BagDataset& ds, double lambda,
                   const FitConfig& cfg = {},
                   const std::optional<Coefficients>& init = std::nullopt);

/// Closed-form penalty bound [sum_i (m_i-1)]^(1/2) [sum_i m_i^(1-2 z_i)]^(1/2);
/// valid under the sum x^2 = N - n standardization. All slopes stay zero for
/// lambda >= lambda_max when fitting from the null start. When every bag has
/// a single instance the bound degenerates to 0 and the standard logistic
/// bound max_k |sum_ij x_ijk (z_i - zbar)| is used instead (with a warning).
double lambda_max(const BagDataset& ds);

/// K log-uniform values descending from lmax to eps*lmax, endpoints exact.
std::vector<double> lambda_grid(double lmax, double eps = 1e-3, int count = 20);

/// Fits the grid in descending order; the first entry starts from the null
/// model and every subsequent entry warm-starts from the previous solution.
/// A failed entry is recorded and the path continues.
LambdaPath fit_path(const BagDataset& ds, const std::vector<double>& grid,
                    const FitConfig& cfg = {});

/// Max violation of the subgradient conditions of the quadratic subproblem
/// built at coef: for beta_k = 0, max(0, |S_k| - lambda); otherwise
/// |S_k - lambda sign(beta_k) - beta_k denom_k|.
double kkt_residual(const BagDataset& ds, const Coefficients& coef,
                    double lambda, const FitConfig& cfg = {});

/// Default start: slopes zero, intercept at log(pibar/(1-pibar)) with pibar
/// the mean bag label (clamped away from 0/1).
Coefficients null_start(const BagDataset& ds);

}  // namespace milr
