#pragma once

#include "milr/dataset.hpp"
#include "milr/em.hpp"

namespace milr {

/// Naive comparison fit: ordinary logistic regression on instances after
/// copying each bag label to all of its instances, solved by IRLS. On
/// separation the fit stops at max_em_iter with converged = false and a
/// warning. Also serves as the oracle for fit_milr when every m_i = 1.
FitResult fit_naive(const BagDataset& ds, const FitConfig& cfg = {});

/// sum_i [z_i log S_i(alpha) + (1-z_i) log(1 - S_i(alpha))] with S clamped
/// into [clip, 1-clip] so the value stays finite for extreme coefficients.
double softmax_loglik(const Coefficients& coef, const BagDataset& ds,
                      double alpha, double clip = 1e-5);

/// Softmax-link MILR: maximizes softmax_loglik by gradient ascent with a
/// backtracking line search. Stops when the gradient max-norm drops below
/// cfg.tol or after cfg.max_em_iter accepted steps. objective_trace records
/// -loglik at every accepted iterate (never increasing).
FitResult fit_softmax_milr(const BagDataset& ds, double alpha,
                           const FitConfig& cfg = {});

}  // namespace milr
