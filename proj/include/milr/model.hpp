#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>

#include "milr/dataset.hpp"

namespace milr {

struct Coefficients {
    double intercept = 0.0;
    Eigen::VectorXd beta;

    int nonzero_count() const {
        int c = 0;
        for (Eigen::Index k = 0; k < beta.size(); ++k)
            if (beta[k] != 0.0) ++c;
        return c;
    }
};

struct Metrics {
    double acc = 0.0;
    double auc = 0.0;
};

/// 1/(1+exp(-x)), sign-split so it never overflows.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow; log(1-sigmoid(x)) == -log1pexp(x).
inline double log1pexp(double x) {
    if (x <= -37.0) return std::exp(x);
    if (x <= 18.0) return std::log1p(std::exp(x));
    if (x <= 33.3) return x + std::exp(-x);
    return x;
}

/// log(1 - exp(a)) for a <= 0.
inline double log1mexp(double a) {
    if (a >= 0.0) return -std::numeric_limits<double>::infinity();
    if (a > -M_LN2) return std::log(-std::expm1(a));
    return std::log1p(-std::exp(a));
}

inline double linear_predictor(const Coefficients& coef,
                               const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return coef.intercept + x.dot(coef.beta);
}

/// p(beta0 + x'beta) for a single instance.
double instance_prob(const Coefficients& coef,
                     const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// sum_j log(1 - p_ij); the log complement of the bag probability.
double bag_log_complement(const Coefficients& coef, const Bag& bag);

/// pi = 1 - prod_j (1 - p_ij), accumulated in log space.
double bag_prob(const Coefficients& coef, const Bag& bag);

/// sum_i [z_i log pi_i + (1-z_i) log(1-pi_i)]. With clip > 0 each pi is
/// clamped into [clip, 1-clip] first (used for held-out deviance so a single
/// saturated bag cannot produce an infinite fold score).
double log_likelihood(const Coefficients& coef, const BagDataset& ds,
                      double clip = 0.0);

/// -2 * log_likelihood.
double deviance(const Coefficients& coef, const BagDataset& ds,
                double clip = 0.0);

/// I(bag_prob >= threshold); the inequality is deliberately non-strict.
int predict_bag(const Coefficients& coef, const Bag& bag,
                double threshold = 0.5);

/// Mann-Whitney AUC, ties counted 1/2. Throws when labels are single-class.
double auc(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Softmax-weighted mean of instance probabilities:
/// S(alpha) = sum_j p_j exp(alpha p_j) / sum_j exp(alpha p_j).
/// alpha = 0 is the arithmetic mean; large alpha approaches max_j p_j.
double softmax_bag_score(const Coefficients& coef, const Bag& bag,
                         double alpha);

}  // namespace milr
