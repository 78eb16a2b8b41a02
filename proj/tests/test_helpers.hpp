#pragma once

#include <string>

#include "milr/dataset.hpp"
#include "milr/model.hpp"
#include "milr/rng.hpp"

namespace test_helpers {

inline milr::Bag make_bag(const std::string& id, int label,
                          const Eigen::MatrixXd& features) {
    milr::Bag bag;
    bag.id = id;
    bag.label = label;
    bag.features = features;
    return bag;
}

// A bag with the given instance probabilities under intercept 0, slope 1:
// feature value logit(p) maps back to probability p.
inline milr::Bag bag_from_probs(const std::vector<double>& probs, int label) {
    Eigen::MatrixXd x(probs.size(), 1);
    for (std::size_t j = 0; j < probs.size(); ++j)
        x(static_cast<Eigen::Index>(j), 0) =
            std::log(probs[j] / (1.0 - probs[j]));
    return make_bag("b", label, x);
}

inline milr::Coefficients identity_coef() {
    milr::Coefficients c;
    c.beta = Eigen::VectorXd::Ones(1);
    return c;
}

// Random bag-labeled data from a MILR truth; handy for property tests.
inline milr::BagDataset random_dataset(milr::Rng& rng, int n, int p,
                                       int max_m, double intercept,
                                       double slope_scale) {
    Eigen::VectorXd beta(p);
    for (int k = 0; k < p; ++k) beta[k] = slope_scale * rng.normal();
    milr::BagDataset ds;
    for (int k = 0; k < p; ++k)
        ds.feature_names.push_back("f" + std::to_string(k + 1));
    for (int i = 0; i < n; ++i) {
        const int m = 1 + static_cast<int>(rng.bounded(max_m));
        milr::Bag bag;
        bag.id = "bag" + std::to_string(i);
        bag.features.resize(m, p);
        int any = 0;
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < p; ++c) bag.features(r, c) = rng.normal();
            const double eta = intercept + bag.features.row(r).dot(beta);
            any |= rng.bernoulli(milr::sigmoid(eta)) ? 1 : 0;
        }
        bag.label = any;
        ds.bags.push_back(std::move(bag));
    }
    return ds;
}

inline milr::Coefficients random_coef(milr::Rng& rng, int p, double scale) {
    milr::Coefficients c;
    c.intercept = scale * rng.normal();
    c.beta.resize(p);
    for (int k = 0; k < p; ++k) c.beta[k] = scale * rng.normal();
    return c;
}

}  // namespace test_helpers
