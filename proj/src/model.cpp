#include "milr/model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace milr {

double instance_prob(const Coefficients& coef,
                     const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return sigmoid(linear_predictor(coef, x));
}

double bag_log_complement(const Coefficients& coef, const Bag& bag) {
    if (bag.size() < 1) throw std::invalid_argument("empty bag");
    const Eigen::VectorXd eta =
        (bag.features * coef.beta).array() + coef.intercept;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < eta.size(); ++j) sum -= log1pexp(eta[j]);
    return sum;
}

double bag_prob(const Coefficients& coef, const Bag& bag) {
    return -std::expm1(bag_log_complement(coef, bag));
}

double log_likelihood(const Coefficients& coef, const BagDataset& ds,
                      double clip) {
    if (ds.n() < 1) throw std::invalid_argument("empty dataset");
    double ll = 0.0;
    for (const auto& bag : ds.bags) {
        const double log_q = bag_log_complement(coef, bag);  // log(1 - pi)
        if (clip > 0.0) {
            const double pi =
                std::clamp(-std::expm1(log_q), clip, 1.0 - clip);
            ll += bag.label == 1 ? std::log(pi) : std::log1p(-pi);
        } else {
            ll += bag.label == 1 ? log1mexp(log_q) : log_q;
        }
    }
    return ll;
}

double deviance(const Coefficients& coef, const BagDataset& ds, double clip) {
    return -2.0 * log_likelihood(coef, ds, clip);
}

int predict_bag(const Coefficients& coef, const Bag& bag, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("threshold must lie in (0, 1)");
    }
    return bag_prob(coef, bag) >= threshold ? 1 : 0;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw std::invalid_argument("scores and labels must have equal size");
    }
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int z : labels) n_pos += static_cast<std::size_t>(z == 1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw std::runtime_error("AUC undefined for single-class labels");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    // Midranks over tie groups; ties contribute 1/2 per positive-negative pair.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        i = j + 1;
    }
    const double u = rank_sum_pos -
                     0.5 * static_cast<double>(n_pos) *
                         static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw std::invalid_argument("predictions and labels must have equal, nonzero size");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        hits += static_cast<std::size_t>(predictions[i] == labels[i]);
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double softmax_bag_score(const Coefficients& coef, const Bag& bag,
                         double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    if (bag.size() < 1) throw std::invalid_argument("empty bag");
    const Eigen::VectorXd eta =
        (bag.features * coef.beta).array() + coef.intercept;
    Eigen::VectorXd probs(eta.size());
    for (Eigen::Index j = 0; j < eta.size(); ++j) probs[j] = sigmoid(eta[j]);
    const double shift = alpha * probs.maxCoeff();
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < probs.size(); ++j) {
        const double wj = std::exp(alpha * probs[j] - shift);
        num += probs[j] * wj;
        den += wj;
    }
    return num / den;
}

}  // namespace milr
