#include <doctest.h>

#include <cmath>

#include "milr/model.hpp"
#include "milr/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace milr;
using test_helpers::bag_from_probs;
using test_helpers::identity_coef;

TEST_CASE("instance_prob basics and stability") {
    Coefficients zero;
    zero.beta = Eigen::VectorXd::Zero(3);
    Eigen::RowVectorXd x(3);
    x << 0.3, -4.0, 100.0;
    CHECK(instance_prob(zero, x) == doctest::Approx(0.5));

    Coefficients c;
    c.intercept = -2.0;
    c.beta.resize(3);
    c.beta << 1.0, -1.0, 0.0;
    Eigen::RowVectorXd x2(3);
    x2 << 1.0, 1.0, 0.0;
    CHECK(instance_prob(c, x2) == doctest::Approx(0.11920292202211755).epsilon(1e-10));

    Coefficients big;
    big.intercept = -1000.0;
    big.beta = Eigen::VectorXd::Zero(1);
    Eigen::RowVectorXd x3(1);
    x3 << 0.0;
    const double prob = instance_prob(big, x3);
    CHECK(prob > 0.0);
    CHECK(prob < 1e-300);
}

TEST_CASE("bag_prob matches direct products") {
    CHECK(bag_prob(identity_coef(), bag_from_probs({0.1, 0.2}, 1)) ==
          doctest::Approx(0.28).epsilon(1e-12));
    CHECK(bag_prob(identity_coef(), bag_from_probs({0.37}, 1)) ==
          doctest::Approx(0.37).epsilon(1e-12));
    CHECK(bag_prob(identity_coef(), bag_from_probs({0.5, 0.5, 0.5}, 1)) ==
          doctest::Approx(0.875).epsilon(1e-12));
}

TEST_CASE("bag_prob is monotone in each instance probability") {
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> probs(1 + rng.bounded(5));
        for (auto& p : probs) p = 0.05 + 0.9 * rng.uniform01();
        const double base = bag_prob(identity_coef(), bag_from_probs(probs, 1));
        const std::size_t j = rng.bounded(probs.size());
        probs[j] = std::min(0.999, probs[j] + 0.05);
        const double bumped = bag_prob(identity_coef(), bag_from_probs(probs, 1));
        CHECK(bumped >= base);
    }
}

TEST_CASE("log_likelihood and deviance") {
    BagDataset ds;
    ds.feature_names = {"f1"};
    ds.bags.push_back(bag_from_probs({0.5}, 1));
    CHECK(log_likelihood(identity_coef(), ds) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(deviance(identity_coef(), ds) ==
          doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));

    BagDataset neg;
    neg.feature_names = {"f1"};
    neg.bags.push_back(bag_from_probs({0.28}, 0));
    CHECK(log_likelihood(identity_coef(), neg) ==
          doctest::Approx(std::log(0.72)).epsilon(1e-12));

    // Additivity: two identical bags double the deviance.
    BagDataset two = ds;
    two.bags.push_back(ds.bags[0]);
    CHECK(deviance(identity_coef(), two) ==
          doctest::Approx(2.0 * deviance(identity_coef(), ds)).epsilon(1e-12));
}

TEST_CASE("deviance of a clipped perfect fit is near zero") {
    BagDataset ds;
    ds.feature_names = {"f1"};
    ds.bags.push_back(bag_from_probs({0.9999999}, 1));
    ds.bags.push_back(bag_from_probs({1e-9}, 0));
    CHECK(deviance(identity_coef(), ds, 1e-5) ==
          doctest::Approx(0.0).epsilon(1e-3));
    CHECK(deviance(identity_coef(), ds, 1e-5) > 0.0);
}

TEST_CASE("log_likelihood reduces to instance logistic when all m=1") {
    Rng rng(13);
    BagDataset ds = test_helpers::random_dataset(rng, 40, 3, 1, 0.2, 0.8);
    const Coefficients coef = test_helpers::random_coef(rng, 3, 0.5);
    double expected = 0.0;
    for (const auto& bag : ds.bags) {
        const double p = instance_prob(coef, bag.features.row(0));
        expected += bag.label == 1 ? std::log(p) : std::log1p(-p);
    }
    CHECK(log_likelihood(coef, ds) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("predict_bag uses a non-strict threshold") {
    CHECK(predict_bag(identity_coef(), bag_from_probs({0.5}, 1)) == 1);
    CHECK(predict_bag(identity_coef(), bag_from_probs({0.4999}, 1)) == 0);
    Coefficients zero;
    zero.beta = Eigen::VectorXd::Zero(2);
    Bag bag = test_helpers::make_bag("b", 1, Eigen::MatrixXd::Random(1, 2));
    CHECK(predict_bag(zero, bag) == 1);  // pi = 0.5 exactly
    CHECK_THROWS_AS(predict_bag(zero, bag, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(predict_bag(zero, bag, 0.0), std::invalid_argument);
}

TEST_CASE("auc handles separation, ties, and errors") {
    CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) ==
          doctest::Approx(1.0));
    CHECK(auc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) ==
          doctest::Approx(0.5));
    CHECK(auc(std::vector<double>{0.2, 0.8, 0.6}, std::vector<int>{1, 0, 1}) ==
          doctest::Approx(0.0));
    CHECK_THROWS_AS(auc(std::vector<double>{0.2, 0.8}, std::vector<int>{1, 1}),
                    std::runtime_error);
}

TEST_CASE("auc equals the all-pairs oracle on random inputs") {
    Rng rng(17);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 3 + static_cast<int>(rng.bounded(40));
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            // Coarse grid forces plenty of ties.
            scores[i] = std::floor(rng.uniform01() * 8.0) / 8.0;
            labels[i] = rng.bernoulli(0.5) ? 1 : 0;
            pos += labels[i];
        }
        if (pos == 0 || pos == n) continue;
        CHECK(std::abs(auc(scores, labels) -
                       oracle::auc_bruteforce(scores, labels)) < 1e-12);
    }
}

TEST_CASE("accuracy") {
    CHECK(accuracy(std::vector<int>{1, 0}, std::vector<int>{1, 0}) ==
          doctest::Approx(1.0));
    CHECK(accuracy(std::vector<int>{1, 1}, std::vector<int>{1, 0}) ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}),
                    std::invalid_argument);
}

TEST_CASE("softmax_bag_score limits") {
    CHECK(softmax_bag_score(identity_coef(), bag_from_probs({0.2, 0.4}, 1), 0.0) ==
          doctest::Approx(0.3).epsilon(1e-12));
    CHECK(softmax_bag_score(identity_coef(), bag_from_probs({0.2, 0.9}, 1), 200.0) ==
          doctest::Approx(0.9).epsilon(1e-6));
    CHECK(softmax_bag_score(identity_coef(), bag_from_probs({0.5, 0.5}, 1), 3.0) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(
        softmax_bag_score(identity_coef(), bag_from_probs({0.5}, 1), -1.0),
        std::invalid_argument);
}

TEST_CASE("link ordering chain holds on random bags") {
    // geometric mean <= S(0) <= S(alpha) <= max p <= pi, alpha > 0
    Rng rng(19);
    for (int rep = 0; rep < 100; ++rep) {
        const int m = 1 + static_cast<int>(rng.bounded(6));
        std::vector<double> probs(m);
        double geo = 0.0, pmax = 0.0;
        for (int j = 0; j < m; ++j) {
            probs[j] = 0.02 + 0.96 * rng.uniform01();
            geo += std::log(probs[j]);
            pmax = std::max(pmax, probs[j]);
        }
        geo = std::exp(geo / m);
        const Bag bag = bag_from_probs(probs, 1);
        const double alpha = 0.5 + 4.0 * rng.uniform01();
        const double s0 = softmax_bag_score(identity_coef(), bag, 0.0);
        const double sa = softmax_bag_score(identity_coef(), bag, alpha);
        const double pi = bag_prob(identity_coef(), bag);
        const double tol = 1e-9;
        CHECK(geo <= s0 + tol);
        CHECK(s0 <= sa + tol);
        CHECK(sa <= pmax + tol);
        CHECK(pmax <= pi + tol);
    }
}
