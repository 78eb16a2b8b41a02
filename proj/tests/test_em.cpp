#include <doctest.h>

#include <cmath>

#include "milr/baselines.hpp"
#include "milr/em.hpp"
#include "milr/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace milr;
using test_helpers::bag_from_probs;
using test_helpers::identity_coef;

TEST_CASE("gamma_weights on hand-computed bags") {
    // m=2, p=(0.5,0.5): gamma = 0.5 / (1 - 0.25) = 2/3.
    Eigen::VectorXd g =
        gamma_weights(identity_coef(), bag_from_probs({0.5, 0.5}, 1));
    CHECK(g[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    // Single instance: certainty.
    g = gamma_weights(identity_coef(), bag_from_probs({0.0001}, 1));
    CHECK(g[0] == 1.0);

    // m=2, p=(0.3,0.6): gamma_1 = 0.3 / 0.72.
    g = gamma_weights(identity_coef(), bag_from_probs({0.3, 0.6}, 1));
    CHECK(g[0] == doctest::Approx(0.3 / 0.72).epsilon(1e-12));
    // Enumeration over label configurations consistent with Z=1:
    // P(Y1=1 | Z=1) = (0.12 + 0.18) / 0.72.
    CHECK(g[0] == doctest::Approx((0.12 + 0.18) / 0.72).epsilon(1e-12));

    // Negative bag: all zeros.
    g = gamma_weights(identity_coef(), bag_from_probs({0.3, 0.6}, 0));
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gamma_weights matches brute-force enumeration") {
    Rng rng(101);
    for (int rep = 0; rep < 300; ++rep) {
        const int m = 1 + static_cast<int>(rng.bounded(10));
        std::vector<double> probs(m);
        Eigen::VectorXd pvec(m);
        for (int j = 0; j < m; ++j) {
            probs[j] = sigmoid(3.0 * rng.normal());
            pvec[j] = probs[j];
        }
        const Eigen::VectorXd expected = oracle::gamma_bruteforce(pvec);
        const Eigen::VectorXd actual =
            gamma_weights(identity_coef(), bag_from_probs(probs, 1));
        CHECK((actual - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("gamma dominates p and obeys the working-residual bound") {
    Rng rng(103);
    for (int rep = 0; rep < 200; ++rep) {
        const int m = 2 + static_cast<int>(rng.bounded(6));
        std::vector<double> probs(m);
        for (int j = 0; j < m; ++j) probs[j] = 0.01 + 0.98 * rng.uniform01();
        const Bag bag = bag_from_probs(probs, 1);
        const Eigen::VectorXd g = gamma_weights(identity_coef(), bag);
        for (int j = 0; j < m; ++j) {
            CHECK(g[j] > probs[j]);  // strict for m >= 2, p in (0,1)
            CHECK(g[j] <= 1.0);
            // |z gamma - p| <= 1/m for positive bags.
            CHECK(std::abs(g[j] - probs[j]) <= 1.0 / m + 1e-12);
        }
        // Negative bags: |0 - p| <= 1 trivially, checked for completeness.
        const Eigen::VectorXd g0 =
            gamma_weights(identity_coef(), bag_from_probs(probs, 0));
        for (int j = 0; j < m; ++j)
            CHECK(std::abs(g0[j] - probs[j]) <= 1.0);
    }
}

TEST_CASE("working_quantities at the null coefficients") {
    FitConfig cfg;
    Coefficients zero;
    zero.beta = Eigen::VectorXd::Zero(1);

    BagDataset pos;
    pos.feature_names = {"f1"};
    pos.bags.push_back(test_helpers::make_bag("a", 1, Eigen::MatrixXd::Zero(1, 1)));
    WorkingSet ws = working_quantities(zero, pos, cfg);
    CHECK(ws.u[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ws.w[0] == doctest::Approx(0.25).epsilon(1e-12));

    BagDataset neg = pos;
    neg.bags[0].label = 0;
    ws = working_quantities(zero, neg, cfg);
    CHECK(ws.u[0] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(ws.w[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("working_quantities applies the clip rule") {
    FitConfig cfg;
    BagDataset ds;
    ds.feature_names = {"f1"};
    ds.bags.push_back(bag_from_probs({1.0 - 1e-7}, 1));
    const WorkingSet ws = working_quantities(identity_coef(), ds, cfg);
    // p clipped to 1, w forced to the clip constant; gamma = 1 for m = 1,
    // so the working response collapses to the linear predictor.
    CHECK(ws.w[0] == doctest::Approx(1e-5));
    const double eta = std::log((1.0 - 1e-7) / 1e-7);
    CHECK(ws.u[0] == doctest::Approx(eta).epsilon(1e-9));

    BagDataset low;
    low.feature_names = {"f1"};
    low.bags.push_back(bag_from_probs({1e-7}, 0));
    const WorkingSet ws2 = working_quantities(identity_coef(), low, cfg);
    CHECK(ws2.w[0] == doctest::Approx(1e-5));
    // p clipped to 0 in a negative bag: u = eta exactly.
    CHECK(ws2.u[0] == doctest::Approx(std::log(1e-7 / (1.0 - 1e-7))).epsilon(1e-9));
}

TEST_CASE("soft_threshold_update") {
    CHECK(soft_threshold_update(5.0, 2.0, 1.0) == doctest::Approx(3.0));
    CHECK(soft_threshold_update(-5.0, 2.0, 1.0) == doctest::Approx(-3.0));
    CHECK(soft_threshold_update(1.5, 2.0, 1.0) == 0.0);
    CHECK(soft_threshold_update(-2.0, 2.0, 1.0) == 0.0);  // boundary in dead zone
    CHECK(soft_threshold_update(4.0, 0.0, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(soft_threshold_update(1.0, 1.0, 0.0), std::runtime_error);
    CHECK_THROWS_AS(soft_threshold_update(1.0, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("Q gradient matches central finite differences") {
    Rng rng(107);
    const BagDataset ds = test_helpers::random_dataset(rng, 15, 3, 4, -0.5, 0.7);
    for (int rep = 0; rep < 20; ++rep) {
        const Coefficients at = test_helpers::random_coef(rng, 3, 0.6);
        const Eigen::VectorXd targets = estep_targets(ds, at);
        const Coefficients probe = test_helpers::random_coef(rng, 3, 0.6);
        const Eigen::VectorXd grad = q_gradient(ds, probe, targets);
        auto f = [&](const Coefficients& c) {
            return q_objective(ds, c, targets);
        };
        for (int k = 0; k <= 3; ++k) {
            const double fd = oracle::central_difference(f, probe, k, 1e-5);
            CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("fit_milr at lambda 0 with m=1 matches the IRLS oracle") {
    Rng rng(109);
    FitConfig tight;
    tight.tol = 1e-10;
    tight.max_em_iter = 20000;
    for (int rep = 0; rep < 3; ++rep) {
        const BagDataset ds =
            test_helpers::random_dataset(rng, 150, 4, 1, -0.3, 0.6);
        const FitResult em = fit_milr(ds, 0.0, tight);
        FitConfig irls_cfg;
        irls_cfg.tol = 1e-12;
        const FitResult irls = fit_naive(ds, irls_cfg);
        REQUIRE(em.converged);
        REQUIRE(irls.converged);
        CHECK(std::abs(em.coef.intercept - irls.coef.intercept) < 1e-6);
        CHECK((em.coef.beta - irls.coef.beta).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("lambda_max closed form") {
    // n=2, m=(3,3), z=(1,0): sqrt(4) * sqrt(1/3 + 3).
    BagDataset ds;
    ds.feature_names = {"f1"};
    ds.standardized = true;  // exercise the formula, not the warning
    ds.bags.push_back(test_helpers::make_bag("a", 1, Eigen::MatrixXd::Zero(3, 1)));
    ds.bags.push_back(test_helpers::make_bag("b", 0, Eigen::MatrixXd::Zero(3, 1)));
    CHECK(lambda_max(ds) ==
          doctest::Approx(2.0 * std::sqrt(10.0 / 3.0)).epsilon(1e-12));

    BagDataset single;
    single.feature_names = {"f1"};
    single.standardized = true;
    single.bags.push_back(test_helpers::make_bag("a", 1, Eigen::MatrixXd::Zero(3, 1)));
    CHECK(lambda_max(single) ==
          doctest::Approx(std::sqrt(2.0) * std::sqrt(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("lambda_max falls back for single-instance bags") {
    Rng rng(113);
    BagDataset ds = test_helpers::random_dataset(rng, 30, 2, 1, 0.0, 1.0);
    auto [std_ds, stats] = standardize(ds);
    const double lmax = lambda_max(std_ds);
    CHECK(lmax > 0.0);
    // Fallback equals the instance-level null score bound.
    const double zbar =
        static_cast<double>(std_ds.positive_bags()) / std_ds.n();
    Eigen::VectorXd score = Eigen::VectorXd::Zero(2);
    for (const auto& bag : std_ds.bags)
        score += (bag.label - zbar) * bag.features.row(0).transpose();
    CHECK(lmax == doctest::Approx(score.cwiseAbs().maxCoeff()).epsilon(1e-12));
}

TEST_CASE("lambda_grid spacing") {
    const auto g = lambda_grid(10.0, 0.1, 3);
    REQUIRE(g.size() == 3);
    CHECK(g[0] == doctest::Approx(10.0));
    CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g[2] == doctest::Approx(0.1));

    const auto g20 = lambda_grid(5.0);
    REQUIRE(g20.size() == 20);
    CHECK(g20.front() == 5.0);
    CHECK(g20.back() == doctest::Approx(0.005));
    const double ratio = std::pow(1e-3, 1.0 / 19.0);
    for (std::size_t i = 1; i < g20.size(); ++i)
        CHECK(g20[i] / g20[i - 1] == doctest::Approx(ratio).epsilon(1e-9));
    CHECK_THROWS_AS(lambda_grid(0.0), std::invalid_argument);
    CHECK_THROWS_AS(lambda_grid(1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(lambda_grid(1.0, 0.1, 1), std::invalid_argument);
}

TEST_CASE("fit at lambda_max keeps all slopes at zero") {
    Rng rng(127);
    for (int rep = 0; rep < 5; ++rep) {
        BagDataset raw = test_helpers::random_dataset(rng, 40, 4, 4, -1.0, 0.8);
        auto [ds, stats] = standardize(raw);
        const double lmax = lambda_max(ds);
        const FitResult fit = fit_milr(ds, lmax, FitConfig{});
        CHECK(fit.coef.nonzero_count() == 0);
        CHECK(fit.converged);
    }
}

TEST_CASE("fit_path warm starts and matches cold restarts") {
    Rng rng(131);
    BagDataset raw = test_helpers::random_dataset(rng, 50, 5, 3, -1.0, 1.0);
    auto [ds, stats] = standardize(raw);
    const double lmax = lambda_max(ds);

    const LambdaPath single = fit_path(ds, {lmax}, FitConfig{});
    CHECK(single.fits[0].coef.nonzero_count() == 0);

    const auto grid = lambda_grid(lmax, 0.01, 8);
    const LambdaPath path = fit_path(ds, grid, FitConfig{});
    REQUIRE(path.fits.size() == grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        REQUIRE_FALSE(path.fits[j].failed);
        CHECK(path.fits[j].lambda == grid[j]);
    }
    // Warm vs cold: same deviance within 1e-4 at the smallest lambda.
    const FitResult cold = fit_milr(ds, grid.back(), FitConfig{});
    CHECK(path.fits.back().deviance ==
          doctest::Approx(cold.deviance).epsilon(1e-4));
}

TEST_CASE("KKT certificate holds at converged penalized solutions") {
    Rng rng(137);
    for (int rep = 0; rep < 5; ++rep) {
        BagDataset raw = test_helpers::random_dataset(rng, 40, 6, 3, -0.8, 0.9);
        auto [ds, stats] = standardize(raw);
        const double lmax = lambda_max(ds);
        for (double frac : {0.5, 0.1, 0.02}) {
            const FitResult fit = fit_milr(ds, frac * lmax, FitConfig{});
            if (!fit.converged) continue;
            CHECK(kkt_residual(ds, fit.coef, fit.lambda) < 1e-4 * lmax);
        }
    }
}

TEST_CASE("likelihood at the unpenalized solution beats the null start") {
    Rng rng(139);
    BagDataset ds = test_helpers::random_dataset(rng, 60, 3, 3, -1.0, 0.8);
    const Coefficients start = null_start(ds);
    const FitResult fit = fit_milr(ds, 0.0, FitConfig{});
    CHECK(log_likelihood(fit.coef, ds) >= log_likelihood(start, ds));
    // Deviance field is the recomputed observed-data deviance.
    CHECK(fit.deviance == doctest::Approx(deviance(fit.coef, ds)).epsilon(1e-12));
}

TEST_CASE("fit_milr propagates dimension errors and rejects bad config") {
    Rng rng(149);
    BagDataset ds = test_helpers::random_dataset(rng, 10, 2, 2, 0.0, 1.0);
    Coefficients bad;
    bad.beta = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(fit_milr(ds, 0.0, FitConfig{}, bad), std::invalid_argument);
    FitConfig cfg;
    cfg.tol = 0.0;
    CHECK_THROWS_AS(fit_milr(ds, 0.0, cfg), std::invalid_argument);
    cfg = FitConfig{};
    cfg.clip = 0.7;
    CHECK_THROWS_AS(fit_milr(ds, 0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_milr(ds, -1.0, FitConfig{}), std::invalid_argument);
}
