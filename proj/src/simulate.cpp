#include "milr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "milr/baselines.hpp"
#include "milr/model.hpp"
#include "milr/parallel.hpp"
#include "milr/rng.hpp"
#include "milr/selection.hpp"

namespace milr {

namespace {

// Fixed draw for the shared D/E/F truth: 9 of 166 slopes nonzero with values
// from {+-0.5, +-1, +-2}, mimicking a sparse fitted model on MUSK-sized data.
constexpr std::uint64_t kSurrogateSeed = 0x5EEDBA5EULL;

// Intercepts pinning the bag-positive rates of the named designs: about one
// half for D/E (MUSK1-like balance) and about 0.18 for F, whose large bags
// otherwise saturate the bag probability.
constexpr double kInterceptDE = -5.0;
constexpr double kInterceptF = -15.5;
constexpr double kInterceptA = 0.0;

Eigen::VectorXd surrogate_slopes(int p, int nonzero) {
    Rng rng(kSurrogateSeed);
    std::vector<int> idx(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) idx[static_cast<size_t>(i)] = i;
    rng.shuffle(idx);
    const double magnitudes[3] = {0.5, 1.0, 2.0};
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < nonzero; ++j) {
        const double mag = magnitudes[rng.bounded(3)];
        beta[idx[static_cast<size_t>(j)]] = rng.bernoulli(0.5) ? mag : -mag;
    }
    return beta;
}

std::string bag_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "bag_%04d", i);
    return buf;
}

double sd_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0));
}

}  // namespace

SimScheme make_scheme(const std::string& name, std::uint64_t seed) {
    SimScheme s;
    s.name = name;
    s.seed = seed;
    if (name == "table1" || name == "TABLE1") {
        s.name = "table1";
        s.n = 100;
        s.p = 3;
        s.bag_size = {BagSizeRule::Kind::Fixed, 3.0};
        s.intercept = -2.0;
        s.coef.resize(3);
        s.coef << 1.0, -1.0, 0.0;
    } else if (name == "A") {
        s.n = 100;
        s.p = 100;
        s.bag_size = {BagSizeRule::Kind::Fixed, 3.0};
        s.intercept = kInterceptA;
        s.coef = Eigen::VectorXd::Zero(100);
        s.shuffle_support = true;
        s.support_values = {-2.0, -1.0, 1.0, 2.0, 0.5};
    } else if (name == "D") {
        s.n = 100;
        s.p = 166;
        s.bag_size = {BagSizeRule::Kind::Fixed, 5.0};
        s.intercept = kInterceptDE;
        s.coef = surrogate_slopes(166, 9);
    } else if (name == "E") {
        s.n = 100;
        s.p = 166;
        s.bag_size = {BagSizeRule::Kind::PoissonPlusOne, 4.0};
        s.intercept = kInterceptDE;
        s.coef = surrogate_slopes(166, 9);
    } else if (name == "F") {
        s.n = 100;
        s.p = 166;
        s.bag_size = {BagSizeRule::Kind::PoissonPlusOne, 64.0};
        s.intercept = kInterceptF;
        s.coef = surrogate_slopes(166, 9);
    } else {
        throw std::invalid_argument("unknown scheme: " + name);
    }
    return s;
}

SimDataset gen_dataset(const SimScheme& scheme, std::uint64_t replicate) {
    if (scheme.n < 1 || scheme.p < 1) {
        throw std::invalid_argument("scheme must have n >= 1 and p >= 1");
    }
    SimDataset out;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Rng rng(derive_seed(scheme.seed, replicate) +
                static_cast<std::uint64_t>(attempt));

        Coefficients truth;
        truth.intercept = scheme.intercept;
        if (scheme.shuffle_support) {
            truth.beta = Eigen::VectorXd::Zero(scheme.p);
            std::vector<int> idx(static_cast<size_t>(scheme.p));
            for (int i = 0; i < scheme.p; ++i) idx[static_cast<size_t>(i)] = i;
            rng.shuffle(idx);
            for (std::size_t j = 0; j < scheme.support_values.size(); ++j)
                truth.beta[idx[j]] = scheme.support_values[j];
        } else {
            if (scheme.coef.size() != scheme.p) {
                throw std::invalid_argument("scheme coefficient length mismatch");
            }
            truth.beta = scheme.coef;
        }

        BagDataset ds;
        ds.labels_present = true;
        ds.feature_names.resize(static_cast<size_t>(scheme.p));
        for (int j = 0; j < scheme.p; ++j)
            ds.feature_names[static_cast<size_t>(j)] = "f" + std::to_string(j + 1);
        ds.bags.reserve(static_cast<size_t>(scheme.n));

        int positives = 0;
        for (int i = 0; i < scheme.n; ++i) {
            int m;
            if (scheme.bag_size.kind == BagSizeRule::Kind::Fixed) {
                m = static_cast<int>(scheme.bag_size.value);
            } else {
                m = 1 + rng.poisson(scheme.bag_size.value);
            }
            Bag bag;
            bag.id = bag_name(i);
            bag.features.resize(m, scheme.p);
            bag.latent_labels.resize(static_cast<size_t>(m));
            int any = 0;
            for (int r = 0; r < m; ++r) {
                for (int c = 0; c < scheme.p; ++c)
                    bag.features(r, c) = rng.normal();
                const double eta =
                    truth.intercept + bag.features.row(r).dot(truth.beta);
                const int y = rng.bernoulli(sigmoid(eta)) ? 1 : 0;
                bag.latent_labels[static_cast<size_t>(r)] = y;
                any |= y;
            }
            bag.label = any;
            positives += any;
            ds.bags.push_back(std::move(bag));
        }

        if (positives == 0 || positives == scheme.n) {
            ++out.regenerations;
            continue;
        }
        out.data = std::move(ds);
        out.truth = std::move(truth);
        return out;
    }
    throw std::runtime_error(
        "gen_dataset: could not draw a dataset with both bag labels "
        "(scheme " + scheme.name + ")");
}

EstimationSummary run_estimation_experiment(int B, std::uint64_t seed,
                                            const FitConfig& cfg, int jobs) {
    if (B < 2) throw std::invalid_argument("need at least 2 replicates");
    const SimScheme scheme = make_scheme("table1", seed);
    const int dim = scheme.p + 1;

    struct Row {
        Eigen::VectorXd milr, naive;
        bool ok = false;
    };
    std::vector<Row> rows(static_cast<size_t>(B));

    parallel_for(jobs, B, [&](int b) {
        const SimDataset sim =
            gen_dataset(scheme, static_cast<std::uint64_t>(b));
        const FitResult milr_fit = fit_milr(sim.data, 0.0, cfg);
        const FitResult naive_fit = fit_naive(sim.data, cfg);
        Row& row = rows[static_cast<size_t>(b)];
        row.ok = milr_fit.converged && naive_fit.converged;
        row.milr.resize(dim);
        row.milr[0] = milr_fit.coef.intercept;
        row.milr.tail(scheme.p) = milr_fit.coef.beta;
        row.naive.resize(dim);
        row.naive[0] = naive_fit.coef.intercept;
        row.naive.tail(scheme.p) = naive_fit.coef.beta;
    });

    EstimationSummary s;
    s.coef_names.push_back("beta0");
    for (int k = 1; k <= scheme.p; ++k)
        s.coef_names.push_back("beta" + std::to_string(k));
    s.truth.resize(dim);
    s.truth[0] = scheme.intercept;
    s.truth.tail(scheme.p) = scheme.coef;
    s.milr_mean.setZero(dim);
    s.milr_sd.setZero(dim);
    s.milr_se.setZero(dim);
    s.naive_mean.setZero(dim);
    s.naive_sd.setZero(dim);
    s.naive_se.setZero(dim);

    for (int k = 0; k < dim; ++k) {
        std::vector<double> mv, nv;
        for (const Row& row : rows) {
            if (!row.ok) continue;
            mv.push_back(row.milr[k]);
            nv.push_back(row.naive[k]);
        }
        if (mv.empty()) throw std::runtime_error("all replicates failed to converge");
        s.replicates = static_cast<int>(mv.size());
        s.excluded = B - s.replicates;
        const double mm =
            std::accumulate(mv.begin(), mv.end(), 0.0) / mv.size();
        const double nm =
            std::accumulate(nv.begin(), nv.end(), 0.0) / nv.size();
        s.milr_mean[k] = mm;
        s.naive_mean[k] = nm;
        s.milr_sd[k] = sd_of(mv, mm);
        s.naive_sd[k] = sd_of(nv, nm);
        s.milr_se[k] = s.milr_sd[k] / std::sqrt(static_cast<double>(mv.size()));
        s.naive_se[k] = s.naive_sd[k] / std::sqrt(static_cast<double>(nv.size()));
    }
    return s;
}

SelectionRates run_selection_experiment(int B, std::uint64_t seed,
                                        const LambdaRule& rule,
                                        const FitConfig& cfg, int jobs) {
    if (B < 1) throw std::invalid_argument("need at least 1 replicate");
    const SimScheme scheme = make_scheme("A", seed);

    struct Row {
        double tp = 0, fp = 0;
    };
    std::vector<Row> rows(static_cast<size_t>(B));

    parallel_for(jobs, B, [&](int b) {
        const SimDataset sim =
            gen_dataset(scheme, static_cast<std::uint64_t>(b));
        auto [std_ds, stats] = standardize(sim.data);
        const double lmax = lambda_max(std_ds);
        const std::vector<double> grid = lambda_grid(lmax);

        double lambda;
        Coefficients coef;
        if (rule.kind == LambdaRule::Kind::FixedFraction) {
            lambda = rule.fraction * lmax;
            coef = fit_milr(std_ds, lambda, cfg).coef;
        } else {
            const LambdaPath path = fit_path(std_ds, grid, cfg);
            if (rule.kind == LambdaRule::Kind::BIC) {
                lambda = select_lambda_bic(path, std_ds);
            } else {
                const CVReport report = cross_validate(
                    sim.data, grid, 10, derive_seed(seed, 1000003 + b), cfg);
                lambda = report.chosen_lambda;
            }
            const auto it =
                std::find(grid.begin(), grid.end(), lambda);
            coef = path.fits[static_cast<size_t>(it - grid.begin())].coef;
        }

        int active_hit = 0, inactive_hit = 0, active_total = 0;
        for (int k = 0; k < scheme.p; ++k) {
            const bool active = sim.truth.beta[k] != 0.0;
            const bool selected = coef.beta[k] != 0.0;
            active_total += active;
            if (active && selected) ++active_hit;
            if (!active && selected) ++inactive_hit;
        }
        rows[static_cast<size_t>(b)].tp =
            static_cast<double>(active_hit) / active_total;
        rows[static_cast<size_t>(b)].fp =
            static_cast<double>(inactive_hit) / (scheme.p - active_total);
    });

    SelectionRates rates;
    rates.replicates = B;
    for (const Row& row : rows) {
        rates.tp += row.tp;
        rates.fp += row.fp;
    }
    rates.tp /= B;
    rates.fp /= B;
    rates.tn = 1.0 - rates.fp;
    rates.fn = 1.0 - rates.tp;
    return rates;
}

std::vector<MethodOutcome> run_comparison_experiment(const SimScheme& scheme,
                                                     int B, std::uint64_t seed,
                                                     const FitConfig& cfg,
                                                     int jobs) {
    if (B < 1) throw std::invalid_argument("need at least 1 replicate");
    constexpr int kMethods = 4;
    const char* names[kMethods] = {"MILR-LASSO(BIC)", "MILR-LASSO(CV)",
                                   "MILR-s(3)", "MILR-s(0)"};
    const double alphas[2] = {3.0, 0.0};

    struct Row {
        double acc[kMethods] = {};
        double auc[kMethods] = {};
        bool ok[kMethods] = {};
    };
    std::vector<Row> rows(static_cast<size_t>(B));

    // Softmax fits are unpenalized first-order ascents; give them room.
    FitConfig softmax_cfg = cfg;
    softmax_cfg.max_em_iter = std::max(cfg.max_em_iter, 1500);
    softmax_cfg.tol = std::max(cfg.tol, 1e-6);

    parallel_for(jobs, B, [&](int b) {
        const SimDataset sim =
            gen_dataset(scheme, static_cast<std::uint64_t>(b));
        const BagDataset& ds = sim.data;
        const int n = ds.n();
        const FoldAssignment fa =
            stratified_kfold(ds, 10, derive_seed(seed, 2000003 + b));

        std::vector<std::vector<double>> scores(
            kMethods, std::vector<double>(static_cast<size_t>(n), 0.0));
        std::vector<std::vector<int>> preds(
            kMethods, std::vector<int>(static_cast<size_t>(n), 0));
        bool method_ok[kMethods] = {true, true, true, true};

        for (int f = 0; f < 10; ++f) {
            std::vector<int> train_idx, test_idx;
            for (int i = 0; i < n; ++i)
                (fa.fold_of_bag[static_cast<size_t>(i)] == f ? test_idx
                                                             : train_idx)
                    .push_back(i);
            const BagDataset train_raw = subset_bags(ds, train_idx);
            auto [train, stats] = standardize(train_raw);
            const BagDataset heldout =
                apply_standardization(subset_bags(ds, test_idx), stats);

            Coefficients fitted[kMethods];
            bool have[kMethods] = {};

            try {
                const double lmax = lambda_max(train);
                const std::vector<double> grid = lambda_grid(lmax);
                const LambdaPath path = fit_path(train, grid, cfg);

                try {
                    const double lb = select_lambda_bic(path, train);
                    const auto it = std::find(grid.begin(), grid.end(), lb);
                    fitted[0] = path.fits[static_cast<size_t>(it - grid.begin())].coef;
                    have[0] = true;
                } catch (const std::exception&) {
                }
                try {
                    const CVReport rep = cross_validate(
                        train_raw, grid, 10,
                        derive_seed(seed, 3000017 + 100 * b + f), cfg);
                    const auto it =
                        std::find(grid.begin(), grid.end(), rep.chosen_lambda);
                    fitted[1] = path.fits[static_cast<size_t>(it - grid.begin())].coef;
                    have[1] = true;
                } catch (const std::exception&) {
                }
            } catch (const std::exception&) {
            }
            for (int a = 0; a < 2; ++a) {
                try {
                    fitted[2 + a] =
                        fit_softmax_milr(train, alphas[a], softmax_cfg).coef;
                    have[2 + a] = true;
                } catch (const std::exception&) {
                }
            }

            for (int mth = 0; mth < kMethods; ++mth) {
                if (!have[mth]) {
                    method_ok[mth] = false;
                    continue;
                }
                for (std::size_t t = 0; t < test_idx.size(); ++t) {
                    const Bag& bag = heldout.bags[t];
                    const double pi = bag_prob(fitted[mth], bag);
                    const int i = test_idx[t];
                    scores[static_cast<size_t>(mth)][static_cast<size_t>(i)] = pi;
                    preds[static_cast<size_t>(mth)][static_cast<size_t>(i)] =
                        pi >= 0.5 ? 1 : 0;
                }
            }
        }

        std::vector<int> labels(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = ds.bags[static_cast<size_t>(i)].label;
        Row& row = rows[static_cast<size_t>(b)];
        for (int mth = 0; mth < kMethods; ++mth) {
            if (!method_ok[mth]) continue;
            row.acc[mth] = accuracy(preds[static_cast<size_t>(mth)], labels);
            row.auc[mth] = auc(scores[static_cast<size_t>(mth)], labels);
            row.ok[mth] = true;
        }
    });

    std::vector<MethodOutcome> out;
    for (int mth = 0; mth < kMethods; ++mth) {
        MethodOutcome mo;
        mo.method = names[mth];
        std::vector<double> accs, aucs;
        for (const Row& row : rows) {
            if (!row.ok[mth]) {
                ++mo.failures;
                continue;
            }
            accs.push_back(row.acc[mth]);
            aucs.push_back(row.auc[mth]);
        }
        if (!accs.empty()) {
            mo.acc_mean =
                std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
            mo.auc_mean =
                std::accumulate(aucs.begin(), aucs.end(), 0.0) / aucs.size();
            mo.acc_se = sd_of(accs, mo.acc_mean) /
                        std::sqrt(static_cast<double>(accs.size()));
            mo.auc_se = sd_of(aucs, mo.auc_mean) /
                        std::sqrt(static_cast<double>(aucs.size()));
        }
        out.push_back(std::move(mo));
    }
    return out;
}

}  // namespace milr
