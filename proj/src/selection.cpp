#include "milr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "milr/parallel.hpp"

namespace milr {

CVReport cross_validate(const BagDataset& ds, const std::vector<double>& grid,
                        int folds, std::uint64_t seed, const FitConfig& cfg,
                        int jobs) {
    if (grid.empty()) throw std::invalid_argument("empty lambda grid");
    const FoldAssignment fa = stratified_kfold(ds, folds, seed);
    const int K = static_cast<int>(grid.size());

    CVReport report;
    report.lambdas = grid;
    report.folds = folds;
    report.seed = seed;
    report.fold_deviances.setConstant(folds, K,
                                      std::numeric_limits<double>::quiet_NaN());
    report.valid.assign(static_cast<size_t>(K), 1);

    parallel_for(jobs, folds, [&](int f) {
        std::vector<int> train_idx, test_idx;
        for (int i = 0; i < ds.n(); ++i)
            (fa.fold_of_bag[static_cast<size_t>(i)] == f ? test_idx : train_idx)
                .push_back(i);
        // Fold-internal standardization: held-out bags only ever see the
        // training fold's statistics.
        auto [train, stats] = standardize(subset_bags(ds, train_idx));
        const BagDataset heldout =
            apply_standardization(subset_bags(ds, test_idx), stats);
        const LambdaPath path = fit_path(train, grid, cfg);
        for (int j = 0; j < K; ++j) {
            if (path.fits[static_cast<size_t>(j)].failed) continue;
            report.fold_deviances(f, j) = deviance(
                path.fits[static_cast<size_t>(j)].coef, heldout, cfg.clip);
        }
    });

    report.mean_deviance.assign(static_cast<size_t>(K), 0.0);
    report.se_deviance.assign(static_cast<size_t>(K), 0.0);
    for (int j = 0; j < K; ++j) {
        bool ok = true;
        for (int f = 0; f < folds; ++f)
            ok = ok && std::isfinite(report.fold_deviances(f, j));
        if (!ok) {
            report.valid[static_cast<size_t>(j)] = 0;
            std::cerr << "warning: lambda=" << grid[static_cast<size_t>(j)]
                      << " excluded from CV selection (failed fold fit)\n";
            continue;
        }
        const double mean = report.fold_deviances.col(j).mean();
        double ss = 0.0;
        for (int f = 0; f < folds; ++f)
            ss += std::pow(report.fold_deviances(f, j) - mean, 2);
        report.mean_deviance[static_cast<size_t>(j)] = mean;
        report.se_deviance[static_cast<size_t>(j)] =
            folds > 1 ? std::sqrt(ss / (folds - 1)) / std::sqrt(folds) : 0.0;
    }

    report.chosen_lambda = select_lambda_cv(report);
    // Rightmost valid grid entry == smallest lambda; a minimum there suggests
    // the grid should extend further.
    int last_valid = -1;
    for (int j = 0; j < K; ++j)
        if (report.valid[static_cast<size_t>(j)]) last_valid = j;
    report.boundary_minimum =
        last_valid >= 0 &&
        report.chosen_lambda == grid[static_cast<size_t>(last_valid)];
    if (report.boundary_minimum) {
        std::cerr << "warning: CV deviance minimized at the smallest lambda "
                     "(boundary minimum)\n";
    }
    return report;
}

double select_lambda_cv(const CVReport& report) {
    int best = -1;
    for (int j = 0; j < static_cast<int>(report.lambdas.size()); ++j) {
        if (!report.valid[static_cast<size_t>(j)]) continue;
        if (best < 0 || report.mean_deviance[static_cast<size_t>(j)] <
                            report.mean_deviance[static_cast<size_t>(best)]) {
            best = j;  // strict '<' keeps the earlier (larger) lambda on ties
        }
    }
    if (best < 0) throw std::runtime_error("no valid lambda in CV report");
    return report.lambdas[static_cast<size_t>(best)];
}

double bic(const FitResult& fit, const BagDataset& ds) {
    const int df = 1 + fit.coef.nonzero_count();
    return fit.deviance + df * std::log(static_cast<double>(ds.n()));
}

double select_lambda_bic(const LambdaPath& path, const BagDataset& ds) {
    if (path.fits.empty()) throw std::invalid_argument("empty path");
    int best = -1;
    double best_bic = 0.0;
    for (int j = 0; j < static_cast<int>(path.fits.size()); ++j) {
        const FitResult& fit = path.fits[static_cast<size_t>(j)];
        if (fit.failed) continue;
        const double b = bic(fit, ds);
        if (best < 0 || b < best_bic) {
            best = j;
            best_bic = b;
        }
    }
    if (best < 0) throw std::runtime_error("no successful fit in path");
    return path.lambdas[static_cast<size_t>(best)];
}

}  // namespace milr
