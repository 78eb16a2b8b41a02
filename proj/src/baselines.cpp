#include "milr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace milr {

namespace {

struct InstanceData {
    Eigen::MatrixXd x;  // N x p
    Eigen::VectorXd y;  // replicated bag labels
    int p = 0;
    long total = 0;
};

InstanceData replicate_labels(const BagDataset& ds) {
    InstanceData d;
    d.p = ds.p();
    d.total = ds.total_instances();
    d.x.resize(d.total, d.p);
    d.y.resize(d.total);
    Eigen::Index row = 0;
    for (const auto& bag : ds.bags) {
        d.x.middleRows(row, bag.size()) = bag.features;
        d.y.segment(row, bag.size()).setConstant(bag.label);
        row += bag.size();
    }
    return d;
}

}  // namespace

FitResult fit_naive(const BagDataset& ds, const FitConfig& cfg) {
    if (ds.n() < 1) throw std::invalid_argument("empty dataset");
    const InstanceData d = replicate_labels(ds);
    const int p = d.p;

    FitResult res;
    res.lambda = 0.0;
    res.coef.beta = Eigen::VectorXd::Zero(p);
    const double ybar = std::clamp(d.y.mean(), 1e-3, 1.0 - 1e-3);
    res.coef.intercept = std::log(ybar / (1.0 - ybar));

    Eigen::VectorXd full(p + 1);
    full[0] = res.coef.intercept;
    full.tail(p) = res.coef.beta;

    Eigen::MatrixXd hessian(p + 1, p + 1);
    Eigen::VectorXd grad(p + 1);

    for (int iter = 1; iter <= cfg.max_em_iter; ++iter) {
        const Eigen::VectorXd eta =
            (d.x * full.tail(p)).array() + full[0];
        Eigen::VectorXd prob(d.total), w(d.total);
        for (Eigen::Index r = 0; r < d.total; ++r) {
            prob[r] = sigmoid(eta[r]);
            w[r] = std::max(prob[r] * (1.0 - prob[r]), 1e-10);
        }
        const Eigen::VectorXd resid = d.y - prob;

        grad[0] = resid.sum();
        grad.tail(p) = d.x.transpose() * resid;

        hessian(0, 0) = w.sum();
        const Eigen::VectorXd xw = d.x.transpose() * w;
        hessian.block(0, 1, 1, p) = xw.transpose();
        hessian.block(1, 0, p, 1) = xw;
        hessian.block(1, 1, p, p) =
            d.x.transpose() * w.asDiagonal() * d.x;
        hessian.diagonal().array() += 1e-12;

        const Eigen::VectorXd step = hessian.ldlt().solve(grad);
        full += step;
        res.iterations = iter;
        if (step.cwiseAbs().maxCoeff() < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) {
        std::cerr << "warning: IRLS did not converge in " << cfg.max_em_iter
                  << " iterations (possible separation)\n";
    }
    if (!full.allFinite()) {
        throw std::runtime_error("non-finite coefficients in fit_naive");
    }
    res.coef.intercept = full[0];
    res.coef.beta = full.tail(p);
    res.deviance = deviance(res.coef, ds);
    return res;
}

double softmax_loglik(const Coefficients& coef, const BagDataset& ds,
                      double alpha, double clip) {
    if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    double ll = 0.0;
    for (const auto& bag : ds.bags) {
        const double s = std::clamp(softmax_bag_score(coef, bag, alpha), clip,
                                    1.0 - clip);
        ll += bag.label == 1 ? std::log(s) : std::log1p(-s);
    }
    return ll;
}

namespace {

// Gradient of the softmax log likelihood. With t_j the softmax weights of
// alpha*p_j and S = sum_j t_j p_j,
//   dS/dp_j = t_j (1 + alpha (p_j - S)),
// i.e. the weight plus alpha times the weighted covariance contribution.
// Chain through dp/deta = p q and eta = beta0 + x'beta.
Eigen::VectorXd softmax_gradient(const Coefficients& coef, const BagDataset& ds,
                                 double alpha, double clip) {
    const int p = ds.p();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p + 1);
    for (const auto& bag : ds.bags) {
        const Eigen::VectorXd eta =
            (bag.features * coef.beta).array() + coef.intercept;
        const int m = bag.size();
        Eigen::VectorXd prob(m);
        for (int j = 0; j < m; ++j) prob[j] = sigmoid(eta[j]);
        const double shift = alpha * prob.maxCoeff();
        Eigen::VectorXd t(m);
        double den = 0.0;
        for (int j = 0; j < m; ++j) {
            t[j] = std::exp(alpha * prob[j] - shift);
            den += t[j];
        }
        t /= den;
        const double s = t.dot(prob);
        if (s <= clip || s >= 1.0 - clip) continue;  // clamped flat region
        const double dll_ds =
            bag.label == 1 ? 1.0 / s : -1.0 / (1.0 - s);
        for (int j = 0; j < m; ++j) {
            const double ds_dp = t[j] * (1.0 + alpha * (prob[j] - s));
            const double c = dll_ds * ds_dp * prob[j] * (1.0 - prob[j]);
            grad[0] += c;
            grad.tail(p) += c * bag.features.row(j).transpose();
        }
    }
    return grad;
}

}  // namespace

FitResult fit_softmax_milr(const BagDataset& ds, double alpha,
                           const FitConfig& cfg) {
    if (ds.n() < 1) throw std::invalid_argument("empty dataset");
    const int p = ds.p();

    FitResult res;
    res.lambda = 0.0;
    res.coef.beta = Eigen::VectorXd::Zero(p);
    const double pibar = std::clamp(
        static_cast<double>(ds.positive_bags()) / ds.n(), 1e-3, 1.0 - 1e-3);
    res.coef.intercept = std::log(pibar / (1.0 - pibar));

    double value = softmax_loglik(res.coef, ds, alpha, cfg.clip);
    res.objective_trace.push_back(-value);
    double step = 1.0;

    for (int iter = 1; iter <= cfg.max_em_iter; ++iter) {
        const Eigen::VectorXd grad =
            softmax_gradient(res.coef, ds, alpha, cfg.clip);
        if (!grad.allFinite()) {
            throw std::runtime_error("non-finite gradient in fit_softmax_milr");
        }
        res.iterations = iter;
        const double gnorm = grad.cwiseAbs().maxCoeff();
        if (gnorm < cfg.tol) {
            res.converged = true;
            break;
        }
        const double gsq = grad.squaredNorm();
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            Coefficients trial = res.coef;
            trial.intercept += step * grad[0];
            trial.beta += step * grad.tail(p);
            const double trial_value =
                softmax_loglik(trial, ds, alpha, cfg.clip);
            if (trial_value >= value + 1e-4 * step * gsq) {
                res.coef = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // step underflow: no further ascent possible
        res.objective_trace.push_back(-value);
        step = std::min(step * 2.0, 1e4);
    }

    res.deviance = deviance(res.coef, ds);
    return res;
}

}  // namespace milr
