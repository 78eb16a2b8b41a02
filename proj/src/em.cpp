#include "milr/em.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace milr {

namespace {

// Instance-major view of a dataset; column-major so coordinate sweeps touch
// contiguous memory.
struct Flat {
    Eigen::MatrixXd x;          // N x p
    std::vector<int> start;     // bag offsets, size n+1
    std::vector<int> z;         // per bag
    Eigen::VectorXd col_ssq;    // per-column sum of squares (degeneracy check)
    int n = 0, p = 0, total = 0;
};

Flat flatten(const BagDataset& ds) {
    Flat f;
    f.n = ds.n();
    f.p = ds.p();
    f.total = static_cast<int>(ds.total_instances());
    f.x.resize(f.total, f.p);
    f.start.resize(static_cast<size_t>(f.n) + 1);
    f.z.resize(static_cast<size_t>(f.n));
    int row = 0;
    for (int i = 0; i < f.n; ++i) {
        const Bag& bag = ds.bags[static_cast<size_t>(i)];
        f.start[static_cast<size_t>(i)] = row;
        f.z[static_cast<size_t>(i)] = bag.label;
        f.x.middleRows(row, bag.size()) = bag.features;
        row += bag.size();
    }
    f.start[static_cast<size_t>(f.n)] = row;
    f.col_ssq = f.x.array().square().colwise().sum();
    return f;
}

// Conditional expectations for one positive bag, from log p / log q of its
// instances. When the bag probability underflows (all p essentially zero) the
// exact ratio p_j / (1 - prod q) degrades to p_j / sum_l p_l, which is its
// analytic limit; computed via log-sum-exp.
void gamma_block(const double* logp, const double* logq, int m, double* out) {
    if (m == 1) {
        out[0] = 1.0;
        return;
    }
    double sum_logq = 0.0;
    for (int j = 0; j < m; ++j) sum_logq += logq[j];
    if (sum_logq < -1e-10) {
        const double log_pi = log1mexp(sum_logq);
        for (int j = 0; j < m; ++j)
            out[j] = std::min(1.0, std::exp(logp[j] - log_pi));
    } else {
        double mx = logp[0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, logp[j]);
        double lse = 0.0;
        for (int j = 0; j < m; ++j) lse += std::exp(logp[j] - mx);
        lse = mx + std::log(lse);
        for (int j = 0; j < m; ++j)
            out[j] = std::min(1.0, std::exp(logp[j] - lse));
    }
}

struct EStep {
    Eigen::VectorXd p;        // raw instance probabilities
    Eigen::VectorXd targets;  // z_i * gamma_ij
    double loglik = 0.0;      // observed-data log likelihood at the iterate
};

EStep e_step(const Flat& f, const Eigen::VectorXd& eta) {
    EStep s;
    s.p.resize(f.total);
    s.targets.setZero(f.total);
    Eigen::VectorXd logp(f.total), logq(f.total);
    for (int r = 0; r < f.total; ++r) {
        logq[r] = -log1pexp(eta[r]);
        logp[r] = -log1pexp(-eta[r]);
        s.p[r] = sigmoid(eta[r]);
    }
    for (int i = 0; i < f.n; ++i) {
        const int a = f.start[static_cast<size_t>(i)];
        const int m = f.start[static_cast<size_t>(i) + 1] - a;
        double sum_logq = 0.0;
        for (int j = 0; j < m; ++j) sum_logq += logq[a + j];
        if (f.z[static_cast<size_t>(i)] == 1) {
            gamma_block(logp.data() + a, logq.data() + a, m,
                        s.targets.data() + a);
            s.loglik += log1mexp(sum_logq);
        } else {
            s.loglik += sum_logq;
        }
    }
    return s;
}

// Clip rule and curvature weights; rhs = (z gamma - p_clipped) / w is the
// residual u - eta of the working response.
void working_arrays(const EStep& s, double clip, Eigen::VectorXd& w,
                    Eigen::VectorXd& rhs) {
    const int total = static_cast<int>(s.p.size());
    w.resize(total);
    rhs.resize(total);
    for (int r = 0; r < total; ++r) {
        double pc = s.p[r];
        double wr;
        if (pc > 1.0 - clip) {
            pc = 1.0;
            wr = clip;
        } else if (pc < clip) {
            pc = 0.0;
            wr = clip;
        } else {
            wr = pc * (1.0 - pc);
        }
        w[r] = wr;
        rhs[r] = (s.targets[r] - pc) / wr;
    }
}

std::string non_finite_message(double lambda, int iter) {
    std::ostringstream os;
    os << "non-finite objective in fit_milr (lambda=" << lambda
       << ", iteration " << iter << "); data may be degenerate";
    return os.str();
}

FitResult fit_flat(const Flat& f, const BagDataset& ds, double lambda,
                   const FitConfig& cfg, const Coefficients& init) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (cfg.tol <= 0.0) throw std::invalid_argument("tol must be positive");
    if (!(cfg.clip > 0.0 && cfg.clip < 0.5)) {
        throw std::invalid_argument("clip must lie in (0, 0.5)");
    }
    if (init.beta.size() != f.p) {
        throw std::invalid_argument("init coefficient dimension mismatch");
    }

    FitResult res;
    res.lambda = lambda;
    res.coef = init;
    double& beta0 = res.coef.intercept;
    Eigen::VectorXd& beta = res.coef.beta;

    Eigen::VectorXd eta = Eigen::VectorXd::Constant(f.total, beta0);
    for (int k = 0; k < f.p; ++k)
        if (beta[k] != 0.0) eta += beta[k] * f.x.col(k);

    Eigen::VectorXd w, r, denom(f.p);
    double prev_objective = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= cfg.max_em_iter; ++iter) {
        const EStep s = e_step(f, eta);
        const double objective = -s.loglik + lambda * beta.array().abs().sum();
        if (!std::isfinite(objective)) {
            throw std::runtime_error(non_finite_message(lambda, iter));
        }
        if (objective > prev_objective + 1e-10) ++res.objective_increases;
        prev_objective = objective;
        res.objective_trace.push_back(objective);

        working_arrays(s, cfg.clip, w, r);
        const double sum_w = w.sum();

        const double beta0_start = beta0;
        const Eigen::VectorXd beta_start = beta;

        bool have_denom = false;
        for (int sweep = 0; sweep < std::max(1, cfg.max_cd_sweeps); ++sweep) {
            double sweep_delta = 0.0;
            // Intercept first; never penalized.
            const double d0 = w.dot(r) / sum_w;
            beta0 += d0;
            r.array() -= d0;
            eta.array() += d0;
            sweep_delta = std::abs(d0);

            for (int k = 0; k < f.p; ++k) {
                if (f.col_ssq[k] == 0.0) continue;  // degenerate column
                if (!have_denom)
                    denom[k] = w.dot(f.x.col(k).cwiseProduct(f.x.col(k)));
                const double sk =
                    w.dot(f.x.col(k).cwiseProduct(r)) + beta[k] * denom[k];
                const double bnew = soft_threshold_update(sk, lambda, denom[k]);
                const double d = bnew - beta[k];
                if (d != 0.0) {
                    r -= d * f.x.col(k);
                    eta += d * f.x.col(k);
                    beta[k] = bnew;
                    sweep_delta = std::max(sweep_delta, std::abs(d));
                }
            }
            have_denom = true;
            if (sweep_delta < cfg.tol) break;
        }

        double iter_delta = std::abs(beta0 - beta0_start);
        for (int k = 0; k < f.p; ++k)
            iter_delta = std::max(iter_delta, std::abs(beta[k] - beta_start[k]));

        res.iterations = iter;
        if (iter_delta < cfg.tol) {
            res.converged = true;
            break;
        }
    }

    if (!res.coef.beta.allFinite() || !std::isfinite(res.coef.intercept)) {
        throw std::runtime_error(non_finite_message(lambda, res.iterations));
    }
    const double final_ll = log_likelihood(res.coef, ds);
    res.deviance = -2.0 * final_ll;
    res.objective_trace.push_back(-final_ll + lambda * beta.array().abs().sum());
    return res;
}

}  // namespace

Eigen::VectorXd gamma_weights(const Coefficients& coef, const Bag& bag) {
    const int m = bag.size();
    if (m < 1) throw std::invalid_argument("empty bag");
    if (bag.label == 0) return Eigen::VectorXd::Zero(m);
    const Eigen::VectorXd eta =
        (bag.features * coef.beta).array() + coef.intercept;
    Eigen::VectorXd logp(m), logq(m), out(m);
    for (int j = 0; j < m; ++j) {
        logp[j] = -log1pexp(-eta[j]);
        logq[j] = -log1pexp(eta[j]);
    }
    gamma_block(logp.data(), logq.data(), m, out.data());
    return out;
}

Eigen::VectorXd estep_targets(const BagDataset& ds, const Coefficients& coef) {
    Eigen::VectorXd targets(ds.total_instances());
    Eigen::Index row = 0;
    for (const auto& bag : ds.bags) {
        targets.segment(row, bag.size()) = gamma_weights(coef, bag);
        row += bag.size();
    }
    return targets;
}

double q_objective(const BagDataset& ds, const Coefficients& coef,
                   const Eigen::VectorXd& targets) {
    double q = 0.0;
    Eigen::Index row = 0;
    for (const auto& bag : ds.bags) {
        const Eigen::VectorXd eta =
            (bag.features * coef.beta).array() + coef.intercept;
        for (int j = 0; j < bag.size(); ++j)
            q += targets[row + j] * eta[j] - log1pexp(eta[j]);
        row += bag.size();
    }
    return q;
}

Eigen::VectorXd q_gradient(const BagDataset& ds, const Coefficients& coef,
                           const Eigen::VectorXd& targets) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(ds.p() + 1);
    Eigen::Index row = 0;
    for (const auto& bag : ds.bags) {
        const Eigen::VectorXd eta =
            (bag.features * coef.beta).array() + coef.intercept;
        for (int j = 0; j < bag.size(); ++j) {
            const double resid = targets[row + j] - sigmoid(eta[j]);
            grad[0] += resid;
            grad.tail(ds.p()) += resid * bag.features.row(j).transpose();
        }
        row += bag.size();
    }
    return grad;
}

WorkingSet working_quantities(const Coefficients& coef, const BagDataset& ds,
                              const FitConfig& cfg) {
    const Eigen::Index total = ds.total_instances();
    WorkingSet ws;
    ws.u.resize(total);
    ws.w.resize(total);
    Eigen::Index row = 0;
    for (const auto& bag : ds.bags) {
        const Eigen::VectorXd eta =
            (bag.features * coef.beta).array() + coef.intercept;
        const Eigen::VectorXd gamma = gamma_weights(coef, bag);
        for (int j = 0; j < bag.size(); ++j) {
            double pc = sigmoid(eta[j]);
            double wr;
            if (pc > 1.0 - cfg.clip) {
                pc = 1.0;
                wr = cfg.clip;
            } else if (pc < cfg.clip) {
                pc = 0.0;
                wr = cfg.clip;
            } else {
                wr = pc * (1.0 - pc);
            }
            ws.w[row + j] = wr;
            ws.u[row + j] = eta[j] + (bag.label * gamma[j] - pc) / wr;
        }
        row += bag.size();
    }
    return ws;
}

double soft_threshold_update(double s, double lambda, double denom) {
    if (denom <= 0.0) {
        throw std::runtime_error(
            "nonpositive curvature in coordinate update (degenerate column)");
    }
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (s > lambda) return (s - lambda) / denom;
    if (s < -lambda) return (s + lambda) / denom;
    return 0.0;
}

Coefficients null_start(const BagDataset& ds) {
    Coefficients coef;
    coef.beta = Eigen::VectorXd::Zero(ds.p());
    const double pibar = std::clamp(
        static_cast<double>(ds.positive_bags()) / ds.n(), 1e-3, 1.0 - 1e-3);
    coef.intercept = std::log(pibar / (1.0 - pibar));
    return coef;
}

FitResult fit_milr(const BagDataset& ds, double lambda, const FitConfig& cfg,
                   const std::optional<Coefficients>& init) {
    if (ds.n() < 1) throw std::invalid_argument("empty dataset");
    if (lambda > 0.0 && !ds.standardized) {
        std::cerr << "warning: fitting a penalized model on unstandardized "
                     "data; lambda is not comparable to lambda_max\n";
    }
    const Flat f = flatten(ds);
    return fit_flat(f, ds, lambda, cfg, init.value_or(null_start(ds)));
}

double lambda_max(const BagDataset& ds) {
    if (ds.n() < 1) throw std::invalid_argument("empty dataset");
    if (!ds.standardized) {
        std::cerr << "warning: lambda_max assumes columns standardized to "
                     "sum-of-squares N - n\n";
    }
    double sum_m_minus_1 = 0.0;
    double sum_m_pow = 0.0;
    for (const auto& bag : ds.bags) {
        const double m = static_cast<double>(bag.size());
        sum_m_minus_1 += m - 1.0;
        sum_m_pow += bag.label == 1 ? 1.0 / m : m;
    }
    if (sum_m_minus_1 > 0.0) return std::sqrt(sum_m_minus_1) * std::sqrt(sum_m_pow);

    // All bags are single-instance: the closed form collapses to zero, so use
    // the ordinary logistic-lasso bound on the null-model score instead.
    std::cerr << "warning: all bags have one instance; lambda_max falls back "
                 "to the instance-level logistic bound\n";
    const double zbar = static_cast<double>(ds.positive_bags()) / ds.n();
    Eigen::VectorXd score = Eigen::VectorXd::Zero(ds.p());
    for (const auto& bag : ds.bags) {
        score += (bag.label - zbar) * bag.features.colwise().sum().transpose();
    }
    return score.cwiseAbs().maxCoeff();
}

std::vector<double> lambda_grid(double lmax, double eps, int count) {
    if (!(lmax > 0.0)) throw std::invalid_argument("lambda_max must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
    if (count < 2) throw std::invalid_argument("grid length must be at least 2");
    std::vector<double> grid(static_cast<size_t>(count));
    const double step = std::log(eps) / (count - 1);
    for (int i = 0; i < count; ++i)
        grid[static_cast<size_t>(i)] = lmax * std::exp(step * i);
    grid.front() = lmax;
    grid.back() = eps * lmax;
    return grid;
}

LambdaPath fit_path(const BagDataset& ds, const std::vector<double>& grid,
                    const FitConfig& cfg) {
    if (grid.empty()) throw std::invalid_argument("empty lambda grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] < grid[i - 1])) {
            throw std::invalid_argument("lambda grid must be strictly descending");
        }
    }
    const Flat f = flatten(ds);
    LambdaPath path;
    path.lambdas = grid;
    path.fits.reserve(grid.size());
    Coefficients warm = null_start(ds);
    for (double lambda : grid) {
        try {
            FitResult fit = fit_flat(f, ds, lambda, cfg, warm);
            warm = fit.coef;
            path.fits.push_back(std::move(fit));
        } catch (const std::exception& e) {
            FitResult failed;
            failed.lambda = lambda;
            failed.failed = true;
            failed.error = e.what();
            failed.coef = warm;
            path.fits.push_back(std::move(failed));
            std::cerr << "warning: path fit at lambda=" << lambda
                      << " failed: " << e.what() << '\n';
        }
    }
    return path;
}

double kkt_residual(const BagDataset& ds, const Coefficients& coef,
                    double lambda, const FitConfig& cfg) {
    const Flat f = flatten(ds);
    const WorkingSet ws = working_quantities(coef, ds, cfg);
    Eigen::VectorXd resid = ws.u;
    resid.array() -= coef.intercept;
    for (int k = 0; k < f.p; ++k)
        if (coef.beta[k] != 0.0) resid -= coef.beta[k] * f.x.col(k);

    // Intercept stationarity folds into the same certificate.
    double worst = std::abs(ws.w.dot(resid)) / std::max(1.0, ws.w.sum());
    for (int k = 0; k < f.p; ++k) {
        if (f.col_ssq[k] == 0.0) continue;
        const double denom_k = ws.w.dot(f.x.col(k).cwiseProduct(f.x.col(k)));
        const double sk =
            ws.w.dot(f.x.col(k).cwiseProduct(resid)) + coef.beta[k] * denom_k;
        double v;
        if (coef.beta[k] == 0.0) {
            v = std::max(0.0, std::abs(sk) - lambda);
        } else {
            const double sign = coef.beta[k] > 0.0 ? 1.0 : -1.0;
            v = std::abs(sk - lambda * sign - coef.beta[k] * denom_k);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace milr
