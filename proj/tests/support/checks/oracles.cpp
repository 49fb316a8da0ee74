#include "checks/oracles.hpp"

#include <srep/metrics.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace srep::checks {

namespace {

double group_objective(const RegressionProblem& p, const Matrix& W) {
    const Matrix R = p.Y - p.F * W.transpose();
    double penalty = 0.0;
    for (Index j = 0; j < W.cols(); ++j) penalty += W.col(j).norm();
    return 0.5 * R.squaredNorm() / static_cast<double>(p.n()) + p.lambda * penalty +
           0.5 * p.l2_lambda * W.squaredNorm();
}

}  // namespace

Matrix proximal_reference(const RegressionProblem& problem, double* best_objective) {
    problem.validate();
    const Index n = problem.n();
    const Index m = problem.m();
    const Index k = problem.k();
    const Matrix gram = problem.F.transpose() * problem.F;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    const double step_L =
        eig.eigenvalues().maxCoeff() / static_cast<double>(n) + problem.l2_lambda;
    require(step_L > 0.0, "proximal_reference: zero curvature");
    const double shrink = problem.lambda / step_L;

    Matrix W = Matrix::Zero(k, m);
    Matrix V = W;
    Matrix W_prev = W;
    Matrix best = W;
    double best_obj = group_objective(problem, W);
    double theta = 1.0;
    Index stale = 0;
    const Index max_iters = 200000;
    for (Index it = 0; it < max_iters && stale < 300; ++it) {
        const Matrix R = problem.Y - problem.F * V.transpose();
        const Matrix grad =
            -(R.transpose() * problem.F) / static_cast<double>(n) + problem.l2_lambda * V;
        Matrix W_next = V - grad / step_L;
        for (Index j = 0; j < m; ++j) {
            const double norm = W_next.col(j).norm();
            if (norm <= shrink) {
                W_next.col(j).setZero();
            } else {
                W_next.col(j) *= 1.0 - shrink / norm;
            }
        }
        const double obj = group_objective(problem, W_next);
        if (obj > best_obj) {
            // Adaptive restart: momentum overshoot, drop back to a plain step.
            theta = 1.0;
            V = W_next;
        } else {
            const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
            V = W_next + ((theta - 1.0) / theta_next) * (W_next - W_prev);
            theta = theta_next;
        }
        W_prev = W_next;
        if (obj < best_obj - 1e-16 * std::max(1.0, std::abs(best_obj))) {
            best_obj = obj;
            best = W_next;
            stale = 0;
        } else {
            ++stale;
        }
    }
    if (best_objective != nullptr) *best_objective = best_obj;
    return best;
}

double conjugate_sup_radial(const Vector& v, double lambda1, double lambda2) {
    require(lambda1 >= 0.0 && lambda2 > 0.0, "conjugate_sup_radial: bad penalties");
    const double vn = v.norm();
    const double radius = 2.0 * vn / lambda2 + 1e-9;
    const double h = 1e-5;
    const auto points = static_cast<Index>(radius / h) + 1;
    double best = 0.0;  // r = 0 gives f = 0
    for (Index i = 1; i <= points; ++i) {
        const double r = static_cast<double>(i) * h;
        const double f = r * vn - lambda1 * r - 0.5 * lambda2 * r * r;
        best = std::max(best, f);
    }
    return best;
}

namespace {

// Scan the centered grid {x0 + i*h} x {y0 + j*h} (single axis when k = 1).
// Returns the best value and writes the best point.
double scan_box(const Vector& v, double lambda1, double lambda2, const Vector& center,
                double half_width, double h, Vector& arg_best) {
    const Index k = v.size();
    const auto steps = static_cast<Index>(half_width / h);
    double best = -std::numeric_limits<double>::infinity();
    Vector w(k);
    if (k == 1) {
        for (Index i = -steps; i <= steps; ++i) {
            w(0) = center(0) + static_cast<double>(i) * h;
            const double f = v(0) * w(0) - lambda1 * std::abs(w(0)) - 0.5 * lambda2 * w(0) * w(0);
            if (f > best) {
                best = f;
                arg_best = w;
            }
        }
        return best;
    }
    for (Index i = -steps; i <= steps; ++i) {
        w(0) = center(0) + static_cast<double>(i) * h;
        for (Index j = -steps; j <= steps; ++j) {
            w(1) = center(1) + static_cast<double>(j) * h;
            const double f = v.dot(w) - lambda1 * w.norm() - 0.5 * lambda2 * w.squaredNorm();
            if (f > best) {
                best = f;
                arg_best = w;
            }
        }
    }
    return best;
}

}  // namespace

double conjugate_sup_direct(const Vector& v, double lambda1, double lambda2, double tol) {
    const Index k = v.size();
    require(k >= 1 && k <= 2, "conjugate_sup_direct: k must be 1 or 2");
    require(tol > 0.0 && lambda2 > 0.0, "conjugate_sup_direct: bad parameters");
    const double vn = v.norm();
    const double root_k = std::sqrt(static_cast<double>(k));
    // f(w*) >= f(0) = 0 forces ||w*|| <= 2||v||/lambda2.
    const double radius = 2.0 * vn / lambda2 + 1e-9;
    const Index budget = 1024;  // per-axis half steps per stage

    // Each stage scans a grid over a box known to contain the maximizer.
    // The best grid value is within cert = lip * h * sqrt(k) / 2 of the true
    // sup, and lambda2-strong concavity then confines the maximizer to a ball
    // of radius sqrt(2 * cert / lambda2) around the grid argmax, which seeds
    // the next, finer stage. Stage one is centered at 0, so the kink is
    // always evaluated exactly.
    Vector center = Vector::Zero(k);
    double half = radius;
    double best = 0.0;
    double cert = std::numeric_limits<double>::infinity();
    for (Index stage = 0; stage < 24 && cert > 0.5 * tol; ++stage) {
        const double h = std::max(2.0 * half / static_cast<double>(budget), 1e-12);
        const double reach = center.norm() + half * root_k;
        const double lip = vn + lambda1 + lambda2 * reach;
        Vector arg = center;
        best = std::max(best, scan_box(v, lambda1, lambda2, center, half, h, arg));
        cert = lip * h * root_k / 2.0;
        center = arg;
        half = std::sqrt(2.0 * cert / lambda2) + h;
    }
    require(cert <= tol, "conjugate_sup_direct: failed to certify requested accuracy");
    return best;
}

namespace {

struct SplitView {
    Matrix F_tr, F_val;
    Vector y_tr, y_val;
};

SplitView split_task(const Matrix& features, const Vector& y, double holdout) {
    const Index n = features.rows();
    const auto n_val = static_cast<Index>(std::lround(static_cast<double>(n) * holdout));
    const Index n_tr = n - n_val;
    SplitView view;
    view.F_tr = features.topRows(n_tr);
    view.y_tr = y.head(n_tr);
    view.F_val = features.bottomRows(n_val);
    view.y_val = y.tail(n_val);
    return view;
}

struct InnerPattern {
    std::vector<Index> support;
    std::vector<int> signs;
};

bool inner_loss(const Matrix& Theta, const TaskDataset& task, double lambda, InnerKind kind,
                const BilevelConfig& cfg, double& loss, InnerPattern& pattern) {
    const Matrix features = task.X * Theta.transpose();
    const SplitView view = split_task(features, task.y, cfg.holdout);
    RegressionProblem problem;
    problem.F = view.F_tr;
    problem.Y = view.y_tr;
    Matrix W;
    if (kind == InnerKind::lasso) {
        problem.lambda = lambda;
        SolverSettings settings;
        settings.tol = cfg.inner_tol;
        settings.max_sweeps = cfg.inner_max_sweeps;
        W = lasso_cd(problem, settings).weights.W;
    } else {
        problem.l2_lambda = lambda;
        W = ridge_solve(problem).W;
    }
    pattern.support.clear();
    pattern.signs.clear();
    for (Index j = 0; j < W.cols(); ++j) {
        if (W(0, j) != 0.0) {
            pattern.support.push_back(j);
            pattern.signs.push_back(W(0, j) > 0.0 ? 1 : -1);
        }
    }
    const Vector resid = view.y_val - (view.F_val * W.transpose()).col(0);
    loss = 0.5 * resid.squaredNorm() / static_cast<double>(view.y_val.size());
    return true;
}

}  // namespace

bool fd_outer_gradient(const LinearRepresentation& rep, const TaskDataset& task, double lambda,
                       InnerKind kind, const BilevelConfig& cfg, double h, Matrix& grad_out) {
    InnerPattern base;
    double base_loss = 0.0;
    if (!inner_loss(rep.Theta, task, lambda, kind, cfg, base_loss, base)) return false;
    const Index m = rep.Theta.rows();
    const Index d = rep.Theta.cols();
    grad_out = Matrix::Zero(m, d);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < d; ++j) {
            Matrix plus = rep.Theta;
            plus(i, j) += h;
            Matrix minus = rep.Theta;
            minus(i, j) -= h;
            double loss_plus = 0.0, loss_minus = 0.0;
            InnerPattern pat_plus, pat_minus;
            if (!inner_loss(plus, task, lambda, kind, cfg, loss_plus, pat_plus)) return false;
            if (!inner_loss(minus, task, lambda, kind, cfg, loss_minus, pat_minus)) return false;
            if (pat_plus.support != base.support || pat_minus.support != base.support ||
                pat_plus.signs != base.signs || pat_minus.signs != base.signs) {
                return false;
            }
            grad_out(i, j) = (loss_plus - loss_minus) / (2.0 * h);
        }
    }
    return true;
}

double svm_primal_subgradient_min(const SvmProblem& problem, Index iters) {
    problem.validate();
    const Index n = problem.n();
    const Index k = problem.k();
    const Index m = problem.m();
    const std::vector<Index> labels = problem.labels();
    Matrix W = Matrix::Zero(k, m);
    double best = primal_objective(problem, W);
    for (Index t = 1; t <= iters; ++t) {
        Matrix grad = problem.lambda2 * W;
        for (Index j = 0; j < m; ++j) {
            const double norm = W.col(j).norm();
            if (norm > 0.0) grad.col(j) += (problem.lambda1 / norm) * W.col(j);
        }
        const Matrix scores = problem.F * W.transpose();
        for (Index i = 0; i < n; ++i) {
            const Index yi = labels[static_cast<std::size_t>(i)];
            Index worst = yi;
            double worst_val = 0.0;
            for (Index l = 0; l < k; ++l) {
                const double margin =
                    scores(i, l) - scores(i, yi) + 1.0 - problem.Y(i, l);
                if (margin > worst_val) {
                    worst_val = margin;
                    worst = l;
                }
            }
            if (worst != yi) {
                grad.row(worst) += problem.F.row(i);
                grad.row(yi) -= problem.F.row(i);
            }
        }
        W -= grad / (problem.lambda2 * static_cast<double>(t));
        best = std::min(best, primal_objective(problem, W));
    }
    return best;
}

double brute_force_mcc(const Matrix& Z_true, const Matrix& Z_learned) {
    const Index m = Z_true.cols();
    require(m == Z_learned.cols() && m <= 8, "brute_force_mcc: needs m <= 8 square matching");
    Matrix C(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j)
            C(i, j) = std::abs(pearson(Z_true.col(i), Z_learned.col(j)));
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index(0));
    double best = -1.0;
    do {
        double total = 0.0;
        for (Index i = 0; i < m; ++i) total += C(i, perm[static_cast<std::size_t>(i)]);
        best = std::max(best, total / static_cast<double>(m));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace srep::checks
