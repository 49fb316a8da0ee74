#include <srep/bilevel.hpp>

#include <srep/linalg.hpp>

#include <cmath>
#include <string>

namespace srep {

void BilevelConfig::validate() const {
    require(m > 0 && d > 0, "BilevelConfig: m and d must be positive");
    require(lambda >= 0.0, "BilevelConfig: lambda must be nonnegative");
    require(outer_lr > 0.0, "BilevelConfig: outer_lr must be positive");
    require(outer_steps >= 1, "BilevelConfig: outer_steps must be positive");
    require(tasks_per_step >= 1, "BilevelConfig: tasks_per_step must be positive");
    require(holdout > 0.0 && holdout < 1.0, "BilevelConfig: holdout must be in (0, 1)");
    require(inner_tol > 0.0, "BilevelConfig: inner_tol must be positive");
    require(divergence_factor > 1.0, "BilevelConfig: divergence_factor must exceed 1");
}

FitResult inner_solve(const LinearRepresentation& rep, const TaskDataset& task, double lambda,
                      InnerKind kind, const BilevelConfig& cfg) {
    require(!task.is_classification(), "inner_solve: regression tasks only");
    require(rep.Theta.cols() == task.d(), "inner_solve: representation width mismatch");
    RegressionProblem problem;
    problem.F = rep.features(task.X);
    problem.Y = task.y;
    if (kind == InnerKind::lasso) {
        problem.lambda = lambda;
        SolverSettings settings;
        settings.tol = cfg.inner_tol;
        settings.max_sweeps = cfg.inner_max_sweeps;
        return lasso_cd(problem, settings);
    }
    problem.l2_lambda = lambda;
    FitResult result;
    result.weights = ridge_solve(problem);
    return result;
}

namespace {

struct Split {
    Matrix X_tr, X_val;
    Vector y_tr, y_val;
};

Split split_task(const TaskDataset& task, double holdout) {
    const Index n = task.n();
    const Index n_val = static_cast<Index>(std::lround(static_cast<double>(n) * holdout));
    require(n_val >= 1 && n - n_val >= 1, "hypergradient: split leaves an empty half");
    Split s;
    s.X_tr = task.X.topRows(n - n_val);
    s.y_tr = task.y.head(n - n_val);
    s.X_val = task.X.bottomRows(n_val);
    s.y_val = task.y.tail(n_val);
    return s;
}

}  // namespace

TaskGrad hypergradient(const LinearRepresentation& rep, const TaskDataset& task, double lambda,
                       InnerKind kind, const BilevelConfig& cfg) {
    require(!task.is_classification(), "hypergradient: regression tasks only");
    require(rep.Theta.cols() == task.d(), "hypergradient: representation width mismatch");
    const Index m = rep.Theta.rows();
    const Split s = split_task(task, cfg.holdout);
    const double n_tr = static_cast<double>(s.y_tr.size());
    const double n_val = static_cast<double>(s.y_val.size());

    TaskGrad out;
    out.grad = Matrix::Zero(m, rep.Theta.cols());

    // Inner solve on the training half.
    const Matrix F_tr = s.X_tr * rep.Theta.transpose();
    RegressionProblem problem;
    problem.F = F_tr;
    problem.Y = s.y_tr;
    PrimalWeights fit;
    if (kind == InnerKind::lasso) {
        problem.lambda = lambda;
        SolverSettings settings;
        settings.tol = cfg.inner_tol;
        settings.max_sweeps = cfg.inner_max_sweeps;
        try {
            fit = lasso_cd(problem, settings).weights;
        } catch (const ConvergenceError&) {
            out.skipped = true;
            return out;
        }
    } else {
        problem.l2_lambda = lambda;
        try {
            fit = ridge_solve(problem);
        } catch (const FactorizationError&) {
            out.skipped = true;
            return out;
        }
        fit.support.resize(static_cast<std::size_t>(m));
        for (Index j = 0; j < m; ++j) fit.support[static_cast<std::size_t>(j)] = j;
    }

    const std::vector<Index>& support = fit.support;
    const Index s_size = static_cast<Index>(support.size());
    out.support_size = s_size;

    const Matrix F_val = s.X_val * rep.Theta.transpose();
    if (s_size == 0) {
        out.outer_loss = s.y_val.squaredNorm() / (2.0 * n_val);
        return out;  // gradient exactly zero: the inner map is locally constant
    }

    Matrix F_tr_S(s.y_tr.size(), s_size);
    Matrix F_val_S(s.y_val.size(), s_size);
    Vector w_S(s_size);
    for (Index a = 0; a < s_size; ++a) {
        const Index j = support[static_cast<std::size_t>(a)];
        F_tr_S.col(a) = F_tr.col(j);
        F_val_S.col(a) = F_val.col(j);
        w_S(a) = fit.W(0, j);
    }

    const Vector r_val = s.y_val - F_val_S * w_S;
    out.outer_loss = r_val.squaredNorm() / (2.0 * n_val);

    // Stationarity on the fixed support:
    //   lasso: F_S^T F_S w = F_S^T y - n lambda sign(w)
    //   ridge: (F^T F + n lambda I) w = F^T y
    Matrix G = F_tr_S.transpose() * F_tr_S;
    if (kind == InnerKind::ridge) G.diagonal().array() += n_tr * lambda;
    Vector v;
    try {
        const Vector u = -(F_val_S.transpose() * r_val) / n_val;
        v = solve_psd(G, u);
    } catch (const FactorizationError&) {
        out.skipped = true;
        out.grad.setZero();
        return out;
    }

    // d(loss)/d(F_tr_S) from the implicit system, d(loss)/d(F_val_S) direct.
    const Vector r_tr = s.y_tr - F_tr_S * w_S;
    const Matrix dF_tr = r_tr * v.transpose() - (F_tr_S * v) * w_S.transpose();
    const Matrix grad_S =
        dF_tr.transpose() * s.X_tr - w_S * (r_val.transpose() * s.X_val) / n_val;
    for (Index a = 0; a < s_size; ++a) {
        out.grad.row(support[static_cast<std::size_t>(a)]) = grad_S.row(a);
    }
    return out;
}

TrainResult train(const BilevelConfig& cfg, const TaskStream& stream, RngStream& rng) {
    cfg.validate();
    LinearRepresentation init;
    init.Theta = Matrix(cfg.m, cfg.d);
    for (Index i = 0; i < cfg.m; ++i)
        for (Index j = 0; j < cfg.d; ++j) init.Theta(i, j) = rng.normal();
    return train(cfg, stream, rng, std::move(init));
}

TrainResult train(const BilevelConfig& cfg, const TaskStream& stream, RngStream& rng,
                  LinearRepresentation init) {
    cfg.validate();
    require(init.Theta.rows() == cfg.m && init.Theta.cols() == cfg.d,
            "train: init shape mismatch");
    require_finite(init.Theta, "train: init");

    auto normalize_rows = [&](Matrix& Theta) {
        for (Index i = 0; i < Theta.rows(); ++i) {
            const double norm = Theta.row(i).norm();
            if (norm > 0.0) Theta.row(i) /= norm;
        }
    };

    TrainResult result;
    result.rep = std::move(init);
    if (cfg.row_normalize) normalize_rows(result.rep.Theta);

    double initial_loss = -1.0;
    for (Index step = 0; step < cfg.outer_steps; ++step) {
        Matrix grad = Matrix::Zero(cfg.m, cfg.d);
        TraceRow row;
        Index used = 0;
        for (Index t = 0; t < cfg.tasks_per_step; ++t) {
            const TaskDataset task = stream(rng);
            const TaskGrad tg = hypergradient(result.rep, task, cfg.lambda, cfg.inner, cfg);
            if (tg.skipped) {
                row.skipped += 1;
                continue;
            }
            grad += tg.grad;
            row.outer_loss += tg.outer_loss;
            row.mean_support_fraction +=
                static_cast<double>(tg.support_size) / static_cast<double>(cfg.m);
            used += 1;
        }
        if (used > 0) {
            grad /= static_cast<double>(used);
            row.outer_loss /= static_cast<double>(used);
            row.mean_support_fraction /= static_cast<double>(used);
        }
        result.trace.push_back(row);

        if (initial_loss < 0.0 && used > 0) initial_loss = std::max(row.outer_loss, 1e-12);
        if (initial_loss >= 0.0 && used > 0 &&
            row.outer_loss > cfg.divergence_factor * initial_loss) {
            throw DivergenceError("train: outer loss diverged at step " + std::to_string(step) +
                                      " (loss " + std::to_string(row.outer_loss) + ")",
                                  step, row.outer_loss);
        }

        result.rep.Theta -= cfg.outer_lr * grad;
        if (cfg.row_normalize) normalize_rows(result.rep.Theta);
    }
    return result;
}

}  // namespace srep
