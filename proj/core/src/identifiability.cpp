#include <srep/identifiability.hpp>

#include <srep/linalg.hpp>
#include <srep/regression.hpp>

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace srep {

SupportCheckReport check_sufficient_support(const SupportFamily& family) {
    require(family.m > 0, "check_sufficient_support: m must be positive");
    for (const auto& support : family.supports) {
        for (Index j : support)
            require(j >= 0 && j < family.m, "check_sufficient_support: index out of range");
    }
    SupportCheckReport report;
    for (Index j = 0; j < family.m; ++j) {
        std::vector<bool> covered(static_cast<std::size_t>(family.m), false);
        for (const auto& support : family.supports) {
            if (std::find(support.begin(), support.end(), j) != support.end()) continue;
            for (Index i : support) covered[static_cast<std::size_t>(i)] = true;
        }
        std::vector<Index> missing;
        for (Index i = 0; i < family.m; ++i) {
            if (i != j && !covered[static_cast<std::size_t>(i)]) missing.push_back(i);
        }
        if (!missing.empty()) {
            report.holds = false;
            report.first_violating_feature = j;
            report.missing = std::move(missing);
            return report;
        }
    }
    report.holds = true;
    return report;
}

VariabilityReport check_task_variability(const WeightEnsemble& ensemble, double tol) {
    require(ensemble.m > 0, "check_task_variability: m must be positive");
    require(tol > 0.0, "check_task_variability: tol must be positive");
    for (const auto& W : ensemble.weights)
        require(W.cols() == ensemble.m, "check_task_variability: weight width mismatch");

    VariabilityReport report;
    std::vector<Vector> basis;  // orthonormal, grown greedily
    for (std::size_t t = 0; t < ensemble.weights.size(); ++t) {
        const Matrix& W = ensemble.weights[t];
        for (Index r = 0; r < W.rows(); ++r) {
            Vector v = W.row(r).transpose();
            const double scale = std::max(1.0, v.norm());
            for (const Vector& b : basis) v -= b.dot(v) * b;
            for (const Vector& b : basis) v -= b.dot(v) * b;  // second pass kills drift
            if (v.norm() > tol * scale) {
                basis.push_back(v.normalized());
                report.rows_used.emplace_back(static_cast<Index>(t), r);
                if (static_cast<Index>(basis.size()) == ensemble.m) {
                    report.rank = ensemble.m;
                    report.holds = true;
                    return report;
                }
            }
        }
    }
    report.rank = static_cast<Index>(basis.size());
    report.holds = false;
    return report;
}

Matrix PermutationExtraction::to_matrix() const {
    Matrix out = Matrix::Zero(perm.size(), perm.size());
    for (Index i = 0; i < perm.size(); ++i) out(i, perm(i)) = scales(i);
    return out;
}

PermutationExtraction extract_permutation(const Matrix& L) {
    require(L.rows() == L.cols(), "extract_permutation: matrix must be square");
    require(L.rows() > 0, "extract_permutation: empty matrix");
    require_finite(L, "extract_permutation: matrix");
    const Index m = L.rows();

    // Assignment on log |L| with a finite sentinel for zero entries; any
    // permutation touching a zero entry scores far below any that avoids one.
    const double sentinel = -1e9;
    Matrix scores(m, m);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            const double a = std::abs(L(i, j));
            scores(i, j) = a > 0.0 ? std::log(a) : sentinel;
        }
    }
    const AssignmentResult assignment = best_assignment(scores);

    PermutationExtraction out;
    out.perm = assignment.perm;
    out.scales = Vector(m);
    for (Index i = 0; i < m; ++i) {
        const double v = L(i, out.perm(i));
        if (v == 0.0) {
            throw std::invalid_argument(
                "extract_permutation: no permutation avoids zero entries (matrix is "
                "numerically singular)");
        }
        out.scales(i) = v;
    }
    return out;
}

namespace {

struct OracleScan {
    const Matrix* gram;      // m x m, F^T F
    const Vector* rhs;       // m, F^T y
    double yy = 0.0;         // ||y||^2
    Index budget = 0;
    Index m = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    std::vector<Index> best_support;
    Vector best_w;

    void attempt(const std::vector<Index>& support) {
        if (support.empty()) {
            if (yy < best_sse) {
                best_sse = yy;
                best_support.clear();
                best_w = Vector();
            }
            return;
        }
        const Index s = static_cast<Index>(support.size());
        Matrix G(s, s);
        Vector b(s);
        for (Index a = 0; a < s; ++a) {
            b(a) = (*rhs)(support[static_cast<std::size_t>(a)]);
            for (Index c = 0; c < s; ++c) {
                G(a, c) = (*gram)(support[static_cast<std::size_t>(a)],
                                  support[static_cast<std::size_t>(c)]);
            }
        }
        Vector w;
        try {
            w = solve_psd(G, b);
        } catch (const FactorizationError&) {
            // Rank-deficient support: an independent subset realizes the same
            // fit and is scanned on its own.
            return;
        }
        const double sse = yy - 2.0 * w.dot(b) + w.dot(G * w);
        if (sse < best_sse) {
            best_sse = sse;
            best_support = support;
            best_w = w;
        }
    }

    void visit(std::vector<Index>& support) {
        attempt(support);
        if (static_cast<Index>(support.size()) == budget) return;
        const Index start = support.empty() ? 0 : support.back() + 1;
        for (Index j = start; j < m; ++j) {
            support.push_back(j);
            visit(support);
            support.pop_back();
        }
    }
};

}  // namespace

OracleFit l20_mle_oracle(const Matrix& F, const Vector& y, Index budget) {
    require(F.rows() == y.size(), "l20_mle_oracle: F and y row counts differ");
    require(F.cols() >= 1 && F.cols() <= 20, "l20_mle_oracle: m must be in [1, 20]");
    require(budget >= 0 && budget <= F.cols(), "l20_mle_oracle: budget must be in [0, m]");
    require_finite(F, "l20_mle_oracle: F");
    require_finite(y, "l20_mle_oracle: y");

    const Matrix gram = F.transpose() * F;
    const Vector rhs = F.transpose() * y;
    OracleScan scan;
    scan.gram = &gram;
    scan.rhs = &rhs;
    scan.yy = y.squaredNorm();
    scan.budget = budget;
    scan.m = F.cols();
    std::vector<Index> support;
    scan.visit(support);

    OracleFit fit;
    fit.w = Vector::Zero(F.cols());
    fit.support = scan.best_support;
    fit.sse = scan.best_sse;
    for (std::size_t a = 0; a < scan.best_support.size(); ++a) {
        fit.w(scan.best_support[a]) = scan.best_w(static_cast<Index>(a));
    }
    return fit;
}

OracleFit l20_mle_oracle(const TaskDataset& task, Index budget) {
    require(!task.is_classification(), "l20_mle_oracle: regression tasks only");
    return l20_mle_oracle(task.X, task.y, budget);
}

InvarianceReport verify_mle_invariance(const TaskDataset& task, const Matrix& L) {
    require(!task.is_classification(), "verify_mle_invariance: regression tasks only");
    require(L.rows() == L.cols() && L.rows() == task.X.cols(),
            "verify_mle_invariance: L must match the observation width");
    const Matrix& F = task.X;
    const Matrix mixed = F * L.transpose();

    const Vector w_base = Eigen::ColPivHouseholderQR<Matrix>(F).solve(task.y);
    const Vector w_mixed = Eigen::ColPivHouseholderQR<Matrix>(mixed).solve(task.y);
    const Vector pred_base = F * w_base;
    const Vector pred_mixed = mixed * w_mixed;

    InvarianceReport report;
    report.max_pred_diff = (pred_base - pred_mixed).cwiseAbs().maxCoeff();
    report.scale = std::max(1.0, pred_base.cwiseAbs().maxCoeff());
    return report;
}

PopulationCheckReport population_mle_check(const std::vector<TaskDataset>& tasks, const Matrix& L,
                                           double ridge_lambda) {
    require(!tasks.empty(), "population_mle_check: need at least one task");
    require(ridge_lambda >= 0.0, "population_mle_check: ridge_lambda must be nonnegative");
    const Index m = tasks.front().m();
    require(L.rows() == m && L.cols() == m, "population_mle_check: L must be m x m");

    Matrix W_true(static_cast<Index>(tasks.size()), m);
    Matrix W_hat(static_cast<Index>(tasks.size()), m);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const TaskDataset& task = tasks[t];
        require(task.m() == m, "population_mle_check: task width mismatch");
        require(!task.is_classification(), "population_mle_check: regression tasks only");
        RegressionProblem problem;
        problem.F = task.F_true * L.transpose();
        problem.Y = task.y;
        problem.l2_lambda = ridge_lambda;
        W_hat.row(static_cast<Index>(t)) = ridge_solve(problem).W.row(0);
        W_true.row(static_cast<Index>(t)) = task.w_true.transpose();
    }

    // W L^{-1} without forming the inverse: solve L^T Z = W^T.
    const Matrix target =
        Eigen::PartialPivLU<Matrix>(L.transpose()).solve(W_true.transpose()).transpose();

    PopulationCheckReport report;
    report.error_norm = (W_hat - target).norm();
    report.weight_norm = W_true.norm();
    return report;
}

}  // namespace srep
