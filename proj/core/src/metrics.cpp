#include <srep/metrics.hpp>

#include <srep/linalg.hpp>

#include <algorithm>
#include <cmath>

namespace srep {

double pearson(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "pearson: length mismatch");
    require(x.size() >= 2, "pearson: need at least two samples");
    require_finite(x, "pearson: x");
    require_finite(y, "pearson: y");
    const double n = static_cast<double>(x.size());
    const Vector xc = x.array() - x.sum() / n;
    const Vector yc = y.array() - y.sum() / n;
    const double vx = xc.squaredNorm();
    const double vy = yc.squaredNorm();
    if (vx == 0.0 || vy == 0.0) return 0.0;
    const double r = xc.dot(yc) / std::sqrt(vx * vy);
    return std::clamp(r, -1.0, 1.0);
}

namespace {

void check_pair(const Matrix& Z_true, const Matrix& Z_learned, const char* who) {
    require(Z_true.rows() == Z_learned.rows(), std::string(who) + ": row counts differ");
    require(Z_true.rows() >= 2, std::string(who) + ": need at least two samples");
    require(Z_true.cols() >= 1 && Z_learned.cols() >= 1, std::string(who) + ": empty features");
    require_finite(Z_true, std::string(who) + ": Z_true");
    require_finite(Z_learned, std::string(who) + ": Z_learned");
}

// Entropy of a nonnegative mass vector, normalized to [0, 1] by log(len).
// Conventions: zero mass -> 0 (caller decides what that means), equal masses
// short-circuit to the exact maximum 1, one-hot rows evaluate to exactly 0.
double normalized_entropy(const Vector& mass) {
    const Index len = mass.size();
    if (len <= 1) return 0.0;
    const double total = mass.sum();
    if (total == 0.0) return 0.0;
    bool all_equal = true;
    for (Index i = 1; i < len && all_equal; ++i) all_equal = mass(i) == mass(0);
    if (all_equal) return 1.0;
    double h = 0.0;
    for (Index i = 0; i < len; ++i) {
        const double p = mass(i) / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(len)), 0.0, 1.0);
}

}  // namespace

MccResult mcc(const Matrix& Z_true, const Matrix& Z_learned) {
    check_pair(Z_true, Z_learned, "mcc");
    require(Z_true.cols() == Z_learned.cols(), "mcc: needs equally many true and learned factors");
    const Index m = Z_true.cols();
    Matrix C(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) C(i, j) = std::abs(pearson(Z_true.col(i), Z_learned.col(j)));
    const AssignmentResult assignment = best_assignment(C);
    MccResult out;
    out.perm = assignment.perm;
    double total = 0.0;
    for (Index i = 0; i < m; ++i) total += C(i, out.perm(i));
    out.value = total / static_cast<double>(m);
    return out;
}

double r_score(const Matrix& Z_true, const Matrix& Z_learned) {
    check_pair(Z_true, Z_learned, "r_score");
    const double n = static_cast<double>(Z_true.rows());
    Matrix Zc = Z_learned;
    for (Index j = 0; j < Zc.cols(); ++j) Zc.col(j).array() -= Zc.col(j).sum() / n;
    Matrix G = Zc.transpose() * Zc;
    G.diagonal().array() += 1e-10;

    double total = 0.0;
    for (Index i = 0; i < Z_true.cols(); ++i) {
        Vector target = Z_true.col(i);
        target.array() -= target.sum() / n;
        if (target.squaredNorm() == 0.0) continue;  // dead factor scores 0
        const Vector beta = solve_psd(G, Vector(Zc.transpose() * target));
        const Vector fitted = Zc * beta;
        total += std::abs(pearson(fitted, target));
    }
    return total / static_cast<double>(Z_true.cols());
}

DciResult dci_from_importance(const Matrix& importance) {
    require(importance.rows() >= 1 && importance.cols() >= 1, "dci: empty importance");
    require_finite(importance, "dci: importance");
    require(importance.minCoeff() >= 0.0, "dci: importance must be nonnegative");
    DciResult out;
    out.importance = importance;
    double d = 0.0;
    for (Index i = 0; i < importance.rows(); ++i) {
        const Vector row = importance.row(i).transpose();
        d += row.sum() == 0.0 ? 0.0 : 1.0 - normalized_entropy(row);
    }
    out.disentanglement = d / static_cast<double>(importance.rows());
    double c = 0.0;
    for (Index j = 0; j < importance.cols(); ++j) {
        const Vector col = importance.col(j);
        c += col.sum() == 0.0 ? 0.0 : 1.0 - normalized_entropy(col);
    }
    out.completeness = c / static_cast<double>(importance.cols());
    return out;
}

DciResult dci(const Matrix& Z_true, const Matrix& Z_learned) {
    check_pair(Z_true, Z_learned, "dci");
    const double n = static_cast<double>(Z_true.rows());

    // Standardize learned features; constant columns stay identically zero so
    // they can never absorb importance.
    Matrix Zs = Z_learned;
    for (Index j = 0; j < Zs.cols(); ++j) {
        Zs.col(j).array() -= Zs.col(j).sum() / n;
        const double sd = std::sqrt(Zs.col(j).squaredNorm() / n);
        if (sd > 0.0) Zs.col(j) /= sd;
    }
    Matrix G = Zs.transpose() * Zs;
    G.diagonal().array() += 1e-10;

    Matrix importance(Z_true.cols(), Z_learned.cols());
    for (Index i = 0; i < Z_true.cols(); ++i) {
        Vector target = Z_true.col(i);
        target.array() -= target.sum() / n;
        const Vector beta = solve_psd(G, Vector(Zs.transpose() * target));
        importance.row(i) = beta.cwiseAbs().transpose();
    }
    DciResult out = dci_from_importance(importance);
    return out;
}

double r2(const Vector& y_true, const Vector& y_pred) {
    require(y_true.size() == y_pred.size(), "r2: length mismatch");
    require(y_true.size() >= 2, "r2: need at least two samples");
    require_finite(y_true, "r2: y_true");
    require_finite(y_pred, "r2: y_pred");
    const double n = static_cast<double>(y_true.size());
    const double mean = y_true.sum() / n;
    const double ss_tot = (y_true.array() - mean).matrix().squaredNorm();
    require(ss_tot > 0.0, "r2: y_true is constant");
    const double ss_res = (y_true - y_pred).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

MetricsReport evaluate_representation(const Matrix& Z_true, const Matrix& Z_learned) {
    MetricsReport report;
    MccResult mcc_result = mcc(Z_true, Z_learned);
    report.mcc = mcc_result.value;
    report.perm = std::move(mcc_result.perm);
    report.r = r_score(Z_true, Z_learned);
    const DciResult dci_result = dci(Z_true, Z_learned);
    report.dci_disentanglement = dci_result.disentanglement;
    report.dci_completeness = dci_result.completeness;
    if (report.mcc > report.r + 1e-9) {
        throw std::logic_error("evaluate_representation: mcc exceeds r beyond numerical slack");
    }
    return report;
}

}  // namespace srep
