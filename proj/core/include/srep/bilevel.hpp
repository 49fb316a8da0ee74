#pragma once

#include <srep/common.hpp>
#include <srep/regression.hpp>
#include <srep/rng.hpp>
#include <srep/taskgen.hpp>

#include <functional>
#include <vector>

namespace srep {

// Linear representation x -> Theta x mapping d observations to m features.
struct LinearRepresentation {
    Matrix Theta;  // m x d

    [[nodiscard]] Matrix features(const Matrix& X) const { return X * Theta.transpose(); }
};

enum class InnerKind { lasso, ridge };

struct BilevelConfig {
    Index m = 0;
    Index d = 0;
    InnerKind inner = InnerKind::lasso;
    double lambda = 0.1;     // shared inner penalty, absolute scale
    double outer_lr = 0.05;
    Index outer_steps = 2000;
    Index tasks_per_step = 8;
    double holdout = 0.5;    // fraction of each task scoring the outer loss
    bool row_normalize = true;
    double inner_tol = 1e-10;
    Index inner_max_sweeps = 100000;
    double divergence_factor = 1e3;

    void validate() const;
};

// Inner fit on the full task through the representation. Lasso goes through
// coordinate descent; ridge through the closed-form solve.
[[nodiscard]] FitResult inner_solve(const LinearRepresentation& rep, const TaskDataset& task,
                                    double lambda, InnerKind kind, const BilevelConfig& cfg = {});

// Gradient of the held-out loss with respect to Theta via fixed-support
// implicit differentiation of the inner stationarity system. The last
// round(n * holdout) samples form the validation half. Tasks whose restricted
// Gram fails to factor, or whose inner solve cannot certify its stopping
// tolerance, come back skipped; an empty inner support yields an exactly
// zero gradient.
struct TaskGrad {
    Matrix grad;          // m x d
    double outer_loss = 0.0;
    Index support_size = 0;
    bool skipped = false;
};

[[nodiscard]] TaskGrad hypergradient(const LinearRepresentation& rep, const TaskDataset& task,
                                     double lambda, InnerKind kind, const BilevelConfig& cfg);

struct TraceRow {
    double outer_loss = 0.0;          // mean over the step's tasks, before the update
    double mean_support_fraction = 0.0;
    Index skipped = 0;
};

struct TrainResult {
    LinearRepresentation rep;
    std::vector<TraceRow> trace;
};

using TaskStream = std::function<TaskDataset(RngStream&)>;

// Projected gradient descent on Theta: fresh tasks every step, mean task
// hypergradient, optional row renormalization (applied at initialization too,
// so iterates are invariant to the initial row scales). Throws
// DivergenceError when the outer loss exceeds divergence_factor times its
// initial value.
[[nodiscard]] TrainResult train(const BilevelConfig& cfg, const TaskStream& stream,
                                RngStream& rng);
[[nodiscard]] TrainResult train(const BilevelConfig& cfg, const TaskStream& stream, RngStream& rng,
                                LinearRepresentation init);

}  // namespace srep
