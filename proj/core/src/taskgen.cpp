#include <srep/taskgen.hpp>

#include <srep/io.hpp>
#include <srep/linalg.hpp>

#include <json.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

namespace srep {

using nlohmann::json;

LatentSpec LatentSpec::ar(Index m, double base) {
    LatentSpec spec;
    spec.kind = Kind::ar_decay;
    spec.m = m;
    spec.param = base;
    spec.validate();
    return spec;
}

LatentSpec LatentSpec::grid(std::vector<Index> levels, double noise_alpha) {
    LatentSpec spec;
    spec.kind = Kind::grid;
    spec.m = static_cast<Index>(levels.size());
    spec.levels = std::move(levels);
    spec.noise_alpha = noise_alpha;
    spec.validate();
    return spec;
}

LatentSpec LatentSpec::equicorrelated(std::vector<Index> levels, double rho, double noise_alpha) {
    LatentSpec spec;
    spec.kind = Kind::equicorrelated;
    spec.m = static_cast<Index>(levels.size());
    spec.levels = std::move(levels);
    spec.param = rho;
    spec.noise_alpha = noise_alpha;
    spec.validate();
    return spec;
}

LatentSpec LatentSpec::shapes_grid(double rho, double noise_alpha) {
    return equicorrelated({10, 10, 10, 8, 4, 15}, rho, noise_alpha);
}

void LatentSpec::validate() const {
    require(m > 0, "LatentSpec: m must be positive");
    switch (kind) {
        case Kind::ar_decay:
            require(param >= 0.0 && param < 1.0, "LatentSpec: ar base must be in [0, 1)");
            require(levels.empty(), "LatentSpec: ar_decay takes no levels");
            break;
        case Kind::grid:
        case Kind::equicorrelated:
            require(static_cast<Index>(levels.size()) == m,
                    "LatentSpec: levels must have one entry per factor");
            for (Index c : levels) require(c >= 1, "LatentSpec: level counts must be positive");
            require(noise_alpha >= 0.0 && noise_alpha <= 1.0,
                    "LatentSpec: noise_alpha must be in [0, 1]");
            if (kind == Kind::equicorrelated)
                require(param >= 0.0 && param < 1.0, "LatentSpec: rho must be in [0, 1)");
            require(grid_size() <= Index(1) << 24, "LatentSpec: grid too large");
            break;
    }
}

Index LatentSpec::grid_size() const {
    Index total = 1;
    for (Index c : levels) total *= c;
    return total;
}

SupportSpec SupportSpec::bernoulli(double p) {
    SupportSpec spec;
    spec.kind = Kind::bernoulli;
    spec.p = p;
    return spec;
}

SupportSpec SupportSpec::block_partition(std::vector<std::vector<Index>> blocks) {
    SupportSpec spec;
    spec.kind = Kind::blocks;
    spec.blocks = std::move(blocks);
    return spec;
}

SupportSpec SupportSpec::contiguous_blocks(Index m, Index width) {
    require(width >= 1 && m >= 1 && m % width == 0,
            "SupportSpec: width must divide m");
    std::vector<std::vector<Index>> blocks;
    for (Index start = 0; start < m; start += width) {
        std::vector<Index> block;
        for (Index j = start; j < start + width; ++j) block.push_back(j);
        blocks.push_back(std::move(block));
    }
    return block_partition(std::move(blocks));
}

SupportSpec SupportSpec::fixed_size(Index size) {
    SupportSpec spec;
    spec.kind = Kind::fixed_size;
    spec.size = size;
    return spec;
}

SupportSpec SupportSpec::full() {
    SupportSpec spec;
    spec.kind = Kind::full;
    return spec;
}

SupportSpec SupportSpec::laplace_dense(double mu, double b) {
    SupportSpec spec;
    spec.kind = Kind::laplace_dense;
    spec.mu = mu;
    spec.b = b;
    return spec;
}

void SupportSpec::validate(Index m) const {
    require(m > 0, "SupportSpec: m must be positive");
    switch (kind) {
        case Kind::bernoulli:
            require(p > 0.0 && p <= 1.0, "SupportSpec: bernoulli p must be in (0, 1]");
            break;
        case Kind::blocks: {
            require(!blocks.empty(), "SupportSpec: blocks must be nonempty");
            std::vector<bool> seen(static_cast<std::size_t>(m), false);
            for (const auto& block : blocks) {
                require(!block.empty(), "SupportSpec: empty block");
                for (Index j : block) {
                    require(j >= 0 && j < m, "SupportSpec: block index out of range");
                    require(!seen[static_cast<std::size_t>(j)],
                            "SupportSpec: blocks must be disjoint");
                    seen[static_cast<std::size_t>(j)] = true;
                }
            }
            break;
        }
        case Kind::fixed_size:
            require(size >= 1 && size <= m, "SupportSpec: fixed size must be in [1, m]");
            break;
        case Kind::full:
            break;
        case Kind::laplace_dense:
            require(b > 0.0, "SupportSpec: laplace scale must be positive");
            break;
    }
}

namespace {

double stateless_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return static_cast<double>(mix64(mix64(seed, a), b) >> 11) * 0x1.0p-53;
}

}  // namespace

LatentSampler::LatentSampler(LatentSpec spec, std::uint64_t noise_seed)
    : spec_(std::move(spec)), noise_seed_(noise_seed) {
    spec_.validate();
    if (spec_.kind == LatentSpec::Kind::ar_decay) {
        Matrix cov(spec_.m, spec_.m);
        for (Index i = 0; i < spec_.m; ++i)
            for (Index j = 0; j < spec_.m; ++j)
                cov(i, j) = std::pow(spec_.param, std::abs(static_cast<double>(i - j)));
        ar_chol_ = cholesky_lower(cov);
        return;
    }

    // Standardized level values and spacings per factor.
    std_levels_.resize(static_cast<std::size_t>(spec_.m));
    spacing_.assign(static_cast<std::size_t>(spec_.m), 0.0);
    for (Index f = 0; f < spec_.m; ++f) {
        const Index c = spec_.levels[static_cast<std::size_t>(f)];
        std::vector<double> values(static_cast<std::size_t>(c), 0.0);
        if (c > 1) {
            for (Index i = 0; i < c; ++i)
                values[static_cast<std::size_t>(i)] =
                    static_cast<double>(i) / static_cast<double>(c - 1);
            if (spec_.standardize) {
                double mean = 0.0;
                for (double v : values) mean += v;
                mean /= static_cast<double>(c);
                double var = 0.0;
                for (double v : values) var += (v - mean) * (v - mean);
                var /= static_cast<double>(c);
                const double sd = std::sqrt(var);
                for (double& v : values) v = (v - mean) / sd;
            }
            spacing_[static_cast<std::size_t>(f)] =
                values[1] - values[0];  // uniform after the affine map
        }
        std_levels_[static_cast<std::size_t>(f)] = std::move(values);
    }

    // Point weights: uniform for plain grids, Gaussian N(0, Sigma_rho) density
    // at the jittered points for the correlated family. Sigma_rho^{-1} =
    // (I - rho/(1+(m-1)rho) * 11^T) / (1-rho), so only ||z||^2 and sum(z) enter.
    const Index total = spec_.grid_size();
    cumulative_.assign(static_cast<std::size_t>(total), 0.0);
    const double rho = spec_.kind == LatentSpec::Kind::equicorrelated ? spec_.param : -1.0;
    std::vector<double> logw;
    double logw_max = 0.0;
    if (rho >= 0.0) {
        logw.assign(static_cast<std::size_t>(total), 0.0);
        const double md = static_cast<double>(spec_.m);
        const double shrink = rho / (1.0 + (md - 1.0) * rho);
        for (Index idx = 0; idx < total; ++idx) {
            const Vector z = grid_point(idx);
            const double s = z.sum();
            const double q = (z.squaredNorm() - shrink * s * s) / (1.0 - rho);
            logw[static_cast<std::size_t>(idx)] = -0.5 * q;
        }
        logw_max = *std::max_element(logw.begin(), logw.end());
    }
    double running = 0.0;
    for (Index idx = 0; idx < total; ++idx) {
        running += rho >= 0.0 ? std::exp(logw[static_cast<std::size_t>(idx)] - logw_max) : 1.0;
        cumulative_[static_cast<std::size_t>(idx)] = running;
    }
}

Vector LatentSampler::grid_point_exact(Index flat_index) const {
    require(spec_.kind != LatentSpec::Kind::ar_decay, "grid_point: not a grid sampler");
    require(flat_index >= 0 && flat_index < spec_.grid_size(), "grid_point: index out of range");
    Vector z(spec_.m);
    Index rem = flat_index;
    for (Index f = spec_.m - 1; f >= 0; --f) {
        const Index c = spec_.levels[static_cast<std::size_t>(f)];
        const Index digit = rem % c;
        rem /= c;
        z(f) = std_levels_[static_cast<std::size_t>(f)][static_cast<std::size_t>(digit)];
    }
    return z;
}

Vector LatentSampler::grid_point(Index flat_index) const {
    Vector z = grid_point_exact(flat_index);
    if (spec_.noise_alpha > 0.0) {
        for (Index f = 0; f < spec_.m; ++f) {
            const double u = stateless_uniform(noise_seed_, static_cast<std::uint64_t>(flat_index),
                                               static_cast<std::uint64_t>(f));
            z(f) += (u - 0.5) * spec_.noise_alpha * spacing_[static_cast<std::size_t>(f)];
        }
    }
    return z;
}

double LatentSampler::factor_spacing(Index factor) const {
    require(factor >= 0 && factor < spec_.m, "factor_spacing: index out of range");
    return spacing_[static_cast<std::size_t>(factor)];
}

Matrix LatentSampler::sample(Index n, RngStream& rng) const {
    require(n > 0, "LatentSampler::sample: n must be positive");
    Matrix Z(n, spec_.m);
    if (spec_.kind == LatentSpec::Kind::ar_decay) {
        Vector g(spec_.m);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < spec_.m; ++j) g(j) = rng.normal();
            Z.row(i) = (ar_chol_ * g).transpose();
        }
        return Z;
    }
    const double total = cumulative_.back();
    for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform01() * total;
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const Index idx = std::min<Index>(static_cast<Index>(it - cumulative_.begin()),
                                          spec_.grid_size() - 1);
        Z.row(i) = grid_point(idx).transpose();
    }
    return Z;
}

Matrix sample_latents(const LatentSpec& spec, Index n, RngStream& rng) {
    LatentSampler sampler(spec, mix64(rng.seed(), 0x6c617465u));
    return sampler.sample(n, rng);
}

TaskWeight sample_task_weight(const SupportSpec& spec, Index m, RngStream& rng) {
    spec.validate(m);
    TaskWeight out;
    out.w = Vector::Zero(m);

    std::vector<bool> mask(static_cast<std::size_t>(m), false);
    switch (spec.kind) {
        case SupportSpec::Kind::bernoulli: {
            bool any = false;
            while (!any) {  // empty supports are resampled, never returned
                for (Index j = 0; j < m; ++j) {
                    mask[static_cast<std::size_t>(j)] = rng.uniform01() < spec.p;
                    any = any || mask[static_cast<std::size_t>(j)];
                }
            }
            break;
        }
        case SupportSpec::Kind::blocks: {
            const auto pick = rng.uniform_int(spec.blocks.size());
            for (Index j : spec.blocks[pick]) mask[static_cast<std::size_t>(j)] = true;
            break;
        }
        case SupportSpec::Kind::fixed_size: {
            std::vector<Index> order(static_cast<std::size_t>(m));
            std::iota(order.begin(), order.end(), Index(0));
            for (Index i = 0; i < spec.size; ++i) {
                const Index j =
                    i + static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(m - i)));
                std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
            }
            for (Index i = 0; i < spec.size; ++i)
                mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
            break;
        }
        case SupportSpec::Kind::full:
            std::fill(mask.begin(), mask.end(), true);
            break;
        case SupportSpec::Kind::laplace_dense: {
            for (Index j = 0; j < m; ++j) {
                double u = rng.uniform01();
                while (u == 0.0) u = rng.uniform01();
                const double q = u - 0.5;
                const double sign = q < 0.0 ? -1.0 : 1.0;
                out.w(j) = spec.mu - spec.b * sign * std::log1p(-2.0 * std::abs(q));
            }
            std::fill(mask.begin(), mask.end(), true);
            break;
        }
    }

    if (spec.kind != SupportSpec::Kind::laplace_dense) {
        for (Index j = 0; j < m; ++j) {
            const double g = rng.normal();  // one draw per coordinate, fixed order
            if (mask[static_cast<std::size_t>(j)]) out.w(j) = g;
        }
    }
    for (Index j = 0; j < m; ++j) {
        if (mask[static_cast<std::size_t>(j)]) out.support.push_back(j);
    }
    return out;
}

TaskDataset make_task(const LatentSampler& latents, const SupportSpec& support, Index n,
                      double noise_sigma, RngStream& rng) {
    require(n > 0, "make_task: n must be positive");
    require(noise_sigma >= 0.0, "make_task: noise_sigma must be nonnegative");
    const Index m = latents.spec().m;
    TaskDataset task;
    task.F_true = latents.sample(n, rng);
    TaskWeight weight = sample_task_weight(support, m, rng);
    task.w_true = std::move(weight.w);
    task.support_true = std::move(weight.support);
    task.y = task.F_true * task.w_true;
    for (Index i = 0; i < n; ++i) task.y(i) += noise_sigma * rng.normal();
    task.X = task.F_true;
    task.noise_sigma = noise_sigma;
    return task;
}

TaskDataset make_task(const LatentSpec& latents, const SupportSpec& support, Index n,
                      double noise_sigma, RngStream& rng) {
    LatentSampler sampler(latents, mix64(rng.seed(), 0x6c617465u));
    return make_task(sampler, support, n, noise_sigma, rng);
}

TaskDataset make_classification_task(Index m, Index k, Index per_class, double mean_scale,
                                     RngStream& rng, Index informative) {
    require(m > 0 && k >= 2 && per_class > 0, "make_classification_task: bad shape");
    require(mean_scale > 0.0, "make_classification_task: mean_scale must be positive");
    require(informative >= 0 && informative <= m,
            "make_classification_task: informative count out of range");
    if (informative == 0) informative = m;
    // Draw order is frozen: informative subset (when proper), then class
    // means over that subset, then samples row-major.
    std::vector<Index> active(static_cast<std::size_t>(m));
    std::iota(active.begin(), active.end(), Index(0));
    if (informative < m) {
        for (Index i = 0; i < informative; ++i) {
            const Index j =
                i + static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(m - i)));
            std::swap(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);
        }
        active.resize(static_cast<std::size_t>(informative));
        std::sort(active.begin(), active.end());
    }
    Matrix means = Matrix::Zero(k, m);
    for (Index c = 0; c < k; ++c)
        for (Index j : active) means(c, j) = mean_scale * rng.normal();
    const Index n = k * per_class;
    TaskDataset task;
    task.F_true = Matrix(n, m);
    task.Y = Matrix::Zero(n, k);
    for (Index c = 0; c < k; ++c) {
        for (Index s = 0; s < per_class; ++s) {
            const Index row = c * per_class + s;
            for (Index j = 0; j < m; ++j) task.F_true(row, j) = means(c, j) + rng.normal();
            task.Y(row, c) = 1.0;
        }
    }
    task.X = task.F_true;
    task.support_true = std::move(active);
    return task;
}

TaskDataset entangle(const TaskDataset& task, const Matrix& L) {
    require(L.rows() == L.cols(), "entangle: mixing matrix must be square");
    require(L.rows() == task.m(), "entangle: mixing matrix must be m x m");
    require_finite(L, "entangle: mixing matrix");
    Eigen::JacobiSVD<Matrix> svd(L);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    require(smin > 0.0 && smax / smin <= 1e12, "entangle: mixing matrix is numerically singular");
    TaskDataset out = task;
    out.X = task.F_true * L.transpose();
    return out;
}

std::vector<TaskDataset> entangle(const std::vector<TaskDataset>& tasks, const Matrix& L) {
    std::vector<TaskDataset> out;
    out.reserve(tasks.size());
    for (const auto& task : tasks) out.push_back(entangle(task, L));
    return out;
}

namespace {

json latent_to_json(const LatentSpec& spec) {
    json j;
    switch (spec.kind) {
        case LatentSpec::Kind::ar_decay:
            j["kind"] = "ar_decay";
            j["base"] = spec.param;
            break;
        case LatentSpec::Kind::grid:
            j["kind"] = "grid";
            break;
        case LatentSpec::Kind::equicorrelated:
            j["kind"] = "equicorrelated";
            j["rho"] = spec.param;
            break;
    }
    j["m"] = spec.m;
    if (!spec.levels.empty()) {
        j["levels"] = spec.levels;
        j["noise_alpha"] = spec.noise_alpha;
    }
    j["standardize"] = spec.standardize;
    return j;
}

LatentSpec latent_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ar_decay") {
        return LatentSpec::ar(j.at("m").get<Index>(), j.at("base").get<double>());
    }
    std::vector<Index> levels = j.at("levels").get<std::vector<Index>>();
    const double alpha = j.value("noise_alpha", 0.0);
    LatentSpec spec = kind == "grid"
                          ? LatentSpec::grid(std::move(levels), alpha)
                          : LatentSpec::equicorrelated(std::move(levels), j.at("rho").get<double>(),
                                                       alpha);
    spec.standardize = j.value("standardize", true);
    spec.validate();
    return spec;
}

json support_to_json(const SupportSpec& spec) {
    json j;
    switch (spec.kind) {
        case SupportSpec::Kind::bernoulli:
            j["kind"] = "bernoulli";
            j["p"] = spec.p;
            break;
        case SupportSpec::Kind::blocks:
            j["kind"] = "blocks";
            j["blocks"] = spec.blocks;
            break;
        case SupportSpec::Kind::fixed_size:
            j["kind"] = "fixed_size";
            j["size"] = spec.size;
            break;
        case SupportSpec::Kind::full:
            j["kind"] = "full";
            break;
        case SupportSpec::Kind::laplace_dense:
            j["kind"] = "laplace_dense";
            j["mu"] = spec.mu;
            j["b"] = spec.b;
            break;
    }
    return j;
}

SupportSpec support_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bernoulli") return SupportSpec::bernoulli(j.at("p").get<double>());
    if (kind == "blocks")
        return SupportSpec::block_partition(j.at("blocks").get<std::vector<std::vector<Index>>>());
    if (kind == "fixed_size") return SupportSpec::fixed_size(j.at("size").get<Index>());
    if (kind == "full") return SupportSpec::full();
    if (kind == "laplace_dense")
        return SupportSpec::laplace_dense(j.at("mu").get<double>(), j.at("b").get<double>());
    throw std::invalid_argument("SupportSpec: unknown kind " + kind);
}

}  // namespace

void save_bundle(const std::string& dir, const TaskBundle& bundle) {
    require(!bundle.tasks.empty(), "save_bundle: empty bundle");
    const TaskDataset& first = bundle.tasks.front();
    for (const auto& task : bundle.tasks) {
        require(task.n() == first.n() && task.d() == first.d() && task.m() == first.m() &&
                    task.is_classification() == first.is_classification(),
                "save_bundle: tasks must share dimensions");
    }
    std::filesystem::create_directories(dir);

    json manifest;
    manifest["version"] = 1;
    manifest["seed"] = bundle.seed;
    manifest["n_tasks"] = bundle.tasks.size();
    manifest["dims"] = {{"n", first.n()},
                        {"d", first.d()},
                        {"m", first.m()},
                        {"k", first.is_classification() ? first.Y.cols() : Index(0)}};
    manifest["noise_sigma"] = first.noise_sigma;
    manifest["latent"] = latent_to_json(bundle.latent);
    manifest["support"] = support_to_json(bundle.support);
    json tasks_meta = json::array();
    for (const auto& task : bundle.tasks) {
        json meta;
        if (!task.is_classification()) {
            meta["w_true"] = std::vector<double>(task.w_true.data(),
                                                 task.w_true.data() + task.w_true.size());
            meta["support"] = task.support_true;
        }
        tasks_meta.push_back(std::move(meta));
    }
    manifest["tasks"] = std::move(tasks_meta);
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");

    std::string csv = "task,row,target";
    for (Index j = 0; j < first.d(); ++j) csv += ",x" + std::to_string(j);
    for (Index j = 0; j < first.m(); ++j) csv += ",f" + std::to_string(j);
    csv.push_back('\n');
    for (std::size_t t = 0; t < bundle.tasks.size(); ++t) {
        const TaskDataset& task = bundle.tasks[t];
        std::vector<Index> labels;
        if (task.is_classification()) {
            labels.resize(static_cast<std::size_t>(task.n()));
            for (Index i = 0; i < task.n(); ++i) {
                for (Index l = 0; l < task.Y.cols(); ++l) {
                    if (task.Y(i, l) == 1.0) labels[static_cast<std::size_t>(i)] = l;
                }
            }
        }
        for (Index i = 0; i < task.n(); ++i) {
            csv += std::to_string(t);
            csv += ',';
            csv += std::to_string(i);
            csv += ',';
            csv += task.is_classification() ? std::to_string(labels[static_cast<std::size_t>(i)])
                                            : format_double(task.y(i));
            for (Index j = 0; j < task.d(); ++j) {
                csv += ',';
                csv += format_double(task.X(i, j));
            }
            for (Index j = 0; j < task.m(); ++j) {
                csv += ',';
                csv += format_double(task.F_true(i, j));
            }
            csv.push_back('\n');
        }
    }
    write_text_file(dir + "/tasks.csv", csv);
}

TaskBundle load_bundle(const std::string& dir) {
    const json manifest = json::parse(read_text_file(dir + "/manifest.json"));
    TaskBundle bundle;
    bundle.seed = manifest.at("seed").get<std::uint64_t>();
    bundle.latent = latent_from_json(manifest.at("latent"));
    bundle.support = support_from_json(manifest.at("support"));
    const Index n = manifest.at("dims").at("n").get<Index>();
    const Index d = manifest.at("dims").at("d").get<Index>();
    const Index m = manifest.at("dims").at("m").get<Index>();
    const Index k = manifest.at("dims").at("k").get<Index>();
    const double noise_sigma = manifest.at("noise_sigma").get<double>();
    const std::size_t n_tasks = manifest.at("n_tasks").get<std::size_t>();

    bundle.tasks.assign(n_tasks, TaskDataset{});
    for (std::size_t t = 0; t < n_tasks; ++t) {
        TaskDataset& task = bundle.tasks[t];
        task.X = Matrix(n, d);
        task.F_true = Matrix(n, m);
        task.noise_sigma = noise_sigma;
        if (k > 0) {
            task.Y = Matrix::Zero(n, k);
        } else {
            task.y = Vector(n);
            const json& meta = manifest.at("tasks").at(t);
            const auto w = meta.at("w_true").get<std::vector<double>>();
            require(static_cast<Index>(w.size()) == m, "load_bundle: w_true size mismatch");
            task.w_true = Eigen::Map<const Vector>(w.data(), m);
            task.support_true = meta.at("support").get<std::vector<Index>>();
        }
    }

    std::istringstream lines(read_text_file(dir + "/tasks.csv"));
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        require(static_cast<Index>(cells.size()) == 3 + d + m, "load_bundle: bad csv row");
        const std::size_t t = std::stoul(cells[0]);
        const Index i = static_cast<Index>(std::stol(cells[1]));
        require(t < n_tasks && i >= 0 && i < n, "load_bundle: row out of range");
        TaskDataset& task = bundle.tasks[t];
        if (k > 0) {
            const Index label = static_cast<Index>(std::stol(cells[2]));
            require(label >= 0 && label < k, "load_bundle: label out of range");
            task.Y(i, label) = 1.0;
        } else {
            task.y(i) = std::stod(cells[2]);
        }
        for (Index j = 0; j < d; ++j) task.X(i, j) = std::stod(cells[static_cast<std::size_t>(3 + j)]);
        for (Index j = 0; j < m; ++j)
            task.F_true(i, j) = std::stod(cells[static_cast<std::size_t>(3 + d + j)]);
    }
    return bundle;
}

std::string latent_spec_to_json(const LatentSpec& spec) { return latent_to_json(spec).dump(); }

LatentSpec latent_spec_from_json(const std::string& text) {
    return latent_from_json(json::parse(text));
}

std::string support_spec_to_json(const SupportSpec& spec) { return support_to_json(spec).dump(); }

SupportSpec support_spec_from_json(const std::string& text) {
    return support_from_json(json::parse(text));
}

TaskBundle generate_bundle(const LatentSpec& latent, const SupportSpec& support, Index tasks,
                           Index n, double noise_sigma, bool entangle_orthogonal,
                           std::uint64_t seed) {
    require(tasks > 0, "generate_bundle: need at least one task");
    TaskBundle bundle;
    bundle.latent = latent;
    bundle.support = support;
    bundle.seed = seed;
    RngStream root(seed);
    LatentSampler sampler(latent, mix64(seed, 0x6c617465u));
    for (Index t = 0; t < tasks; ++t) {
        RngStream task_rng = root.child(static_cast<std::uint64_t>(t));
        bundle.tasks.push_back(make_task(sampler, support, n, noise_sigma, task_rng));
    }
    if (entangle_orthogonal) {
        RngStream mix_rng = root.child(0x6d6978u);
        const Matrix L = sample_orthogonal(latent.m, mix_rng);
        bundle.tasks = entangle(bundle.tasks, L);
    }
    return bundle;
}

}  // namespace srep
