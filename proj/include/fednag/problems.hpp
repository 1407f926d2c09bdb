#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fednag/types.hpp"

namespace fednag {

/// In-memory sample store. `labels` carries class ids for classification
/// data; `targets` carries real-valued regression targets (for class data
/// they mirror the labels so the same set drives both model families).
struct Dataset {
    Eigen::MatrixXd features;   // sample-major, one row per sample
    std::vector<int> labels;    // empty for pure regression data
    Eigen::VectorXd targets;
    int num_classes = 0;

    std::int64_t sample_count() const { return features.rows(); }
    int feature_dim() const { return static_cast<int>(features.cols()); }
};

/// Assignment of sample indices to workers. Shards are disjoint and cover
/// exactly the selected subset.
struct Partition {
    std::vector<std::vector<std::int32_t>> shards;

    int worker_count() const { return static_cast<int>(shards.size()); }
    std::vector<std::int64_t> sizes() const {
        std::vector<std::int64_t> out;
        out.reserve(shards.size());
        for (const auto& s : shards) out.push_back(static_cast<std::int64_t>(s.size()));
        return out;
    }
};

/// Loss oracle for one worker's shard. `batch_grad` draws a reproducible
/// mini-batch from the shard keyed by (seed, worker, iteration); it is null
/// for analytic problems.
struct WorkerOracle {
    std::int64_t samples = 1;
    std::function<double(const Vector&)> loss;
    std::function<Vector(const Vector&)> grad;
    std::function<Vector(const Vector&, int, std::uint64_t)> batch_grad;
};

/// Known constants of an analytically constructed problem.
struct AnalyticInfo {
    double beta = 0.0;    // smoothness constant, valid for every worker loss
    double rho = 0.0;     // gradient-norm bound when a region is fixed; 0 = region-dependent
    Vector w_star;        // global minimizer
    bool beta_exact = false;
};

/// A convex loss bundle: the global objective, its gradient, and the
/// per-worker oracles whose sample-weighted average it is.
struct Problem {
    int dimension = 0;
    std::function<double(const Vector&)> loss;
    std::function<Vector(const Vector&)> grad;
    std::function<Vector(const Vector&, int, std::uint64_t)> batch_grad;  // pooled data; may be null
    std::vector<WorkerOracle> workers;
    std::optional<AnalyticInfo> analytic;
    int num_classes = 0;        // > 0 when the model is a classifier
    int feature_dim = 0;        // > 0 for dataset-backed problems

    int worker_count() const { return static_cast<int>(workers.size()); }
    std::int64_t total_samples() const {
        std::int64_t d = 0;
        for (const auto& w : workers) d += w.samples;
        return d;
    }
};

/// Synthetic convex benchmark: every worker minimizes
/// 0.5 (w-c_i)' H (w-c_i) around its own center c_i. One shared
/// positive-definite H keeps the smoothness constant exact for every worker
/// and makes the worker-vs-global gradient difference constant in w.
/// `heterogeneity` scales the spread of the centers; 0 gives identical
/// workers. Deterministic per seed.
Problem make_quadratic(int dimension, int workers, std::uint64_t seed, double heterogeneity);

/// Least-squares regression of `targets` on `features`, sharded by
/// `partition`. Losses carry the 1/2 factor, so the smoothness constant is
/// the top eigenvalue of the empirical second-moment matrix.
Problem make_linear_regression(const Dataset& data, const Partition& partition);

/// Multinomial cross-entropy classifier with optional L2 term. The recorded
/// smoothness constant is the 1/4 spectral bound of the feature
/// second-moment matrix plus the L2 coefficient; an upper estimate, not the
/// tight constant.
Problem make_logistic_regression(const Dataset& data, const Partition& partition,
                                 double l2 = 0.0);

enum class IdxErrorKind { BadMagic, Truncated, CountMismatch, Io };

class IdxError : public std::runtime_error {
public:
    IdxError(IdxErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    IdxErrorKind kind() const { return kind_; }

private:
    IdxErrorKind kind_;
};

/// Reads an IDX image/label file pair (big-endian headers, magic 2051 for
/// images and 2049 for labels). Pixels are scaled by 1/255. `limit` < 0
/// loads everything.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::int64_t limit = -1);

/// Writes a dataset back out as an IDX pair (28x28 ubyte images assumed to
/// live in [0,1]); used by fixtures and the synthetic fallback.
void write_idx(const Dataset& data, int rows, int cols,
               const std::string& images_path, const std::string& labels_path);

/// Splits `sample_count` indices into `workers` shards whose sizes differ by
/// at most one; the remainder goes to the lowest-indexed workers. `shuffle`
/// permutes indices first (deterministic per seed).
Partition partition_even(std::int64_t sample_count, int workers, std::uint64_t seed,
                         bool shuffle);

/// Non-IID option: samples sorted by label, then split evenly, so each
/// worker sees a few dominant classes.
Partition partition_label_sorted(const Dataset& data, int workers);

}  // namespace fednag
