#include "fednag/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>

#include "fednag/rng.hpp"

namespace fednag {

namespace {

constexpr std::uint32_t kImagesMagic = 2051;  // 0x00000803
constexpr std::uint32_t kLabelsMagic = 2049;  // 0x00000801

/// Finishes a Problem from its worker oracles: the global loss/gradient are
/// the sample-weighted averages, matching the weighted-sum objective.
void fill_global(Problem& p) {
    const double total = static_cast<double>(p.total_samples());
    auto workers = std::make_shared<std::vector<WorkerOracle>>(p.workers);
    const int dim = p.dimension;
    p.loss = [workers, total](const Vector& w) {
        double acc = 0.0;
        for (const auto& o : *workers) acc += static_cast<double>(o.samples) * o.loss(w);
        return acc / total;
    };
    p.grad = [workers, total, dim](const Vector& w) {
        Vector acc = Vector::Zero(dim);
        for (const auto& o : *workers) acc += static_cast<double>(o.samples) * o.grad(w);
        return Vector(acc / total);
    };
}

double spectral_top(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    return es.eigenvalues().maxCoeff();
}

/// Shared least-squares oracle over a fixed index set: loss with the 1/2
/// factor so the Hessian is exactly the second-moment matrix.
struct LeastSquaresShard {
    std::shared_ptr<const Eigen::MatrixXd> X;  // full feature matrix
    std::shared_ptr<const Eigen::VectorXd> y;
    std::vector<std::int32_t> idx;

    double loss(const Vector& w) const {
        double acc = 0.0;
        for (auto i : idx) {
            const double r = X->row(i).dot(w) - (*y)(i);
            acc += 0.5 * r * r;
        }
        return acc / static_cast<double>(idx.size());
    }
    Vector grad(const Vector& w) const {
        Vector g = Vector::Zero(w.size());
        for (auto i : idx) {
            const double r = X->row(i).dot(w) - (*y)(i);
            g += r * X->row(i).transpose();
        }
        return g / static_cast<double>(idx.size());
    }
    Vector batch_grad(const Vector& w, int batch, std::uint64_t key) const {
        SplitMix64 rng(key);
        Vector g = Vector::Zero(w.size());
        for (int b = 0; b < batch; ++b) {
            const auto i = idx[rng.below(idx.size())];
            const double r = X->row(i).dot(w) - (*y)(i);
            g += r * X->row(i).transpose();
        }
        return g / static_cast<double>(batch);
    }
};

/// Multinomial cross-entropy over a fixed index set. Weights are a flat
/// vector viewed as a (feature_dim x classes) matrix.
struct SoftmaxShard {
    std::shared_ptr<const Eigen::MatrixXd> X;
    std::shared_ptr<const std::vector<int>> y;
    std::vector<std::int32_t> idx;
    int classes = 0;
    double l2 = 0.0;

    using WeightMap = Eigen::Map<const Eigen::MatrixXd>;

    double loss(const Vector& w) const {
        WeightMap W(w.data(), X->cols(), classes);
        double acc = 0.0;
        Eigen::VectorXd z(classes);
        for (auto i : idx) {
            z.noalias() = W.transpose() * X->row(i).transpose();
            const double zmax = z.maxCoeff();
            const double lse = zmax + std::log((z.array() - zmax).exp().sum());
            acc += lse - z((*y)[i]);
        }
        return acc / static_cast<double>(idx.size()) + 0.5 * l2 * w.squaredNorm();
    }

    Vector grad_over(const std::int32_t* ids, std::int64_t n, const Vector& w) const {
        WeightMap W(w.data(), X->cols(), classes);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(X->cols(), classes);
        Eigen::VectorXd z(classes);
        for (std::int64_t j = 0; j < n; ++j) {
            const auto i = ids[j];
            z.noalias() = W.transpose() * X->row(i).transpose();
            const double zmax = z.maxCoeff();
            Eigen::VectorXd p = (z.array() - zmax).exp();
            p /= p.sum();
            p((*y)[i]) -= 1.0;
            G.noalias() += X->row(i).transpose() * p.transpose();
        }
        Vector g = Eigen::Map<Vector>(G.data(), G.size()) / static_cast<double>(n);
        if (l2 != 0.0) g += l2 * w;
        return g;
    }

    Vector grad(const Vector& w) const {
        return grad_over(idx.data(), static_cast<std::int64_t>(idx.size()), w);
    }
    Vector batch_grad(const Vector& w, int batch, std::uint64_t key) const {
        SplitMix64 rng(key);
        std::vector<std::int32_t> pick(batch);
        for (int b = 0; b < batch; ++b) pick[b] = idx[rng.below(idx.size())];
        return grad_over(pick.data(), batch, w);
    }
};

std::vector<std::int32_t> all_indices(std::int64_t n) {
    std::vector<std::int32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

void check_partition(const Dataset& data, const Partition& partition) {
    if (partition.worker_count() == 0)
        throw std::invalid_argument("partition has no workers");
    std::vector<char> seen(data.sample_count(), 0);
    for (const auto& shard : partition.shards) {
        if (shard.empty()) throw std::invalid_argument("empty worker shard");
        for (auto i : shard) {
            if (i < 0 || i >= data.sample_count())
                throw std::invalid_argument("partition index out of range");
            if (seen[i]++) throw std::invalid_argument("partition shards overlap");
        }
    }
}

std::uint32_t read_be32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IdxError(IdxErrorKind::Truncated, "idx: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

Problem make_quadratic(int dimension, int workers, std::uint64_t seed, double heterogeneity) {
    if (dimension < 1 || workers < 1)
        throw std::invalid_argument("make_quadratic: dimension and workers must be >= 1");
    if (heterogeneity < 0.0)
        throw std::invalid_argument("make_quadratic: heterogeneity must be >= 0");

    SplitMix64 rng(seed);
    Eigen::MatrixXd base(dimension, dimension);
    for (int i = 0; i < dimension; ++i)
        for (int j = 0; j < dimension; ++j) base(i, j) = rng.normal();
    auto H = std::make_shared<Eigen::MatrixXd>(
        base.transpose() * base / static_cast<double>(dimension) +
        0.5 * Eigen::MatrixXd::Identity(dimension, dimension));

    Problem p;
    p.dimension = dimension;
    p.workers.reserve(workers);
    const double scale = heterogeneity / std::sqrt(static_cast<double>(dimension));
    std::vector<Vector> centers;
    for (int i = 0; i < workers; ++i) {
        Vector c(dimension);
        for (int j = 0; j < dimension; ++j) c(j) = scale * rng.normal();
        centers.push_back(std::move(c));
    }

    std::int64_t total = 0;
    Vector weighted_center = Vector::Zero(dimension);
    for (int i = 0; i < workers; ++i) {
        WorkerOracle o;
        o.samples = 100 + i;  // unequal sizes keep the weighted averaging honest
        auto c = std::make_shared<Vector>(centers[i]);
        o.loss = [H, c](const Vector& w) {
            const Vector d = w - *c;
            return 0.5 * d.dot(*H * d);
        };
        o.grad = [H, c](const Vector& w) { return Vector(*H * (w - *c)); };
        total += o.samples;
        weighted_center += static_cast<double>(o.samples) * centers[i];
        p.workers.push_back(std::move(o));
    }

    fill_global(p);
    AnalyticInfo info;
    info.beta = spectral_top(*H);
    info.beta_exact = true;
    info.w_star = weighted_center / static_cast<double>(total);  // normal equations, shared H
    p.analytic = info;
    return p;
}

Problem make_linear_regression(const Dataset& data, const Partition& partition) {
    check_partition(data, partition);
    if (data.targets.size() != data.sample_count())
        throw std::invalid_argument("make_linear_regression: dataset lacks targets");

    auto X = std::make_shared<const Eigen::MatrixXd>(data.features);
    auto y = std::make_shared<const Eigen::VectorXd>(data.targets);

    Problem p;
    p.dimension = data.feature_dim();
    p.feature_dim = data.feature_dim();
    for (const auto& shard : partition.shards) {
        auto ls = std::make_shared<LeastSquaresShard>(LeastSquaresShard{X, y, shard});
        WorkerOracle o;
        o.samples = static_cast<std::int64_t>(shard.size());
        o.loss = [ls](const Vector& w) { return ls->loss(w); };
        o.grad = [ls](const Vector& w) { return ls->grad(w); };
        o.batch_grad = [ls](const Vector& w, int b, std::uint64_t key) {
            return ls->batch_grad(w, b, key);
        };
        p.workers.push_back(std::move(o));
    }
    fill_global(p);
    {
        auto pooled = std::make_shared<LeastSquaresShard>(
            LeastSquaresShard{X, y, all_indices(data.sample_count())});
        p.batch_grad = [pooled](const Vector& w, int b, std::uint64_t key) {
            return pooled->batch_grad(w, b, key);
        };
    }

    AnalyticInfo info;
    info.beta = spectral_top(X->transpose() * *X / static_cast<double>(X->rows()));
    info.beta_exact = true;  // quadratic-in-w loss
    p.analytic = info;
    return p;
}

Problem make_logistic_regression(const Dataset& data, const Partition& partition, double l2) {
    check_partition(data, partition);
    if (data.labels.size() != static_cast<std::size_t>(data.sample_count()) ||
        data.num_classes < 2)
        throw std::invalid_argument("make_logistic_regression: dataset lacks class labels");
    if (l2 < 0.0) throw std::invalid_argument("make_logistic_regression: negative l2");

    auto X = std::make_shared<const Eigen::MatrixXd>(data.features);
    auto y = std::make_shared<const std::vector<int>>(data.labels);
    const int classes = data.num_classes;

    Problem p;
    p.dimension = data.feature_dim() * classes;
    p.feature_dim = data.feature_dim();
    p.num_classes = classes;
    for (const auto& shard : partition.shards) {
        auto sm = std::make_shared<SoftmaxShard>(SoftmaxShard{X, y, shard, classes, l2});
        WorkerOracle o;
        o.samples = static_cast<std::int64_t>(shard.size());
        o.loss = [sm](const Vector& w) { return sm->loss(w); };
        o.grad = [sm](const Vector& w) { return sm->grad(w); };
        o.batch_grad = [sm](const Vector& w, int b, std::uint64_t key) {
            return sm->batch_grad(w, b, key);
        };
        p.workers.push_back(std::move(o));
    }
    fill_global(p);
    {
        auto pooled = std::make_shared<SoftmaxShard>(
            SoftmaxShard{X, y, all_indices(data.sample_count()), classes, l2});
        p.batch_grad = [pooled](const Vector& w, int b, std::uint64_t key) {
            return pooled->batch_grad(w, b, key);
        };
    }

    AnalyticInfo info;
    info.beta =
        0.25 * spectral_top(X->transpose() * *X / static_cast<double>(X->rows())) + l2;
    info.beta_exact = false;  // spectral upper estimate
    p.analytic = info;
    return p;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::int64_t limit) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IdxError(IdxErrorKind::Io, "idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IdxError(IdxErrorKind::Io, "idx: cannot open " + labels_path);

    if (read_be32(img) != kImagesMagic)
        throw IdxError(IdxErrorKind::BadMagic, "idx: bad image magic in " + images_path);
    if (read_be32(lab) != kLabelsMagic)
        throw IdxError(IdxErrorKind::BadMagic, "idx: bad label magic in " + labels_path);

    const std::int64_t n_img = read_be32(img);
    const std::int64_t rows = read_be32(img);
    const std::int64_t cols = read_be32(img);
    const std::int64_t n_lab = read_be32(lab);
    if (n_img != n_lab)
        throw IdxError(IdxErrorKind::CountMismatch,
                       "idx: image/label count mismatch (" + std::to_string(n_img) + " vs " +
                           std::to_string(n_lab) + ")");

    const std::int64_t n = (limit >= 0 && limit < n_img) ? limit : n_img;
    const std::int64_t dim = rows * cols;

    Dataset data;
    data.features.resize(n, dim);
    data.labels.resize(n);
    data.targets.resize(n);
    std::vector<unsigned char> buf(dim);
    int max_label = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), dim);
        if (!img) throw IdxError(IdxErrorKind::Truncated, "idx: truncated image payload");
        for (std::int64_t j = 0; j < dim; ++j)
            data.features(i, j) = static_cast<double>(buf[j]) / 255.0;
        unsigned char l;
        lab.read(reinterpret_cast<char*>(&l), 1);
        if (!lab) throw IdxError(IdxErrorKind::Truncated, "idx: truncated label payload");
        data.labels[i] = l;
        data.targets(i) = static_cast<double>(l);
        max_label = std::max(max_label, static_cast<int>(l));
    }
    data.num_classes = max_label + 1;
    return data;
}

void write_idx(const Dataset& data, int rows, int cols, const std::string& images_path,
               const std::string& labels_path) {
    if (static_cast<std::int64_t>(rows) * cols != data.feature_dim())
        throw std::invalid_argument("write_idx: rows*cols != feature dimension");
    std::ofstream img(images_path, std::ios::binary);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!img || !lab) throw IdxError(IdxErrorKind::Io, "idx: cannot open output files");

    const std::int64_t n = data.sample_count();
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(n));
    write_be32(img, rows);
    write_be32(img, cols);
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(n));

    std::vector<unsigned char> buf(data.feature_dim());
    for (std::int64_t i = 0; i < n; ++i) {
        for (int j = 0; j < data.feature_dim(); ++j) {
            const double v = std::clamp(data.features(i, j), 0.0, 1.0);
            buf[j] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        img.write(reinterpret_cast<char*>(buf.data()), buf.size());
        const unsigned char l = static_cast<unsigned char>(data.labels[i]);
        lab.write(reinterpret_cast<const char*>(&l), 1);
    }
}

Partition partition_even(std::int64_t sample_count, int workers, std::uint64_t seed,
                         bool shuffle) {
    if (workers < 1) throw std::invalid_argument("partition_even: workers must be >= 1");
    if (sample_count < workers)
        throw std::invalid_argument("partition_even: more workers than samples");

    std::vector<std::int32_t> idx(sample_count);
    std::iota(idx.begin(), idx.end(), 0);
    if (shuffle) {
        SplitMix64 rng(seed);
        for (std::int64_t i = sample_count - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.below(i + 1)]);
    }

    Partition part;
    part.shards.resize(workers);
    const std::int64_t base = sample_count / workers;
    const std::int64_t rem = sample_count % workers;  // goes to the lowest-indexed workers
    std::int64_t pos = 0;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t take = base + (w < rem ? 1 : 0);
        part.shards[w].assign(idx.begin() + pos, idx.begin() + pos + take);
        pos += take;
    }
    return part;
}

Partition partition_label_sorted(const Dataset& data, int workers) {
    if (data.labels.size() != static_cast<std::size_t>(data.sample_count()))
        throw std::invalid_argument("partition_label_sorted: dataset has no labels");
    if (workers < 1 || data.sample_count() < workers)
        throw std::invalid_argument("partition_label_sorted: bad worker count");

    std::vector<std::int32_t> idx(data.sample_count());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::int32_t a, std::int32_t b) { return data.labels[a] < data.labels[b]; });

    Partition part;
    part.shards.resize(workers);
    const std::int64_t n = data.sample_count();
    const std::int64_t base = n / workers;
    const std::int64_t rem = n % workers;
    std::int64_t pos = 0;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t take = base + (w < rem ? 1 : 0);
        part.shards[w].assign(idx.begin() + pos, idx.begin() + pos + take);
        pos += take;
    }
    return part;
}

}  // namespace fednag
