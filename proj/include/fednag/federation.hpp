#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fednag/problems.hpp"
#include "fednag/types.hpp"

namespace fednag {

/// What a run stores beyond the loss series. Vector recording is O(T*d) and
/// is switched off for large models.
struct RecordOptions {
    bool averages = true;        // sample-weighted w(t), v(t) at every t
    bool worker_states = true;   // per-worker states at every t
    bool virtual_runs = true;    // per-interval centralized reference series
    int eval_every = 1;          // loss cadence; 0 = sync points only (plus t=0, t=T)

    static RecordOptions full() { return {}; }
    static RecordOptions light() { return {false, false, false, 0}; }
};

struct RunConfig {
    Hyper hyper;
    int tau = 1;                 // local steps per round; T must be divisible by it
    int workers = 1;
    int iterations = 1;          // T
    Algorithm algorithm = Algorithm::FedNag;
    std::uint64_t seed = 0;
    int batch_size = 0;          // 0 = full batch
    RecordOptions record;
    Vector initial_w;            // zeros when empty

    void validate(const Problem& problem) const;
};

/// Centralized reference trajectory re-seeded from the aggregated state at
/// the start of one interval.
struct VirtualInterval {
    int k = 0;          // interval index, 1-based
    int start_t = 0;    // (k-1)*tau
    std::vector<Vector> w;  // index x = 0..tau
    std::vector<Vector> v;
};

struct Trace {
    // run identity
    std::string method;          // fednag | fedavg | cnag | csgd
    Hyper hyper;
    int tau = 1;
    int workers = 1;
    int iterations = 0;          // requested T
    std::uint64_t seed = 0;
    int batch_size = 0;

    // series indexed by t = 0..last_t(); loss/grad_norm are NaN where skipped
    std::vector<double> loss;
    std::vector<double> grad_norm;
    std::vector<Vector> avg_w;
    std::vector<Vector> avg_v;
    std::vector<std::vector<Vector>> worker_w;  // [t][worker]

    std::vector<VirtualInterval> virtuals;
    std::vector<int> sync_points;  // t = k*tau reached before any truncation

    // final-model selection: the sync-point iterate with the smallest global
    // loss, ties broken by the earliest round
    Vector final_w;
    double final_loss = 0.0;
    int final_round = 0;         // k of the selected iterate; 0 = fell back to w(0)

    bool diverged = false;
    int truncated_at = -1;

    int last_t() const { return static_cast<int>(loss.size()) - 1; }
    bool has_loss_at(int t) const;
    /// Loss at the last evaluated iteration.
    double last_loss() const;
};

/// Sample-weighted average of worker states, accumulated in ascending
/// worker-index order so runs are bit-reproducible.
OptimState aggregate(const std::vector<OptimState>& states,
                     const std::vector<std::int64_t>& sizes);

/// Executes the synchronous-rounds protocol: every worker takes tau local
/// steps (accelerated for FedNag, plain descent for FedAvg), states are
/// averaged, and the average is broadcast back (FedAvg averages weights
/// only). Records the analysis-time averages and, when asked, the
/// per-interval virtual reference series.
Trace run_federated(const Problem& problem, const RunConfig& config);

/// tau centralized accelerated steps on the global objective starting from
/// (w0, v0); returned states cover x = 0..tau.
std::vector<OptimState> run_virtual_interval(const Problem& problem, const Vector& w0,
                                             const Vector& v0, int tau,
                                             const Hyper& hyper,
                                             LocalRule rule = LocalRule::Nag);

/// Distances between the run and its virtual reference, aligned to
/// x = t - (k-1)*tau within each interval.
struct GapPoint {
    int k = 0;
    int x = 0;
    int t = 0;
    double w_gap = 0.0;
    double v_gap = 0.0;
    std::vector<double> worker_gaps;  // empty when worker states were not recorded
};

/// Requires a trace recorded with averages and virtual runs.
std::vector<GapPoint> measure_gaps(const Trace& trace);

/// CSV export, one row per evaluated iteration:
/// t,k,algorithm,loss,grad_norm,gap_w,gap_v,bound_h.
/// Gap and bound columns are filled from `gaps`/`bound_h` when provided
/// (bound_h is indexed by x) and left empty otherwise.
void write_trace_csv(const Trace& trace, const std::string& path,
                     const std::vector<GapPoint>* gaps = nullptr,
                     const std::vector<double>* bound_h = nullptr);

}  // namespace fednag
