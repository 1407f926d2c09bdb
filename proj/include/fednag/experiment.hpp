#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fednag/federation.hpp"
#include "fednag/problems.hpp"
#include "fednag/theory.hpp"

namespace fednag {

/// Parsed experiment description. The on-disk format is a flat key=value
/// file, one entry per line, '#' comments, sweep values comma-separated.
struct ExperimentSpec {
    // problem
    std::string problem = "quadratic";   // quadratic | linear | logistic
    int dimension = 10;                  // quadratic only
    double heterogeneity = 1.0;          // quadratic only
    double l2 = 0.0;                     // logistic only
    std::string train_images, train_labels, test_images, test_labels;
    std::int64_t subset = 10000;         // capped sample count; <= 0 means all
    bool label_sorted = false;           // non-IID sharding

    // base run configuration
    std::vector<std::string> algorithms = {"fednag"};  // fednag fedavg cnag csgd
    double eta = 0.01;
    double gamma = 0.9;
    int tau = 4;
    int workers = 4;
    int iterations = 1000;
    int batch = 0;                       // 0 = full batch
    std::uint64_t seed = 1;
    std::string record = "auto";         // auto | full | light
    int eval_every = -1;                 // -1 = auto (full batch: 1, minibatch: syncs)

    // sweep axes; empty = base value only
    std::vector<int> sweep_tau;
    std::vector<double> sweep_gamma;
    std::vector<int> sweep_workers;
    std::vector<double> sweep_eta;

    // targets
    std::optional<double> loss_target;
    std::optional<double> accuracy_target;

    std::string out_dir = "out";

    void validate() const;
};

ExperimentSpec parse_spec_file(const std::string& path);
ExperimentSpec parse_spec_text(const std::string& text, const std::string& origin = "<text>");

/// First/last/mean iteration at which a target predicate held. The series
/// may oscillate, so a target can be hit many times.
struct TargetStats {
    bool reached = false;
    int first = 0;
    int last = 0;
    double mean = 0.0;
};

enum class TargetDirection { AtMost, AtLeast };

/// Scans an (iteration, value) series for points meeting the target.
TargetStats targets_reached(const std::vector<std::pair<int, double>>& series,
                            double target, TargetDirection direction);

/// Fraction of test samples whose argmax class score matches the label;
/// argmax ties go to the lowest class index. The class count is inferred
/// from w.size() / feature_dim.
double evaluate_accuracy(const Vector& w, const Dataset& test_set);

/// One row of the sweep summary.
struct SummaryRow {
    std::string config_key;
    std::string algorithm;
    int tau = 0;
    double gamma = 0.0;
    int workers = 0;
    double eta = 0.0;
    double final_loss = 0.0;
    std::optional<double> final_accuracy;
    std::optional<TargetStats> loss_hits;
    std::optional<TargetStats> accuracy_hits;
    std::optional<double> bound_nag;  // f1 at the run horizon
    std::optional<double> bound_gd;   // f2 at the run horizon
    std::optional<bool> bound_holds;  // measured optimality gap within bound
    bool diverged = false;
};

struct ExperimentResult {
    std::vector<SummaryRow> summary;
    std::vector<std::string> trace_files;
    std::string summary_file;
    std::string bound_report_file;  // empty unless the theory pass ran
    std::vector<std::string> failures;
};

struct RunOptions {
    std::string out_dir_override;
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
    bool full_dataset = false;  // ignore the subset cap
};

/// Runs the sweep matrix, writing one trace CSV per run plus a summary CSV.
/// Failed sweep points are recorded in a failure manifest and do not abort
/// the rest.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

/// Theory-only pass: runs the base configuration with full recording,
/// estimates the bound inputs, evaluates every closed form against its
/// reference oracle and the measured gaps, and writes the bound report CSV.
ExperimentResult run_bounds(const ExperimentSpec& spec, const RunOptions& opts = {});

/// Builds the problem a spec describes (along with its test set when the
/// spec names one).
struct BuiltProblem {
    Problem problem;
    std::optional<Dataset> test_set;
};
BuiltProblem build_problem(const ExperimentSpec& spec, int workers, bool full_dataset);

}  // namespace fednag
