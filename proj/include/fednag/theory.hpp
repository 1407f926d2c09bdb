#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fednag/federation.hpp"
#include "fednag/problems.hpp"
#include "fednag/types.hpp"

namespace fednag {

/// Everything the closed-form convergence quantities consume.
struct BoundInputs {
    double eta = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double rho = 0.0;        // Lipschitz constant of the global loss on the probed region
    double delta = 0.0;      // weighted gradient-divergence bound
    double omega = 0.0;      // min over the reference trajectory of 1/dist(w, w*)^2
    int tau = 1;
    std::int64_t total_iterations = 0;
    double p = 0.0;          // max ||gamma*v|| / ||eta*grad||
    double q = 0.0;          // min consecutive gradient-norm ratio
    double cos_theta = 0.0;  // min cosine between -grad and the momentum
    double epsilon = 0.0;    // Theorem-2 slack; 0 = use the default rule
};

/// Constants of the closed-form gap bounds. r_hi/r_lo are the roots of
///   gamma*x^2 - (1+eta*beta)(1+gamma)*x + (1+eta*beta) = 0,  r_hi >= r_lo.
/// w_hi/w_lo weight the weight-gap expansion, c_hi/c_lo the per-worker one
/// (c_hi + c_lo = 1).
struct GapConstants {
    double r_hi = 0.0, r_lo = 0.0;
    double w_hi = 0.0, w_lo = 0.0;
    double c_hi = 0.0, c_lo = 0.0;
};

/// Requires eta, beta > 0 and gamma in (0, 1); gamma above 1 - 1e-6 is
/// rejected because the (gamma-1)^2 denominators lose all precision there.
GapConstants gap_constants(double eta, double beta, double gamma);

/// Closed-form bound on ||w(t) - w_virtual(t)|| x steps after a sync.
/// Zero at x = 0 and x = 1, strictly increasing afterwards, linear in delta.
double weight_gap_bound(int x, double eta, double beta, double gamma, double delta);

/// Per-worker bound on ||w_i(t) - w_virtual(t)||; delta_i is that worker's
/// own gradient-divergence bound.
double worker_gap_bound(int x, double eta, double beta, double gamma, double delta_i);

/// Bound on the momentum gap ||v(t) - v_virtual(t)||.
double momentum_gap_bound(int x, double eta, double beta, double gamma, double delta);

/// Gradient-descent counterpart of weight_gap_bound:
/// (delta/beta)((eta*beta+1)^tau - 1) - eta*delta*tau.
double weight_gap_bound_gd(int tau, double eta, double beta, double delta);

/// Routes gamma = 0 to the gradient-descent formula.
double gap_bound_for(int x, const BoundInputs& in);

/// Per-step decrease coefficient of the accelerated run; reduces to the
/// descent coefficient for gamma = 0. Requires finite p, q, cos_theta when
/// gamma > 0.
double descent_coefficient(const BoundInputs& in);

/// eta * (1 - beta*eta/2), the gradient-descent counterpart.
double descent_coefficient_gd(double eta, double beta);

/// Convergence bound on F(w_f) - F(w*) after T iterations for the
/// accelerated (nag) and plain (gd) protocols. T is real-valued so limits
/// at huge horizons can be probed. Throws when the decrease coefficient is
/// not positive (bound conditions violated).
double convergence_bound_nag(double T, const BoundInputs& in);
double convergence_bound_gd(double T, const BoundInputs& in);

/// ---- estimation from runs ----

struct DivergenceEstimate {
    std::vector<double> per_worker;  // inflated bound per worker
    double weighted = 0.0;           // sample-weighted combination
};

/// delta_i = safety * max over probes of ||grad_i(w) - grad(w)||; the
/// weighted value combines them by sample share. Probe list must be
/// non-empty.
DivergenceEstimate estimate_gradient_divergence(const Problem& problem,
                                                const std::vector<Vector>& probes,
                                                double safety = 1.1);

/// rho = safety * max over probes of ||grad(w)|| (a Lipschitz bound for the
/// loss on the probed region).
double estimate_lipschitz(const Problem& problem, const std::vector<Vector>& probes,
                          double safety = 1.1);

/// Collects the run's visited points (averages, workers, virtual states)
/// plus `extra` jittered copies around them; the usual probe set for the
/// two estimators above.
std::vector<Vector> trajectory_probes(const Trace& trace, int extra = 0,
                                      std::uint64_t seed = 0, double jitter = 0.1);

struct GeometryEstimate {
    double p = 0.0;
    double q = 0.0;
    double cos_theta = 0.0;
    double omega = 0.0;
    bool p_defined = false, q_defined = false, cos_defined = false;
    bool exact_reference = true;  // false when w* was replaced by the best iterate
    int skipped = 0;              // points dropped because a norm fell under 1e-12
    // provenance: (interval k, iteration t) where each extremum was attained
    int p_k = -1, p_t = -1;
    int q_k = -1, q_t = -1;
    int theta_k = -1, theta_t = -1;
    int omega_k = -1, omega_t = -1;
};

/// Extrema of the four trajectory ratios over every virtual interval (or
/// over the whole trajectory of a centralized trace). Points where the
/// gradient or momentum norm falls under 1e-12 are skipped and counted.
/// Throws when nothing at all could be estimated.
GeometryEstimate estimate_geometry(const Problem& problem, const Trace& trace,
                                   const Vector& reference_w, bool reference_is_exact);

/// ---- condition reports ----

struct BoundConditionsReport {
    double epsilon = 0.0;
    bool cond_angle_and_step = false;  // cos >= 0, 0 < beta*eta*(1+gamma) <= 1, gamma in [0,1)
    bool cond_margin = false;          // omega*alpha - rho*h(tau)/(tau*eps^2) > 0
    bool cond_interval_ends = false;   // every virtual interval still eps-suboptimal
    bool cond_final = false;           // final iterate still eps-suboptimal
    bool all_hold = false;
    double bound = 0.0;                // valid when all_hold
    double measured = 0.0;             // F(w(T)) - F(w*)
    bool bound_satisfied = false;
};

/// Checks the fixed-horizon bound's four preconditions on a recorded run and
/// verifies the bound when they all hold. Needs the problem's analytic w*
/// and a trace with virtual runs. in.epsilon = 0 uses half the measured
/// final suboptimality.
BoundConditionsReport check_bound_conditions(const BoundInputs& in, const Trace& trace,
                                             const Problem& problem);

/// Largest eta in [lo, hi] below which the accelerated bound beats the
/// plain one (f_nag < f_gd at the template's horizon, with the template's
/// conditions holding); located on a log grid and refined by bisection to
/// relative width 1e-4. Throws when the predicate fails even at `lo`.
double step_size_threshold(const BoundInputs& tmpl, double lo, double hi,
                           int grid_points = 64);

/// Max relative residual over t = 1..t_max of the sequence identity
/// (1+eta*beta) a_{t-1} + eta*beta*gamma * sum_{i<t} a_i = gamma * a_t with
/// a_t = (delta_i/beta)(c_hi*r_hi^t + c_lo*r_lo^t).
double recurrence_identity_residual(double eta, double beta, double gamma,
                                    double delta_i, int t_max);

struct InequalityReport {
    bool holds = true;
    int first_violation = -1;
    double max_equality_error = 0.0;  // at the i = 0, 1 anchor points
};

/// Checks c_hi*(gamma*r_hi)^i + c_lo*(gamma*r_lo)^i >= (1+eta*beta+eta*beta*gamma)^i
/// for i = 0..i_max; equality is expected at i = 0 and 1, strictness after.
InequalityReport check_expansion_inequality(double eta, double beta, double gamma,
                                            int i_max);

struct MonotoneReport {
    bool zero_at_origin = false;  // h(0) = h(1) = 0 within 1e-9
    bool strictly_increasing = false;
    int first_violation = -1;
};

MonotoneReport check_gap_bound_monotone(const BoundInputs& in, int x_max);

/// ---- reporting ----

struct BoundReportRow {
    std::string quantity;
    std::string inputs_hash;
    double value = 0.0;
    double oracle = 0.0;
    double residual = 0.0;
    bool pass = false;
};

std::string hash_inputs(const BoundInputs& in);

/// CSV export: quantity,inputs_hash,value,oracle_value,residual,pass.
void write_bound_report_csv(const std::vector<BoundReportRow>& rows,
                            const std::string& path, const std::string& header_note = "");

}  // namespace fednag
