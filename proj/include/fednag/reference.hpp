#pragma once

// Reference evaluators for the closed-form bounds, kept deliberately
// independent of theory.cpp: roots come from the monic form of the
// recurrence quadratic and every bound is accumulated term by term from its
// defining sums. Used by tests and the acceptance suite to cross-check the
// closed forms; not part of the fast path.

namespace fednag::reference {

struct Roots {
    double hi, lo;      // recurrence roots
    double c_hi, c_lo;  // partial-fraction weights, c_hi + c_lo = 1
};

Roots roots(double eta, double beta, double gamma);

/// Per-step expansion factor p(x) = c_hi*(g*hi)^x + c_lo*(g*lo)^x - 1,
/// evaluated by repeated multiplication.
double expansion(int x, double eta, double beta, double gamma);

/// Momentum-gap bound via its defining sum
/// eta*delta * sum_{j<x} gamma^{x-1-j} p(j).
double momentum_gap_sum(int x, double eta, double beta, double gamma, double delta);

/// Weight-gap bound via the telescoped increment sum
/// sum_{j=1..x} [ gamma * momentum_gap_sum(j) + eta*delta*p(j-1) ].
double weight_gap_sum(int x, double eta, double beta, double gamma, double delta);

/// Worker-gap bound by unrolling its recursion at equality.
double worker_gap_unrolled(int x, double eta, double beta, double gamma, double delta_i);

/// (delta/beta)((1+eta*beta)^tau - 1) - eta*delta*tau by direct powering.
double gd_gap_direct(int tau, double eta, double beta, double delta);

}  // namespace fednag::reference
