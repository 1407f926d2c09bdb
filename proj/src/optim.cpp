#include "fednag/optim.hpp"

#include <cmath>

#include "fednag/federation.hpp"
#include "fednag/rng.hpp"

namespace fednag {

namespace {

void check_shapes(const OptimState& state, const Vector& grad) {
    if (state.w.size() != state.v.size() || state.w.size() != grad.size())
        throw std::invalid_argument("step: w, v, and grad must share one dimension");
}

}  // namespace

OptimState nag_step(const OptimState& state, const Vector& grad, const Hyper& hyper) {
    check_shapes(state, grad);
    hyper.validate();
    OptimState next;
    next.v = hyper.gamma * state.v - hyper.eta * grad;
    next.w = state.w + hyper.gamma * next.v - hyper.eta * grad;
    next.t = state.t + 1;
    return next;
}

OptimState gd_step(const OptimState& state, const Vector& grad, const Hyper& hyper) {
    check_shapes(state, grad);
    hyper.validate();
    OptimState next;
    next.v = state.v;  // stays zero for descent-only runs
    next.w = state.w - hyper.eta * grad;
    next.t = state.t + 1;
    return next;
}

Trace run_centralized(const Problem& problem, const Hyper& hyper, int iterations,
                      LocalRule rule, Vector w0, int batch_size, std::uint64_t seed) {
    hyper.validate();
    if (iterations < 0) throw std::invalid_argument("run_centralized: negative horizon");
    if (problem.dimension <= 0) throw std::invalid_argument("run_centralized: empty problem");
    if (batch_size > 0 && !problem.batch_grad)
        throw std::invalid_argument("run_centralized: problem has no mini-batch oracle");
    if (w0.size() == 0) w0 = Vector::Zero(problem.dimension);
    if (w0.size() != problem.dimension)
        throw std::invalid_argument("run_centralized: w0 dimension mismatch");

    Trace trace;
    trace.method = rule == LocalRule::Nag ? "cnag" : "csgd";
    trace.hyper = hyper;
    trace.tau = 1;
    trace.workers = 1;
    trace.iterations = iterations;
    trace.seed = seed;
    trace.batch_size = batch_size;

    OptimState state = OptimState::initial(std::move(w0));
    trace.avg_w.push_back(state.w);
    trace.avg_v.push_back(state.v);
    trace.loss.push_back(problem.loss(state.w));
    trace.grad_norm.push_back(problem.grad(state.w).norm());

    double best_loss = trace.loss[0];
    Vector best_w = state.w;
    int best_round = 0;

    for (int t = 1; t <= iterations; ++t) {
        Vector g = batch_size > 0
                       ? problem.batch_grad(state.w, batch_size, derive_key(seed, 0, t))
                       : problem.grad(state.w);
        state = rule == LocalRule::Nag ? nag_step(state, g, hyper) : gd_step(state, g, hyper);

        const double loss = problem.loss(state.w);
        trace.avg_w.push_back(state.w);
        trace.avg_v.push_back(state.v);
        trace.loss.push_back(loss);
        trace.grad_norm.push_back(problem.grad(state.w).norm());
        trace.sync_points.push_back(t);

        if (!std::isfinite(loss) || state.w.norm() > kDivergenceNorm) {
            trace.diverged = true;
            trace.truncated_at = t;
            break;
        }
        if (loss < best_loss) {
            best_loss = loss;
            best_w = state.w;
            best_round = t;
        }
    }

    trace.final_w = std::move(best_w);
    trace.final_loss = best_loss;
    trace.final_round = best_round;
    return trace;
}

}  // namespace fednag
