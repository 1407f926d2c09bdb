#include "fednag/federation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "fednag/optim.hpp"
#include "fednag/rng.hpp"

namespace fednag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::validate(const Problem& problem) const {
    hyper.validate();
    if (tau < 1) throw std::invalid_argument("RunConfig: tau must be >= 1");
    if (iterations < 1) throw std::invalid_argument("RunConfig: iterations must be >= 1");
    if (iterations % tau != 0)
        throw std::invalid_argument("RunConfig: iterations must be divisible by tau");
    if (workers != problem.worker_count())
        throw std::invalid_argument("RunConfig: worker count does not match the problem");
    if (batch_size < 0) throw std::invalid_argument("RunConfig: negative batch size");
    if (batch_size > 0)
        for (const auto& o : problem.workers)
            if (!o.batch_grad)
                throw std::invalid_argument("RunConfig: problem has no mini-batch oracle");
    if (initial_w.size() != 0 && initial_w.size() != problem.dimension)
        throw std::invalid_argument("RunConfig: initial_w dimension mismatch");
    if (record.eval_every < 0)
        throw std::invalid_argument("RunConfig: eval_every must be >= 0");
}

bool Trace::has_loss_at(int t) const {
    return t >= 0 && t < static_cast<int>(loss.size()) && !std::isnan(loss[t]);
}

double Trace::last_loss() const {
    for (int t = last_t(); t >= 0; --t)
        if (!std::isnan(loss[t])) return loss[t];
    return kNaN;
}

OptimState aggregate(const std::vector<OptimState>& states,
                     const std::vector<std::int64_t>& sizes) {
    if (states.empty()) throw std::invalid_argument("aggregate: no states");
    if (states.size() != sizes.size())
        throw std::invalid_argument("aggregate: states/sizes length mismatch");
    const auto dim = states.front().w.size();
    double total = 0.0;
    OptimState out;
    out.w = Vector::Zero(dim);
    out.v = Vector::Zero(dim);
    out.t = states.front().t;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].w.size() != dim || states[i].v.size() != dim)
            throw std::invalid_argument("aggregate: state shape mismatch");
        if (sizes[i] <= 0) throw std::invalid_argument("aggregate: non-positive size");
        const double s = static_cast<double>(sizes[i]);
        out.w += s * states[i].w;
        out.v += s * states[i].v;
        total += s;
    }
    out.w /= total;
    out.v /= total;
    return out;
}

std::vector<OptimState> run_virtual_interval(const Problem& problem, const Vector& w0,
                                             const Vector& v0, int tau, const Hyper& hyper,
                                             LocalRule rule) {
    if (tau < 1) throw std::invalid_argument("run_virtual_interval: tau must be >= 1");
    if (w0.size() != problem.dimension || v0.size() != problem.dimension)
        throw std::invalid_argument("run_virtual_interval: seed state dimension mismatch");
    std::vector<OptimState> states;
    states.reserve(tau + 1);
    OptimState s;
    s.w = w0;
    s.v = v0;
    s.t = 0;
    states.push_back(s);
    for (int x = 1; x <= tau; ++x) {
        const Vector g = problem.grad(states.back().w);
        states.push_back(rule == LocalRule::Nag ? nag_step(states.back(), g, hyper)
                                                : gd_step(states.back(), g, hyper));
    }
    return states;
}

Trace run_federated(const Problem& problem, const RunConfig& config) {
    config.validate(problem);
    const int n = config.workers;
    const int tau = config.tau;
    const int T = config.iterations;
    const bool nag = config.algorithm == Algorithm::FedNag;
    const LocalRule rule = nag ? LocalRule::Nag : LocalRule::Gd;

    std::vector<std::int64_t> sizes;
    sizes.reserve(n);
    for (const auto& o : problem.workers) sizes.push_back(o.samples);

    Vector w0 = config.initial_w.size() ? config.initial_w : Vector::Zero(problem.dimension);
    std::vector<OptimState> states(n, OptimState::initial(w0));

    Trace trace;
    trace.method = algorithm_name(config.algorithm);
    trace.hyper = config.hyper;
    trace.tau = tau;
    trace.workers = n;
    trace.iterations = T;
    trace.seed = config.seed;
    trace.batch_size = config.batch_size;

    const auto& rec = config.record;
    // loss (and gradient norm) cadence; sync points and endpoints are always
    // evaluated so the final-model selection never starves
    auto eval_here = [&](int t) {
        if (t == 0 || t == T || (tau > 0 && t % tau == 0)) return true;
        return rec.eval_every > 0 && t % rec.eval_every == 0;
    };
    const bool want_grad_norm = rec.averages || config.batch_size == 0;

    auto record_step = [&](int t, const OptimState& avg) {
        if (rec.averages) {
            trace.avg_w.push_back(avg.w);
            trace.avg_v.push_back(avg.v);
        }
        if (rec.worker_states) {
            std::vector<Vector> ws;
            ws.reserve(n);
            for (const auto& s : states) ws.push_back(s.w);
            trace.worker_w.push_back(std::move(ws));
        }
        if (eval_here(t)) {
            trace.loss.push_back(problem.loss(avg.w));
            trace.grad_norm.push_back(want_grad_norm ? problem.grad(avg.w).norm() : kNaN);
        } else {
            trace.loss.push_back(kNaN);
            trace.grad_norm.push_back(kNaN);
        }
    };

    OptimState avg = aggregate(states, sizes);
    record_step(0, avg);

    double best_loss = trace.loss[0];
    Vector best_w = avg.w;
    int best_round = 0;
    bool have_best_sync = false;

    Vector interval_w = avg.w;  // aggregated state at the last sync
    Vector interval_v = avg.v;

    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < n; ++i) {
            const auto& oracle = problem.workers[i];
            const Vector g =
                config.batch_size > 0
                    ? oracle.batch_grad(states[i].w, config.batch_size,
                                        derive_key(config.seed, static_cast<std::uint64_t>(i), t))
                    : oracle.grad(states[i].w);
            states[i] = nag ? nag_step(states[i], g, config.hyper)
                            : gd_step(states[i], g, config.hyper);
        }

        avg = aggregate(states, sizes);
        const bool sync = (t % tau == 0);
        if (sync) {
            // broadcast; the weighted average itself is unchanged by it
            for (int i = 0; i < n; ++i) {
                states[i].w = avg.w;
                if (nag) states[i].v = avg.v;
            }
        }

        record_step(t, avg);

        const double norm = avg.w.norm();
        const bool finite = std::isfinite(norm) && norm <= kDivergenceNorm &&
                            (!trace.has_loss_at(t) || std::isfinite(trace.loss[t]));
        if (!finite) {
            trace.diverged = true;
            trace.truncated_at = t;
            break;
        }

        if (sync) {
            const int k = t / tau;
            trace.sync_points.push_back(t);
            if (rec.virtual_runs) {
                VirtualInterval vi;
                vi.k = k;
                vi.start_t = t - tau;
                auto virt = run_virtual_interval(problem, interval_w, interval_v, tau,
                                                 config.hyper, rule);
                vi.w.reserve(virt.size());
                vi.v.reserve(virt.size());
                for (auto& s : virt) {
                    vi.w.push_back(std::move(s.w));
                    vi.v.push_back(std::move(s.v));
                }
                trace.virtuals.push_back(std::move(vi));
            }
            interval_w = avg.w;
            interval_v = avg.v;

            const double sync_loss = trace.loss[t];
            if (!have_best_sync || sync_loss < best_loss) {
                best_loss = sync_loss;
                best_w = avg.w;
                best_round = k;
                have_best_sync = true;
            }
        }
    }

    trace.final_w = std::move(best_w);
    trace.final_loss = best_loss;
    trace.final_round = best_round;
    return trace;
}

std::vector<GapPoint> measure_gaps(const Trace& trace) {
    if (trace.avg_w.empty() || trace.virtuals.empty())
        throw std::invalid_argument("measure_gaps: trace lacks averages or virtual runs");

    std::vector<GapPoint> out;
    for (const auto& vi : trace.virtuals) {
        const int tau = static_cast<int>(vi.w.size()) - 1;
        for (int x = 0; x <= tau; ++x) {
            const int t = vi.start_t + x;
            if (t >= static_cast<int>(trace.avg_w.size())) break;
            GapPoint gp;
            gp.k = vi.k;
            gp.x = x;
            gp.t = t;
            gp.w_gap = (trace.avg_w[t] - vi.w[x]).norm();
            gp.v_gap = (trace.avg_v[t] - vi.v[x]).norm();
            if (t < static_cast<int>(trace.worker_w.size())) {
                gp.worker_gaps.reserve(trace.worker_w[t].size());
                for (const auto& ww : trace.worker_w[t])
                    gp.worker_gaps.push_back((ww - vi.w[x]).norm());
            }
            out.push_back(std::move(gp));
        }
    }
    return out;
}

void write_trace_csv(const Trace& trace, const std::string& path,
                     const std::vector<GapPoint>* gaps, const std::vector<double>* bound_h) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);

    // prefer the end-of-interval view (x > 0) where a sync point belongs to
    // two intervals
    std::map<int, const GapPoint*> by_t;
    if (gaps)
        for (const auto& gp : *gaps)
            if (auto it = by_t.find(gp.t); it == by_t.end() || gp.x > 0) by_t[gp.t] = &gp;

    out << "t,k,algorithm,loss,grad_norm,gap_w,gap_v,bound_h\n";
    for (int t = 0; t <= trace.last_t(); ++t) {
        if (std::isnan(trace.loss[t]) && by_t.find(t) == by_t.end()) continue;
        const int k = t == 0 ? 0 : (t + trace.tau - 1) / trace.tau;
        out << t << ',' << k << ',' << trace.method << ',' << format_double(trace.loss[t])
            << ',' << format_double(trace.grad_norm[t]) << ',';
        auto it = by_t.find(t);
        if (it != by_t.end()) {
            const GapPoint& gp = *it->second;
            out << format_double(gp.w_gap) << ',' << format_double(gp.v_gap) << ',';
            if (bound_h && gp.x < static_cast<int>(bound_h->size()))
                out << format_double((*bound_h)[gp.x]);
        } else {
            out << ",,";
        }
        out << '\n';
    }
    if (trace.diverged) out << "# diverged at t=" << trace.truncated_at << '\n';
}

}  // namespace fednag
