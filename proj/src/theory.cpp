#include "fednag/theory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fednag/rng.hpp"

namespace fednag {

namespace {

constexpr double kNormTol = 1e-12;  // below this, trajectory ratios are skipped

void require_basic(double eta, double beta) {
    if (!(eta > 0.0)) throw std::invalid_argument("theory: eta must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("theory: beta must be > 0");
}

void require_momentum_range(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0 - 1e-6))
        throw std::invalid_argument("theory: gamma must lie in (0, 1 - 1e-6)");
}

double pow_int(double base, int exp) {
    double r = 1.0;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

GapConstants gap_constants(double eta, double beta, double gamma) {
    require_basic(eta, beta);
    require_momentum_range(gamma);

    const double eb1 = 1.0 + eta * beta;
    const double disc = eb1 * eb1 * (1.0 + gamma) * (1.0 + gamma) - 4.0 * gamma * eb1;
    if (!(disc > 0.0)) throw std::invalid_argument("theory: discriminant not positive");

    GapConstants c;
    c.r_hi = (eb1 * (1.0 + gamma) + std::sqrt(disc)) / (2.0 * gamma);
    c.r_lo = eb1 / (gamma * c.r_hi);  // product identity avoids cancellation
    const double spread = c.r_hi - c.r_lo;
    c.w_hi = (gamma * c.r_hi + c.r_hi - 1.0) / (spread * (gamma * c.r_hi - 1.0));
    c.w_lo = (gamma * c.r_lo + c.r_lo - 1.0) / (spread * (1.0 - gamma * c.r_lo));
    c.c_hi = (c.r_hi - 1.0) / spread;
    c.c_lo = (1.0 - c.r_lo) / spread;
    return c;
}

double weight_gap_bound(int x, double eta, double beta, double gamma, double delta) {
    if (x < 0) throw std::invalid_argument("weight_gap_bound: x must be >= 0");
    if (delta < 0.0) throw std::invalid_argument("weight_gap_bound: delta must be >= 0");
    const GapConstants c = gap_constants(eta, beta, gamma);
    const double g1 = gamma - 1.0;
    const double drift =
        (gamma * gamma * (pow_int(gamma, x) - 1.0) - g1 * static_cast<double>(x)) / (g1 * g1);
    return eta * delta *
           (c.w_hi * pow_int(gamma * c.r_hi, x) + c.w_lo * pow_int(gamma * c.r_lo, x) -
            1.0 / (eta * beta) - drift);
}

double worker_gap_bound(int x, double eta, double beta, double gamma, double delta_i) {
    if (x < 0) throw std::invalid_argument("worker_gap_bound: x must be >= 0");
    if (delta_i < 0.0) throw std::invalid_argument("worker_gap_bound: delta_i must be >= 0");
    const GapConstants c = gap_constants(eta, beta, gamma);
    return delta_i / beta *
           (c.c_hi * pow_int(gamma * c.r_hi, x) + c.c_lo * pow_int(gamma * c.r_lo, x) - 1.0);
}

double momentum_gap_bound(int x, double eta, double beta, double gamma, double delta) {
    if (x < 0) throw std::invalid_argument("momentum_gap_bound: x must be >= 0");
    if (delta < 0.0) throw std::invalid_argument("momentum_gap_bound: delta must be >= 0");
    const GapConstants c = gap_constants(eta, beta, gamma);
    return eta * delta *
           (c.c_hi * pow_int(gamma * c.r_hi, x) / (gamma * (c.r_hi - 1.0)) +
            c.c_lo * pow_int(gamma * c.r_lo, x) / (gamma * (c.r_lo - 1.0)) -
            (pow_int(gamma, x) - 1.0) / (gamma - 1.0));
}

double weight_gap_bound_gd(int tau, double eta, double beta, double delta) {
    require_basic(eta, beta);
    if (tau < 0) throw std::invalid_argument("weight_gap_bound_gd: tau must be >= 0");
    if (delta < 0.0) throw std::invalid_argument("weight_gap_bound_gd: delta must be >= 0");
    return delta / beta * (pow_int(eta * beta + 1.0, tau) - 1.0) -
           eta * delta * static_cast<double>(tau);
}

double gap_bound_for(int x, const BoundInputs& in) {
    if (in.gamma == 0.0) return weight_gap_bound_gd(x, in.eta, in.beta, in.delta);
    return weight_gap_bound(x, in.eta, in.beta, in.gamma, in.delta);
}

double descent_coefficient_gd(double eta, double beta) {
    require_basic(eta, beta);
    return eta * (1.0 - beta * eta / 2.0);
}

double descent_coefficient(const BoundInputs& in) {
    require_basic(in.eta, in.beta);
    if (in.gamma == 0.0) return descent_coefficient_gd(in.eta, in.beta);
    if (!(in.gamma > 0.0 && in.gamma < 1.0))
        throw std::invalid_argument("descent_coefficient: gamma must be in [0, 1)");
    if (!std::isfinite(in.p) || !std::isfinite(in.q) || !std::isfinite(in.cos_theta))
        throw std::invalid_argument("descent_coefficient: p, q, cos_theta must be finite");
    const double g1 = in.gamma + 1.0;
    return in.eta * g1 * (1.0 - in.beta * in.eta * g1 / 2.0) -
           in.beta * in.eta * in.eta * in.gamma * in.gamma * in.p * in.p / 2.0 +
           in.gamma * in.gamma * in.eta * in.q * (1.0 - in.beta * in.eta * g1) * in.cos_theta;
}

namespace {

double convergence_bound(double T, double alpha, double gap, double rho, double omega,
                         int tau) {
    if (!(T >= 1.0)) throw std::invalid_argument("convergence bound: horizon must be >= 1");
    if (!(omega > 0.0)) throw std::invalid_argument("convergence bound: omega must be > 0");
    if (!(alpha > 0.0))
        throw std::invalid_argument("convergence bound: decrease coefficient not positive");
    const double head = 1.0 / (2.0 * T * omega * alpha);
    return head + std::sqrt(head * head + rho * gap / (omega * alpha * tau)) + rho * gap;
}

}  // namespace

double convergence_bound_nag(double T, const BoundInputs& in) {
    return convergence_bound(T, descent_coefficient(in), gap_bound_for(in.tau, in), in.rho,
                             in.omega, in.tau);
}

double convergence_bound_gd(double T, const BoundInputs& in) {
    return convergence_bound(T, descent_coefficient_gd(in.eta, in.beta),
                             weight_gap_bound_gd(in.tau, in.eta, in.beta, in.delta), in.rho,
                             in.omega, in.tau);
}

DivergenceEstimate estimate_gradient_divergence(const Problem& problem,
                                                const std::vector<Vector>& probes,
                                                double safety) {
    if (probes.empty())
        throw std::invalid_argument("estimate_gradient_divergence: no probe points");
    if (safety < 1.0)
        throw std::invalid_argument("estimate_gradient_divergence: safety factor < 1");

    DivergenceEstimate est;
    est.per_worker.assign(problem.worker_count(), 0.0);
    for (const auto& w : probes) {
        const Vector g = problem.grad(w);
        for (int i = 0; i < problem.worker_count(); ++i) {
            const double d = (problem.workers[i].grad(w) - g).norm();
            est.per_worker[i] = std::max(est.per_worker[i], d);
        }
    }
    double total = 0.0, acc = 0.0;
    for (int i = 0; i < problem.worker_count(); ++i) {
        est.per_worker[i] *= safety;
        const double s = static_cast<double>(problem.workers[i].samples);
        acc += s * est.per_worker[i];
        total += s;
    }
    est.weighted = acc / total;
    return est;
}

double estimate_lipschitz(const Problem& problem, const std::vector<Vector>& probes,
                          double safety) {
    if (probes.empty()) throw std::invalid_argument("estimate_lipschitz: no probe points");
    double m = 0.0;
    for (const auto& w : probes) m = std::max(m, problem.grad(w).norm());
    return safety * m;
}

std::vector<Vector> trajectory_probes(const Trace& trace, int extra, std::uint64_t seed,
                                      double jitter) {
    std::vector<Vector> probes;
    for (const auto& w : trace.avg_w) probes.push_back(w);
    for (const auto& ws : trace.worker_w)
        for (const auto& w : ws) probes.push_back(w);
    for (const auto& vi : trace.virtuals)
        for (const auto& w : vi.w) probes.push_back(w);
    if (probes.empty())
        throw std::invalid_argument("trajectory_probes: trace recorded no states");

    SplitMix64 rng(seed);
    const std::size_t base = probes.size();
    for (int e = 0; e < extra; ++e) {
        Vector w = probes[rng.below(base)];
        for (Eigen::Index j = 0; j < w.size(); ++j) w(j) += jitter * rng.normal();
        probes.push_back(std::move(w));
    }
    return probes;
}

GeometryEstimate estimate_geometry(const Problem& problem, const Trace& trace,
                                   const Vector& reference_w, bool reference_is_exact) {
    if (reference_w.size() != problem.dimension)
        throw std::invalid_argument("estimate_geometry: reference dimension mismatch");

    // interval list: the recorded virtual runs, or the whole centralized
    // trajectory treated as one interval
    struct Series {
        int k;
        const std::vector<Vector>* w;
        const std::vector<Vector>* v;
    };
    std::vector<Series> series;
    for (const auto& vi : trace.virtuals) series.push_back({vi.k, &vi.w, &vi.v});
    if (series.empty()) {
        if (trace.avg_w.empty())
            throw std::invalid_argument("estimate_geometry: trace has no virtual runs or averages");
        series.push_back({1, &trace.avg_w, &trace.avg_v});
    }

    GeometryEstimate est;
    est.exact_reference = reference_is_exact;
    double max_dist2 = 0.0;
    double min_q = std::numeric_limits<double>::infinity();
    double min_cos = std::numeric_limits<double>::infinity();
    int evaluated = 0;

    for (const auto& s : series) {
        double prev_grad_norm = -1.0;
        for (std::size_t x = 0; x < s.w->size(); ++x) {
            const Vector& w = (*s.w)[x];
            const Vector& v = (*s.v)[x];
            const Vector g = problem.grad(w);
            const double gn = g.norm();
            const double vn = v.norm();
            const int t = static_cast<int>(x);

            const double d2 = (w - reference_w).squaredNorm();
            if (d2 > max_dist2) {
                max_dist2 = d2;
                est.omega_k = s.k;
                est.omega_t = t;
            }

            if (gn < kNormTol || vn < kNormTol) {
                ++est.skipped;
            } else {
                ++evaluated;
                const double pv = trace.hyper.gamma * vn / (trace.hyper.eta * gn);
                if (!est.p_defined || pv > est.p) {
                    est.p = pv;
                    est.p_k = s.k;
                    est.p_t = t;
                }
                est.p_defined = true;
                const double cv = -g.dot(v) / (gn * vn);
                if (cv < min_cos) {
                    min_cos = cv;
                    est.theta_k = s.k;
                    est.theta_t = t;
                }
                est.cos_defined = true;
            }

            if (x > 0 && prev_grad_norm >= kNormTol && gn >= kNormTol) {
                const double qv = prev_grad_norm / gn;
                if (qv < min_q) {
                    min_q = qv;
                    est.q_k = s.k;
                    est.q_t = t;
                }
                est.q_defined = true;
            } else if (x > 0) {
                ++est.skipped;
            }
            prev_grad_norm = gn;
        }
    }

    if (evaluated == 0 && !est.q_defined)
        throw std::runtime_error("estimate_geometry: all points skipped, geometry undetermined");
    if (!(max_dist2 > 0.0))
        throw std::runtime_error("estimate_geometry: trajectory never left the reference point");

    est.omega = 1.0 / max_dist2;
    est.q = est.q_defined ? min_q : std::numeric_limits<double>::quiet_NaN();
    est.cos_theta = est.cos_defined ? min_cos : std::numeric_limits<double>::quiet_NaN();
    if (!est.p_defined) est.p = std::numeric_limits<double>::quiet_NaN();
    return est;
}

BoundConditionsReport check_bound_conditions(const BoundInputs& in, const Trace& trace,
                                             const Problem& problem) {
    if (!problem.analytic || problem.analytic->w_star.size() == 0)
        throw std::invalid_argument("check_bound_conditions: problem has no analytic minimizer");
    if (trace.virtuals.empty())
        throw std::invalid_argument("check_bound_conditions: trace lacks virtual runs");

    const double f_star = problem.loss(problem.analytic->w_star);
    const double final_gap = trace.last_loss() - f_star;

    BoundConditionsReport rep;
    rep.measured = final_gap;
    rep.epsilon = in.epsilon > 0.0 ? in.epsilon : 0.5 * final_gap;

    rep.cond_angle_and_step = in.cos_theta >= 0.0 &&
                              in.beta * in.eta * (in.gamma + 1.0) > 0.0 &&
                              in.beta * in.eta * (in.gamma + 1.0) <= 1.0 &&
                              in.gamma >= 0.0 && in.gamma < 1.0;

    const double alpha = descent_coefficient(in);
    const double gap = gap_bound_for(in.tau, in);
    const double margin =
        in.omega * alpha - in.rho * gap / (in.tau * rep.epsilon * rep.epsilon);
    rep.cond_margin = margin > 0.0;

    rep.cond_interval_ends = true;
    for (const auto& vi : trace.virtuals) {
        const double end_gap = problem.loss(vi.w.back()) - f_star;
        if (end_gap < rep.epsilon) {
            rep.cond_interval_ends = false;
            break;
        }
    }
    rep.cond_final = final_gap >= rep.epsilon;

    rep.all_hold =
        rep.cond_angle_and_step && rep.cond_margin && rep.cond_interval_ends && rep.cond_final;
    if (rep.all_hold) {
        const double horizon = static_cast<double>(trace.sync_points.empty()
                                                       ? trace.iterations
                                                       : trace.sync_points.back());
        rep.bound = 1.0 / (horizon * margin);
        rep.bound_satisfied = rep.measured <= rep.bound;
    }
    return rep;
}

double step_size_threshold(const BoundInputs& tmpl, double lo, double hi, int grid_points) {
    if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("step_size_threshold: bad range");
    if (grid_points < 2) throw std::invalid_argument("step_size_threshold: bad grid");
    require_momentum_range(tmpl.gamma);

    const double T = tmpl.total_iterations > 0 ? static_cast<double>(tmpl.total_iterations)
                                               : 1000.0;
    auto predicate = [&](double eta) {
        BoundInputs in = tmpl;
        in.eta = eta;
        if (!(in.cos_theta >= 0.0)) return false;
        if (!(in.beta * eta * (in.gamma + 1.0) > 0.0 &&
              in.beta * eta * (in.gamma + 1.0) <= 1.0))
            return false;
        double a, ah;
        try {
            a = descent_coefficient(in);
            ah = descent_coefficient_gd(eta, in.beta);
        } catch (const std::exception&) {
            return false;
        }
        if (!(a > 0.0 && ah > 0.0)) return false;
        return convergence_bound_nag(T, in) < convergence_bound_gd(T, in);
    };

    // log-spaced scan, then bisection between the last passing and the first
    // failing grid point
    const double ratio = std::pow(hi / lo, 1.0 / (grid_points - 1));
    double prev = lo;
    if (!predicate(lo))
        throw std::runtime_error("step_size_threshold: predicate fails at the low end");
    for (int i = 1; i < grid_points; ++i) {
        const double eta = (i == grid_points - 1) ? hi : lo * std::pow(ratio, i);
        if (!predicate(eta)) {
            double a = prev, b = eta;
            while ((b - a) / (0.5 * (a + b)) > 1e-4) {
                const double mid = 0.5 * (a + b);
                (predicate(mid) ? a : b) = mid;
            }
            return a;
        }
        prev = eta;
    }
    return hi;  // predicate holds on the whole range
}

double recurrence_identity_residual(double eta, double beta, double gamma, double delta_i,
                                    int t_max) {
    if (t_max < 1) throw std::invalid_argument("recurrence_identity_residual: t_max >= 1");
    if (delta_i < 0.0)
        throw std::invalid_argument("recurrence_identity_residual: delta_i must be >= 0");
    const GapConstants c = gap_constants(eta, beta, gamma);
    auto a_t = [&](int t) {
        return delta_i / beta * (c.c_hi * pow_int(c.r_hi, t) + c.c_lo * pow_int(c.r_lo, t));
    };
    double worst = 0.0;
    double partial = 0.0;  // sum of a_0 .. a_{t-1}
    for (int t = 1; t <= t_max; ++t) {
        partial += a_t(t - 1);
        const double lhs = (1.0 + eta * beta) * a_t(t - 1) + eta * beta * gamma * partial;
        const double rhs = gamma * a_t(t);
        if (!std::isfinite(lhs) || !std::isfinite(rhs))
            throw std::runtime_error("recurrence_identity_residual: overflow at t=" +
                                     std::to_string(t));
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    return worst;
}

InequalityReport check_expansion_inequality(double eta, double beta, double gamma,
                                            int i_max) {
    const GapConstants c = gap_constants(eta, beta, gamma);
    const double base = 1.0 + eta * beta + eta * beta * gamma;
    InequalityReport rep;
    for (int i = 0; i <= i_max; ++i) {
        const double lhs =
            c.c_hi * pow_int(gamma * c.r_hi, i) + c.c_lo * pow_int(gamma * c.r_lo, i);
        const double rhs = pow_int(base, i);
        if (i <= 1) {
            rep.max_equality_error =
                std::max(rep.max_equality_error, std::abs(lhs - rhs) / std::abs(rhs));
        } else if (!(lhs > rhs)) {
            rep.holds = false;
            if (rep.first_violation < 0) rep.first_violation = i;
        }
    }
    return rep;
}

MonotoneReport check_gap_bound_monotone(const BoundInputs& in, int x_max) {
    MonotoneReport rep;
    const double h0 = weight_gap_bound(0, in.eta, in.beta, in.gamma, in.delta);
    const double h1 = weight_gap_bound(1, in.eta, in.beta, in.gamma, in.delta);
    rep.zero_at_origin = std::abs(h0) <= 1e-9 && std::abs(h1) <= 1e-9;
    rep.strictly_increasing = true;
    double prev = h1;
    for (int x = 2; x <= x_max; ++x) {
        const double h = weight_gap_bound(x, in.eta, in.beta, in.gamma, in.delta);
        if (!(h > prev)) {
            rep.strictly_increasing = false;
            if (rep.first_violation < 0) rep.first_violation = x;
        }
        prev = h;
    }
    return rep;
}

std::string hash_inputs(const BoundInputs& in) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%d|%lld|%.17g|%.17g|%.17g|%.17g",
                  in.eta, in.gamma, in.beta, in.rho, in.delta, in.omega, in.tau,
                  static_cast<long long>(in.total_iterations), in.p, in.q, in.cos_theta,
                  in.epsilon);
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* s = buf; *s; ++s) {
        h ^= static_cast<unsigned char>(*s);
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_bound_report_csv(const std::vector<BoundReportRow>& rows, const std::string& path,
                            const std::string& header_note) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    if (!header_note.empty()) out << "# " << header_note << '\n';
    out << "quantity,inputs_hash,value,oracle_value,residual,pass\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rows)
        out << r.quantity << ',' << r.inputs_hash << ',' << fmt(r.value) << ','
            << fmt(r.oracle) << ',' << fmt(r.residual) << ',' << (r.pass ? "pass" : "fail")
            << '\n';
}

}  // namespace fednag
