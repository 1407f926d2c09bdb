#include "fednag/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fednag::reference {

Roots roots(double eta, double beta, double gamma) {
    if (!(eta > 0.0 && beta > 0.0 && gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("reference::roots: bad inputs");
    // monic form x^2 - s*x + p with the stable -b - sign(b)*sqrt trick
    const double s = (1.0 + eta * beta) * (1.0 + gamma) / gamma;
    const double p = (1.0 + eta * beta) / gamma;
    const double disc = s * s - 4.0 * p;
    if (!(disc > 0.0)) throw std::invalid_argument("reference::roots: non-positive discriminant");
    const double root1 = 0.5 * (s + std::sqrt(disc));  // s > 0 always here
    const double root2 = p / root1;
    Roots r;
    r.hi = root1;
    r.lo = root2;
    r.c_hi = (r.hi - 1.0) / (r.hi - r.lo);
    r.c_lo = (1.0 - r.lo) / (r.hi - r.lo);
    return r;
}

double expansion(int x, double eta, double beta, double gamma) {
    const Roots r = roots(eta, beta, gamma);
    double hi = 1.0, lo = 1.0;
    for (int i = 0; i < x; ++i) {
        hi *= gamma * r.hi;
        lo *= gamma * r.lo;
    }
    return r.c_hi * hi + r.c_lo * lo - 1.0;
}

double momentum_gap_sum(int x, double eta, double beta, double gamma, double delta) {
    double acc = 0.0;
    for (int j = 0; j < x; ++j) {
        double w = 1.0;
        for (int m = 0; m < x - 1 - j; ++m) w *= gamma;
        acc += w * expansion(j, eta, beta, gamma);
    }
    return eta * delta * acc;
}

double weight_gap_sum(int x, double eta, double beta, double gamma, double delta) {
    double acc = 0.0;
    for (int j = 1; j <= x; ++j)
        acc += gamma * momentum_gap_sum(j, eta, beta, gamma, delta) +
               eta * delta * expansion(j - 1, eta, beta, gamma);
    return acc;
}

double worker_gap_unrolled(int x, double eta, double beta, double gamma, double delta_i) {
    // G[t] = G[t-1] + eta*beta*(G[t-1] + sum_{j=1..t} gamma^j G[t-j])
    //        + eta*delta_i * sum_{j=0..t} gamma^j, run at equality from G[0]=0
    std::vector<double> G(x + 1, 0.0);
    for (int t = 1; t <= x; ++t) {
        double tail = 0.0, w = 1.0, geo = 1.0, acc_geo = 1.0;
        for (int j = 1; j <= t; ++j) {
            w *= gamma;
            tail += w * G[t - j];
            geo *= gamma;
            acc_geo += geo;
        }
        G[t] = G[t - 1] + eta * beta * (G[t - 1] + tail) + eta * delta_i * acc_geo;
    }
    return G[x];
}

double gd_gap_direct(int tau, double eta, double beta, double delta) {
    double pw = 1.0;
    for (int i = 0; i < tau; ++i) pw *= 1.0 + eta * beta;
    return delta / beta * (pw - 1.0) - eta * delta * tau;
}

}  // namespace fednag::reference
