#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace fednag {

/// Dense vector of model weights; momenta share the shape.
using Vector = Eigen::VectorXd;

/// Learning-rate / momentum pair shared by every update rule.
struct Hyper {
    double eta = 0.01;    // step size, > 0
    double gamma = 0.0;   // momentum coefficient in [0, 1]; 1 only for divergence demos

    void validate() const {
        if (!(eta > 0.0)) throw std::invalid_argument("Hyper: eta must be > 0");
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw std::invalid_argument("Hyper: gamma must be in [0, 1]");
    }
};

/// One optimizer state: weights, momentum, iteration counter.
/// At t = 0 the momentum is the zero vector.
struct OptimState {
    Vector w;
    Vector v;
    int t = 0;

    static OptimState initial(Vector w0) {
        OptimState s;
        s.v = Vector::Zero(w0.size());
        s.w = std::move(w0);
        s.t = 0;
        return s;
    }
};

enum class Algorithm { FedNag, FedAvg };

/// Local update rule for centralized baselines.
enum class LocalRule { Nag, Gd };

inline const char* algorithm_name(Algorithm a) {
    return a == Algorithm::FedNag ? "fednag" : "fedavg";
}

}  // namespace fednag
