// Adam and SGD-with-momentum over flat parameter vectors. The trainer packs
// the network parameters and the scalarization variable t into one vector so
// both are updated by the same rule.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pareto_forge/common.hpp"

namespace pforge {

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    static AdamState make(std::size_t n) { return AdamState{std::vector<double>(n, 0.0),
                                                            std::vector<double>(n, 0.0), 0}; }
};

inline void adam_step(std::vector<double>& params, const std::vector<double>& grad,
                      AdamState& state, double lr) {
    require(lr > 0.0, "adam_step: learning rate must be positive");
    require(params.size() == grad.size() && params.size() == state.m.size(),
            "adam_step: size mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

struct SgdState {
    std::vector<double> velocity;
    double momentum = 0.0;

    static SgdState make(std::size_t n, double momentum = 0.0) {
        return SgdState{std::vector<double>(n, 0.0), momentum};
    }
};

inline void sgd_step(std::vector<double>& params, const std::vector<double>& grad,
                     SgdState& state, double lr) {
    require(lr > 0.0, "sgd_step: learning rate must be positive");
    require(params.size() == grad.size() && params.size() == state.velocity.size(),
            "sgd_step: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i] = state.momentum * state.velocity[i] + grad[i];
        params[i] -= lr * state.velocity[i];
    }
}

}  // namespace pforge
