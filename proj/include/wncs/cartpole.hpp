#pragma once

#include "wncs/matrix.hpp"

namespace wncs {

// Cart on a track with a pole attached via a revolute joint. The pole is a
// uniform rod of half-length l, so its inertia about the center of mass is
// (1/3) m l^2. Input is a voltage; input_gain converts volts to force.
struct CartPoleParams {
    double cart_mass = 0.57;         // kg
    double pole_mass = 0.23;         // kg
    double pole_half_length = 0.1778;  // m
    double gravity = 9.81;           // m/s^2
    double cart_friction = 4.9;      // N s/m
    double input_gain = 1.6;         // N/V

    void validate() const;
};

struct ContinuousLti {
    Mat A_c;
    Mat B_c;

    Eigen::Index state_dim() const { return A_c.rows(); }
    Eigen::Index input_dim() const { return B_c.cols(); }
};

// Linearization about the upright equilibrium, state order (s, s_dot, theta,
// theta_dot), single voltage input.
ContinuousLti linearize_cartpole(const CartPoleParams& params);

// Zero-order-hold discretization via the augmented matrix exponential:
// A = exp(A_c T), B = (int_0^T exp(A_c tau) dtau) B_c.
struct DiscretizedLti {
    Mat A;
    Mat B;
};
DiscretizedLti discretize(const ContinuousLti& sys, double T_U);

}  // namespace wncs
