#include "wncs/cartpole.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace wncs {

void CartPoleParams::validate() const {
    if (!(cart_mass > 0) || !(pole_mass > 0) || !(pole_half_length > 0))
        throw ConfigError("cart-pole masses and lengths must be strictly positive");
    if (!(gravity > 0)) throw ConfigError("gravity must be positive");
    if (cart_friction < 0) throw ConfigError("cart friction must be nonnegative");
    if (!(input_gain > 0)) throw ConfigError("input gain must be positive");
}

ContinuousLti linearize_cartpole(const CartPoleParams& p) {
    p.validate();
    const double M = p.cart_mass;
    const double m = p.pole_mass;
    const double l = p.pole_half_length;
    const double g = p.gravity;
    const double b = p.cart_friction;
    const double kf = p.input_gain;

    const double I = m * l * l / 3.0;  // rod about its center of mass
    const double den = I * (M + m) + M * m * l * l;

    Mat A_c = Mat::Zero(4, 4);
    Mat B_c = Mat::Zero(4, 1);
    A_c(0, 1) = 1.0;
    A_c(1, 1) = -(I + m * l * l) * b / den;
    A_c(1, 2) = m * m * g * l * l / den;
    A_c(2, 3) = 1.0;
    A_c(3, 1) = -m * l * b / den;
    A_c(3, 2) = m * g * l * (M + m) / den;
    B_c(1, 0) = (I + m * l * l) * kf / den;
    B_c(3, 0) = m * l * kf / den;
    return {A_c, B_c};
}

DiscretizedLti discretize(const ContinuousLti& sys, double T_U) {
    if (!(T_U > 0)) throw ConfigError("discretize: T_U must be positive");
    const Eigen::Index n = sys.state_dim();
    const Eigen::Index m = sys.input_dim();

    Mat aug = Mat::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A_c;
    aug.topRightCorner(n, m) = sys.B_c;
    Mat e = (aug * T_U).exp();

    DiscretizedLti d{e.topLeftCorner(n, n), e.topRightCorner(n, m)};
    if (!d.A.allFinite() || !d.B.allFinite())
        throw AnalysisError("discretization produced non-finite matrices");
    return d;
}

}  // namespace wncs
