#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace wncs {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Column-major vectorization, vec(AXB^T) = (B (x) A) vec(X).
inline Vec vec(const Mat& m) {
    return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat unvec(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Mat>(v.data(), rows, cols);
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline double spectral_radius(const Mat& m) {
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wncs
