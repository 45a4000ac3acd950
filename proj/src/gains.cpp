#include "wncs/gains.hpp"

#include <algorithm>

namespace wncs {

namespace {

Mat controllability_matrix(const Mat& A, const Mat& B) {
    const Eigen::Index n = A.rows();
    Mat C(n, n * B.cols());
    Mat col = B;
    for (Eigen::Index i = 0; i < n; ++i) {
        C.middleCols(i * B.cols(), B.cols()) = col;
        col = A * col;
    }
    return C;
}

// Real coefficients of prod (x - p_i), highest power first.
std::vector<double> real_poly_from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> coeffs{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            next[i] += coeffs[i];
            next[i + 1] -= coeffs[i] * r;
        }
        coeffs = std::move(next);
    }
    std::vector<double> out(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (std::abs(coeffs[i].imag()) > 1e-9)
            throw ConfigError("pole list must be closed under complex conjugation");
        out[i] = coeffs[i].real();
    }
    return out;
}

}  // namespace

bool is_controllable(const Mat& A, const Mat& B) {
    Eigen::FullPivLU<Mat> lu(controllability_matrix(A, B));
    return lu.rank() == A.rows();
}

FeedbackGain place_poles(const Mat& A, const Mat& B,
                         const std::vector<std::complex<double>>& poles) {
    const Eigen::Index n = A.rows();
    if (B.cols() != 1) throw SynthesisError("place_poles requires a single-input system");
    if (static_cast<Eigen::Index>(poles.size()) != n)
        throw ConfigError("pole count must equal the state dimension");

    // Conjugate closure check before forming the polynomial.
    std::vector<std::complex<double>> remaining = poles;
    while (!remaining.empty()) {
        auto p = remaining.back();
        remaining.pop_back();
        if (std::abs(p.imag()) < 1e-12) continue;
        auto it = std::find_if(remaining.begin(), remaining.end(), [&](const auto& q) {
            return std::abs(q.real() - p.real()) < 1e-9 && std::abs(q.imag() + p.imag()) < 1e-9;
        });
        if (it == remaining.end())
            throw ConfigError("pole list must be closed under complex conjugation");
        remaining.erase(it);
    }

    Mat C = controllability_matrix(A, B);
    Eigen::FullPivLU<Mat> lu(C);
    if (lu.rank() != n) throw SynthesisError("pair (A, B) is not controllable");

    // phi(A) with phi the desired characteristic polynomial (Horner form).
    std::vector<double> coeffs = real_poly_from_roots(poles);
    Mat phi = Mat::Zero(n, n);
    for (double c : coeffs) phi = phi * A + c * Mat::Identity(n, n);

    Mat last_row = Mat::Zero(1, n);
    last_row(0, n - 1) = 1.0;
    Mat K = last_row * lu.solve(phi);
    return {-K};
}

LqrResult lqr_gain(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
    const Eigen::Index n = A.rows();
    if (Q.rows() != n || Q.cols() != n || R.rows() != B.cols() || R.cols() != B.cols())
        throw ConfigError("lqr_gain: weight dimensions inconsistent");

    Mat P = Q;
    const int max_iter = 100000;
    bool converged = false;
    for (int i = 0; i < max_iter; ++i) {
        Mat BtPB = R + B.transpose() * P * B;
        Mat K = BtPB.ldlt().solve(B.transpose() * P * A);
        Mat P_next = Q + A.transpose() * P * A - A.transpose() * P * B * K;
        P_next = 0.5 * (P_next + P_next.transpose());
        double change = (P_next - P).norm();
        P = P_next;
        if (change < 1e-12) {
            converged = true;
            break;
        }
        if (!P.allFinite()) throw SynthesisError("DARE iteration diverged");
    }
    if (!converged) throw SynthesisError("DARE iteration did not converge");

    Mat F = -(R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
    if (spectral_radius(A + B * F) >= 1.0)
        throw SynthesisError("LQR gain is not stabilizing; check stabilizability");
    return {{F}, P};
}

void SyncLqrSpec::validate() const {
    const std::size_t N = A.size();
    if (N < 2) throw ConfigError("sync_lqr requires at least two agents");
    if (B.size() != N || Q.size() != N || R.size() != N)
        throw ConfigError("sync_lqr: per-agent lists must have equal length");
    const Eigen::Index n = A[0].rows();
    const Eigen::Index m = B[0].cols();
    for (std::size_t i = 0; i < N; ++i) {
        if (A[i].rows() != n || A[i].cols() != n || B[i].rows() != n || B[i].cols() != m)
            throw ConfigError("sync_lqr: agent dimensions must match");
        if (Q[i].rows() != n || R[i].rows() != m)
            throw ConfigError("sync_lqr: weight dimensions must match");
    }
    if (Q_sync.rows() != n || Q_sync.cols() != n)
        throw ConfigError("sync_lqr: Q_sync dimension must match the state");
}

SyncGains sync_lqr(const SyncLqrSpec& spec) {
    spec.validate();
    const std::size_t N = spec.agent_count();
    const Eigen::Index n = spec.A[0].rows();
    const Eigen::Index m = spec.B[0].cols();

    Mat A_aug = Mat::Zero(N * n, N * n);
    Mat B_aug = Mat::Zero(N * n, N * m);
    Mat Q_aug = Mat::Zero(N * n, N * n);
    Mat R_aug = Mat::Zero(N * m, N * m);
    for (std::size_t i = 0; i < N; ++i) {
        A_aug.block(i * n, i * n, n, n) = spec.A[i];
        B_aug.block(i * n, i * m, n, m) = spec.B[i];
        Q_aug.block(i * n, i * n, n, n) =
            spec.Q[i] + static_cast<double>(N - 1) * spec.Q_sync;
        R_aug.block(i * m, i * m, m, m) = spec.R[i];
        for (std::size_t j = 0; j < N; ++j)
            if (j != i) Q_aug.block(i * n, j * n, n, n) = -spec.Q_sync;
    }

    LqrResult res = lqr_gain(A_aug, B_aug, Q_aug, R_aug);
    SyncGains out;
    out.F_full = res.gain.F;
    out.blocks.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        out.blocks[i].resize(N);
        for (std::size_t j = 0; j < N; ++j)
            out.blocks[i][j] = res.gain.F.block(i * m, j * n, m, n);
    }
    return out;
}

}  // namespace wncs
