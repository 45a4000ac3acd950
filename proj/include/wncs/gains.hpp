#pragma once

#include <complex>
#include <vector>

#include "wncs/matrix.hpp"

namespace wncs {

// Static state feedback u(k) = F x(k); F absorbs the conventional minus sign.
struct FeedbackGain {
    Mat F;
};

// Ackermann pole placement for single-input systems. The pole list must be
// closed under complex conjugation so the characteristic polynomial is real.
FeedbackGain place_poles(const Mat& A, const Mat& B,
                         const std::vector<std::complex<double>>& poles);

struct LqrResult {
    FeedbackGain gain;
    Mat P;  // DARE fixed point
};

// Infinite-horizon discrete LQR via fixed-point iteration of the Riccati
// recursion from P0 = Q, stopping when successive iterates differ by less
// than 1e-12 in Frobenius norm.
LqrResult lqr_gain(const Mat& A, const Mat& B, const Mat& Q, const Mat& R);

struct SyncLqrSpec {
    std::vector<Mat> A;       // per-agent dynamics
    std::vector<Mat> B;
    std::vector<Mat> Q;       // per-agent state weight, PSD
    std::vector<Mat> R;       // per-agent input weight, PD
    Mat Q_sync;               // pairwise coupling weight, PSD

    std::size_t agent_count() const { return A.size(); }
    void validate() const;
};

// Gains partitioned per agent pair: u_i(k) = sum_j blocks[i][j] x_j(k).
struct SyncGains {
    std::vector<std::vector<Mat>> blocks;
    Mat F_full;
};

// Centralized LQR on the augmented multi-agent system with the pairwise sync
// penalty sum_{i<j} (x_i - x_j)^T Q_sync (x_i - x_j).
SyncGains sync_lqr(const SyncLqrSpec& spec);

bool is_controllable(const Mat& A, const Mat& B);

}  // namespace wncs
