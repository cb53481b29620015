// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "emadir/chanest.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace emadir {

// Dictionary of finite-aperture responses on the normalized spatial
// frequency grid Psi_i = -1/2 + i/D. Column j is the length-N rectangular
// window (Dirichlet) kernel centered on grid point j, so w(i, j) depends
// only on (i - j) mod D: the matrix is circulant and each column peaks at
// its own center with value 1.
struct WindowMatrix {
    std::size_t grid_size = 0;         // D
    std::size_t n_antennas = 0;        // N including the reference element
    Eigen::MatrixXcd w;                // D x D

    double psi(std::size_t i) const {
        return -0.5 + static_cast<double>(i) / static_cast<double>(grid_size);
    }
};

WindowMatrix build_window_matrix(std::size_t n_antennas_incl_ref, std::size_t grid_size);

// P(Psi_i) = (1/N) sum_n h_n exp(+j 2 pi n Psi_i): the zero-padded inverse
// transform of the channel vector on the same fftshifted grid as
// WindowMatrix, so a single path exactly on grid bin k gives P equal to
// window column k with peak value 1.
Eigen::VectorXcd ifft_profile(const RelativeChannel& h, std::size_t grid_size);

struct SolveOptions {
    double tol = 1e-8;
    std::size_t max_iters = 20000;
    // Eq. objective uses the squared data norm by default; the unsquared
    // variant is kept selectable since both appear in the derivation.
    bool squared_residual = true;
    // Final guarded refinement: constrained least squares on the bins above
    // active_rel_threshold, accepted only when it does not increase the
    // objective. Yields exact zeros off the recovered support.
    bool polish = true;
    double active_rel_threshold = 0.05;
    // Documented sparsity bound (bins above 0.05 * max), checked by tests.
    std::size_t sparsity_cap = 12;
};

struct AoAProfile {
    std::size_t grid_size = 0;
    Eigen::VectorXcd coeffs;           // length D, exact zeros off support
    double d_over_lambda = 0.0;
    double residual = 0.0;             // ||P - W a||_2
    std::size_t solver_iters = 0;
    bool converged = true;
    std::vector<double> objective_log; // accepted objective per iteration

    double psi(std::size_t i) const {
        return -0.5 + static_cast<double>(i) / static_cast<double>(grid_size);
    }
};

// Approximately minimizes ||P - W a||_2^2 + beta ||a||_1 subject to
// sum(a) = 1 and a_j = 0 wherever |Psi_j| > d_over_lambda, by proximal
// splitting over complex coefficients: gradient step on the data term,
// complex soft-threshold, then projection onto the affine constraint set
// (support zeroing followed by a uniform complex shift over in-support
// bins). Backtracking keeps the objective non-increasing.
AoAProfile solve_sparse(const Eigen::VectorXcd& p, const WindowMatrix& w, double beta,
                        double d_over_lambda, const SolveOptions& opts = {});

// One measurement for the joint solver. window is borrowed for the duration
// of the call, not retained.
struct JointMeasurement {
    Eigen::VectorXcd profile;
    const WindowMatrix* window = nullptr;
    double d_over_lambda = 0.0;
    std::string tag;
};

struct JointProfile {
    std::size_t grid_size = 0;
    Eigen::MatrixXcd coeffs;           // D x L
    std::vector<std::string> tags;
    std::vector<double> d_over_lambda; // per measurement
    double lambda_group = 0.0;
    double residual = 0.0;             // sqrt(sum_i ||P_i - W_i a_i||^2)
    std::size_t solver_iters = 0;
    bool converged = true;
    std::vector<double> objective_log;

    double psi(std::size_t i) const {
        return -0.5 + static_cast<double>(i) / static_cast<double>(grid_size);
    }
};

// Approximately minimizes sum_i ||P_i - W_i a_i||_2^2 + lambda_g sum_j
// ||A_{j,:}||_2 with per-column sum and support constraints; the row-wise
// block soft-threshold couples the measurements into a shared row support.
JointProfile solve_joint(std::span<const JointMeasurement> measurements, double lambda_group,
                         const SolveOptions& opts = {});

enum class AoAMethod { sparse, joint, music, spotfi, ifft };

std::string to_string(AoAMethod method);

struct AoAEstimate {
    std::vector<double> angles_rad;             // sorted by |weight| descending
    std::vector<std::complex<double>> weights;  // relative path gains
    AoAMethod method = AoAMethod::sparse;
};

// Bins above rel_threshold * max|a| become paths; adjacent above-threshold
// bins merge to their magnitude-weighted centroid; theta = asin(Psi / (d/lambda)).
AoAEstimate extract_angles(const AoAProfile& profile, double rel_threshold = 0.05);

// Joint variant: selection and centroids use row L2 magnitudes; weights are
// the measurement-averaged summed coefficients per merged peak.
AoAEstimate extract_angles(const JointProfile& profile, double rel_threshold = 0.05);

// Full-vector MUSIC on the rank-1 outer product h h^H. With a single
// snapshot the signal subspace has rank 1, so this baseline cannot resolve
// more than one path; it is included as the comparison method. n_sources = 0
// selects the model order by the largest consecutive-eigenvalue ratio.
AoAEstimate music_aoa(const RelativeChannel& h, double d_over_lambda,
                      std::size_t n_sources = 0, double scan_step_deg = 0.25);

// Forward spatial smoothing: covariance averaged over the N - M + 1 sliding
// length-M subarrays (full rank for multipath), then MUSIC on the smoothed
// M x M covariance.
AoAEstimate spotfi_aoa(const RelativeChannel& h, double d_over_lambda,
                       std::size_t subarray_len = 5, std::size_t n_sources = 0,
                       double scan_step_deg = 0.25);

} // namespace emadir
