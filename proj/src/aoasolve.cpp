// SPDX-License-Identifier: Apache-2.0
#include "emadir/aoasolve.hpp"

#include "emadir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emadir {

namespace {

constexpr double kPi = 3.14159265358979323846;

// (1/N) sum_{n=0}^{N-1} exp(+j 2 pi n x): the finite-aperture response that
// the IFFT profile convolves every path with.
std::complex<double> dirichlet(std::size_t n_antennas, double x) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = 0; n < n_antennas; ++n) {
        const double ph = 2.0 * kPi * static_cast<double>(n) * x;
        acc += std::complex<double>(std::cos(ph), std::sin(ph));
    }
    return acc / static_cast<double>(n_antennas);
}

std::vector<std::size_t> support_indices(std::size_t grid_size, double d_over_lambda) {
    std::vector<std::size_t> s;
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double psi = -0.5 + static_cast<double>(j) / static_cast<double>(grid_size);
        if (std::abs(psi) <= d_over_lambda + 1e-12)
            s.push_back(j);
    }
    if (s.empty())
        throw ValidationError("solver: support window |Psi| <= " +
                              std::to_string(d_over_lambda) + " contains no grid bins");
    return s;
}

void check_d_over_lambda(double dol) {
    if (!(dol > 0.0) || !(dol < 0.5))
        throw ValidationError("solver: d_over_lambda must lie in (0, 1/2), got " +
                              std::to_string(dol));
}

// Minimizes ||P - A z||_2 subject to sum(z) = 1 through the KKT system; a
// rank-revealing solve keeps degenerate active sets harmless (the caller
// guards acceptance on the objective anyway).
Eigen::VectorXcd constrained_ls(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& p) {
    const Eigen::Index k = a.cols();
    Eigen::MatrixXcd kkt(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = 2.0 * (a.adjoint() * a);
    kkt.topRightCorner(k, 1).setConstant(std::complex<double>(1.0, 0.0));
    kkt.bottomLeftCorner(1, k).setConstant(std::complex<double>(1.0, 0.0));
    kkt(k, k) = std::complex<double>(0.0, 0.0);

    Eigen::VectorXcd rhs(k + 1);
    rhs.head(k) = 2.0 * (a.adjoint() * p);
    rhs(k) = std::complex<double>(1.0, 0.0);

    const Eigen::VectorXcd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    return sol.head(k);
}

double l1_norm(const Eigen::VectorXcd& x) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        acc += std::abs(x(i));
    return acc;
}

struct QuadTerm {
    Eigen::MatrixXcd g;     // Ws^H Ws
    Eigen::VectorXcd c;     // Ws^H P
    double pnorm2 = 0.0;
    double lmax = 0.0;      // largest eigenvalue of g

    double residual2(const Eigen::VectorXcd& x) const {
        const double r2 = pnorm2 - 2.0 * (x.adjoint() * c)(0).real() +
                          (x.adjoint() * (g * x))(0).real();
        return std::max(r2, 0.0);
    }
};

QuadTerm make_quad(const Eigen::MatrixXcd& ws, const Eigen::VectorXcd& p) {
    QuadTerm q;
    q.g = ws.adjoint() * ws;
    q.c = ws.adjoint() * p;
    q.pnorm2 = p.squaredNorm();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q.g, Eigen::EigenvaluesOnly);
    q.lmax = std::max(es.eigenvalues().maxCoeff(), 1e-12);
    return q;
}

void soft_threshold(Eigen::VectorXcd& v, double amount) {
    if (amount <= 0.0)
        return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double m = std::abs(v(i));
        v(i) = (m <= amount) ? std::complex<double>(0.0, 0.0) : v(i) * (1.0 - amount / m);
    }
}

void project_sum_one(Eigen::VectorXcd& v) {
    const std::complex<double> shift =
        (std::complex<double>(1.0, 0.0) - v.sum()) / static_cast<double>(v.size());
    v.array() += shift;
}

} // namespace

WindowMatrix build_window_matrix(std::size_t n_antennas_incl_ref, std::size_t grid_size) {
    if (n_antennas_incl_ref < 2)
        throw ValidationError("build_window_matrix: need at least 2 antennas");
    if (grid_size < 4 * n_antennas_incl_ref)
        throw ValidationError("build_window_matrix: grid size " + std::to_string(grid_size) +
                              " is below the oversampling floor 4 * n_antennas = " +
                              std::to_string(4 * n_antennas_incl_ref));

    WindowMatrix wm;
    wm.grid_size = grid_size;
    wm.n_antennas = n_antennas_incl_ref;
    wm.w.resize(static_cast<Eigen::Index>(grid_size), static_cast<Eigen::Index>(grid_size));

    // Circulant: precompute one column of kernel values over the wrapped
    // grid distance, then shift.
    std::vector<std::complex<double>> col0(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i)
        col0[i] = dirichlet(n_antennas_incl_ref,
                            static_cast<double>(i) / static_cast<double>(grid_size));
    for (std::size_t j = 0; j < grid_size; ++j)
        for (std::size_t i = 0; i < grid_size; ++i)
            wm.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                col0[(i + grid_size - j) % grid_size];
    return wm;
}

Eigen::VectorXcd ifft_profile(const RelativeChannel& h, std::size_t grid_size) {
    validate(h);
    if (grid_size < 4 * h.values.size())
        throw ValidationError("ifft_profile: grid size " + std::to_string(grid_size) +
                              " is below the oversampling floor 4 * n_antennas = " +
                              std::to_string(4 * h.values.size()));

    const std::size_t n = h.values.size();
    Eigen::VectorXcd p(static_cast<Eigen::Index>(grid_size));
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double psi = -0.5 + static_cast<double>(i) / static_cast<double>(grid_size);
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double ph = 2.0 * kPi * static_cast<double>(k) * psi;
            acc += h.values[k] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        p(static_cast<Eigen::Index>(i)) = acc / static_cast<double>(n);
    }
    return p;
}

AoAProfile solve_sparse(const Eigen::VectorXcd& p, const WindowMatrix& w, double beta,
                        double d_over_lambda, const SolveOptions& opts) {
    if (w.grid_size == 0 || static_cast<std::size_t>(p.size()) != w.grid_size)
        throw ValidationError("solve_sparse: profile length " + std::to_string(p.size()) +
                              " does not match grid size " + std::to_string(w.grid_size));
    if (!(beta >= 0.0))
        throw ValidationError("solve_sparse: beta must be nonnegative");
    check_d_over_lambda(d_over_lambda);
    if (opts.max_iters == 0 || !(opts.tol > 0.0))
        throw ValidationError("solve_sparse: max_iters and tol must be positive");

    const std::vector<std::size_t> support = support_indices(w.grid_size, d_over_lambda);
    const std::size_t s = support.size();

    Eigen::MatrixXcd ws(p.size(), static_cast<Eigen::Index>(s));
    for (std::size_t k = 0; k < s; ++k)
        ws.col(static_cast<Eigen::Index>(k)) = w.w.col(static_cast<Eigen::Index>(support[k]));
    const QuadTerm q = make_quad(ws, p);

    auto objective = [&](const Eigen::VectorXcd& x) {
        const double r2 = q.residual2(x);
        return (opts.squared_residual ? r2 : std::sqrt(r2)) + beta * l1_norm(x);
    };

    Eigen::VectorXcd x = Eigen::VectorXcd::Constant(
        static_cast<Eigen::Index>(s), std::complex<double>(1.0 / static_cast<double>(s), 0.0));
    double f = objective(x);

    const double eta0 = 1.0 / (2.0 * q.lmax);
    double eta = eta0;

    AoAProfile prof;
    prof.grid_size = w.grid_size;
    prof.d_over_lambda = d_over_lambda;
    prof.objective_log.reserve(std::min<std::size_t>(opts.max_iters + 2, 4096));
    prof.objective_log.push_back(f);

    std::size_t iter = 0;
    std::size_t patience = 0;
    double last_rel_change = 0.0;
    bool at_fixed_point = false;

    for (; iter < opts.max_iters && !at_fixed_point; ++iter) {
        Eigen::VectorXcd grad = q.g * x - q.c;
        if (opts.squared_residual) {
            grad *= 2.0;
        } else {
            grad /= std::max(std::sqrt(q.residual2(x)), 1e-12);
        }

        bool accepted = false;
        Eigen::VectorXcd v;
        double fv = f;
        for (int bt = 0; bt < 64; ++bt) {
            v = x - eta * grad;
            soft_threshold(v, eta * beta);
            project_sum_one(v);
            fv = objective(v);
            if (fv <= f) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            at_fixed_point = true; // no descent step exists at machine precision
            break;
        }

        last_rel_change = (f - fv) / std::max(1.0, std::abs(f));
        x = v;
        f = fv;
        if (prof.objective_log.size() < opts.max_iters + 2)
            prof.objective_log.push_back(f);
        patience = (last_rel_change < opts.tol) ? patience + 1 : 0;
        if (patience >= 3) {
            ++iter;
            break;
        }
        eta = std::min(eta * 1.25, eta0);
    }
    prof.solver_iters = iter;
    prof.converged = at_fixed_point || patience >= 3 || last_rel_change <= 100.0 * opts.tol;

    if (opts.polish) {
        double xmax = 0.0;
        for (std::size_t k = 0; k < s; ++k)
            xmax = std::max(xmax, std::abs(x(static_cast<Eigen::Index>(k))));
        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < s; ++k)
            if (std::abs(x(static_cast<Eigen::Index>(k))) > opts.active_rel_threshold * xmax)
                active.push_back(k);
        if (!active.empty() && active.size() < s) {
            Eigen::MatrixXcd wa(p.size(), static_cast<Eigen::Index>(active.size()));
            for (std::size_t k = 0; k < active.size(); ++k)
                wa.col(static_cast<Eigen::Index>(k)) =
                    ws.col(static_cast<Eigen::Index>(active[k]));
            const Eigen::VectorXcd z = constrained_ls(wa, p);
            const double r2 = (p - wa * z).squaredNorm();
            const double fz =
                (opts.squared_residual ? r2 : std::sqrt(r2)) + beta * l1_norm(z);
            if (fz <= f + 1e-12 * (1.0 + std::abs(f))) {
                x.setZero();
                for (std::size_t k = 0; k < active.size(); ++k)
                    x(static_cast<Eigen::Index>(active[k])) = z(static_cast<Eigen::Index>(k));
                f = fz;
                prof.objective_log.push_back(f);
            }
        }
    }

    prof.coeffs = Eigen::VectorXcd::Zero(p.size());
    for (std::size_t k = 0; k < s; ++k)
        prof.coeffs(static_cast<Eigen::Index>(support[k])) = x(static_cast<Eigen::Index>(k));
    prof.residual = (p - ws * x).norm();
    return prof;
}

JointProfile solve_joint(std::span<const JointMeasurement> measurements, double lambda_group,
                         const SolveOptions& opts) {
    if (measurements.empty())
        throw ValidationError("solve_joint: at least one measurement is required");
    if (!(lambda_group >= 0.0))
        throw ValidationError("solve_joint: lambda_group must be nonnegative");
    if (opts.max_iters == 0 || !(opts.tol > 0.0))
        throw ValidationError("solve_joint: max_iters and tol must be positive");

    const std::size_t L = measurements.size();
    const WindowMatrix* w0 = measurements[0].window;
    if (w0 == nullptr)
        throw ValidationError("solve_joint: measurement 0 has no window matrix");
    const std::size_t d = w0->grid_size;

    std::vector<std::vector<std::size_t>> support(L);
    std::vector<std::vector<long>> local_of_row(L);
    std::vector<Eigen::MatrixXcd> ws(L);
    std::vector<QuadTerm> q(L);
    double lmax = 0.0;

    for (std::size_t i = 0; i < L; ++i) {
        const JointMeasurement& m = measurements[i];
        if (m.window == nullptr || m.window->grid_size != d)
            throw ValidationError("solve_joint: measurement " + std::to_string(i) +
                                  " grid size differs from measurement 0");
        if (static_cast<std::size_t>(m.profile.size()) != d)
            throw ValidationError("solve_joint: measurement " + std::to_string(i) +
                                  " profile length does not match the grid");
        check_d_over_lambda(m.d_over_lambda);
        support[i] = support_indices(d, m.d_over_lambda);
        local_of_row[i].assign(d, -1);
        for (std::size_t k = 0; k < support[i].size(); ++k)
            local_of_row[i][support[i][k]] = static_cast<long>(k);
        ws[i].resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(support[i].size()));
        for (std::size_t k = 0; k < support[i].size(); ++k)
            ws[i].col(static_cast<Eigen::Index>(k)) =
                m.window->w.col(static_cast<Eigen::Index>(support[i][k]));
        q[i] = make_quad(ws[i], m.profile);
        lmax = std::max(lmax, q[i].lmax);
    }

    std::vector<std::size_t> rows; // union of supports, ascending
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < L; ++i)
            if (local_of_row[i][j] >= 0) {
                rows.push_back(j);
                break;
            }

    std::vector<Eigen::VectorXcd> x(L);
    for (std::size_t i = 0; i < L; ++i)
        x[i] = Eigen::VectorXcd::Constant(
            static_cast<Eigen::Index>(support[i].size()),
            std::complex<double>(1.0 / static_cast<double>(support[i].size()), 0.0));

    auto row_norm = [&](const std::vector<Eigen::VectorXcd>& cols, std::size_t j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < L; ++i) {
            const long k = local_of_row[i][j];
            if (k >= 0)
                acc += std::norm(cols[i](k));
        }
        return std::sqrt(acc);
    };
    auto objective = [&](const std::vector<Eigen::VectorXcd>& cols) {
        double acc = 0.0;
        for (std::size_t i = 0; i < L; ++i)
            acc += q[i].residual2(cols[i]);
        for (const std::size_t j : rows)
            acc += lambda_group * row_norm(cols, j);
        return acc;
    };

    double f = objective(x);
    const double eta0 = 1.0 / (2.0 * lmax);
    double eta = eta0;

    JointProfile prof;
    prof.grid_size = d;
    prof.lambda_group = lambda_group;
    for (std::size_t i = 0; i < L; ++i) {
        prof.tags.push_back(measurements[i].tag);
        prof.d_over_lambda.push_back(measurements[i].d_over_lambda);
    }
    prof.objective_log.reserve(std::min<std::size_t>(opts.max_iters + 2, 4096));
    prof.objective_log.push_back(f);

    std::size_t iter = 0;
    std::size_t patience = 0;
    double last_rel_change = 0.0;
    bool at_fixed_point = false;
    std::vector<Eigen::VectorXcd> v(L);

    for (; iter < opts.max_iters && !at_fixed_point; ++iter) {
        std::vector<Eigen::VectorXcd> grad(L);
        for (std::size_t i = 0; i < L; ++i)
            grad[i] = 2.0 * (q[i].g * x[i] - q[i].c);

        bool accepted = false;
        double fv = f;
        for (int bt = 0; bt < 64; ++bt) {
            for (std::size_t i = 0; i < L; ++i)
                v[i] = x[i] - eta * grad[i];
            // Row-wise block soft-threshold couples the columns.
            for (const std::size_t j : rows) {
                const double rn = row_norm(v, j);
                const double scale =
                    (rn <= eta * lambda_group) ? 0.0 : 1.0 - eta * lambda_group / rn;
                for (std::size_t i = 0; i < L; ++i) {
                    const long k = local_of_row[i][j];
                    if (k >= 0)
                        v[i](k) *= scale;
                }
            }
            for (std::size_t i = 0; i < L; ++i)
                project_sum_one(v[i]);
            fv = objective(v);
            if (fv <= f) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            at_fixed_point = true;
            break;
        }

        last_rel_change = (f - fv) / std::max(1.0, std::abs(f));
        x.swap(v);
        f = fv;
        if (prof.objective_log.size() < opts.max_iters + 2)
            prof.objective_log.push_back(f);
        patience = (last_rel_change < opts.tol) ? patience + 1 : 0;
        if (patience >= 3) {
            ++iter;
            break;
        }
        eta = std::min(eta * 1.25, eta0);
    }
    prof.solver_iters = iter;
    prof.converged = at_fixed_point || patience >= 3 || last_rel_change <= 100.0 * opts.tol;

    if (opts.polish) {
        double rmax = 0.0;
        for (const std::size_t j : rows)
            rmax = std::max(rmax, row_norm(x, j));
        std::vector<std::size_t> active_rows;
        for (const std::size_t j : rows)
            if (row_norm(x, j) > opts.active_rel_threshold * rmax)
                active_rows.push_back(j);

        if (!active_rows.empty()) {
            std::vector<Eigen::VectorXcd> z(L);
            bool feasible = true;
            for (std::size_t i = 0; i < L && feasible; ++i) {
                std::vector<std::size_t> cols;
                for (const std::size_t j : active_rows)
                    if (local_of_row[i][j] >= 0)
                        cols.push_back(static_cast<std::size_t>(local_of_row[i][j]));
                if (cols.empty()) {
                    feasible = false;
                    break;
                }
                Eigen::MatrixXcd wa(static_cast<Eigen::Index>(d),
                                    static_cast<Eigen::Index>(cols.size()));
                for (std::size_t k = 0; k < cols.size(); ++k)
                    wa.col(static_cast<Eigen::Index>(k)) =
                        ws[i].col(static_cast<Eigen::Index>(cols[k]));
                const Eigen::VectorXcd zi = constrained_ls(wa, measurements[i].profile);
                z[i] = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(support[i].size()));
                for (std::size_t k = 0; k < cols.size(); ++k)
                    z[i](static_cast<Eigen::Index>(cols[k])) = zi(static_cast<Eigen::Index>(k));
            }
            if (feasible) {
                const double fz = objective(z);
                if (fz <= f + 1e-12 * (1.0 + std::abs(f))) {
                    x = z;
                    f = fz;
                    prof.objective_log.push_back(f);
                }
            }
        }
    }

    prof.coeffs = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d),
                                         static_cast<Eigen::Index>(L));
    double res2 = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t k = 0; k < support[i].size(); ++k)
            prof.coeffs(static_cast<Eigen::Index>(support[i][k]), static_cast<Eigen::Index>(i)) =
                x[i](static_cast<Eigen::Index>(k));
        res2 += (measurements[i].profile - ws[i] * x[i]).squaredNorm();
    }
    prof.residual = std::sqrt(res2);
    return prof;
}

std::string to_string(AoAMethod method) {
    switch (method) {
    case AoAMethod::sparse:
        return "sparse";
    case AoAMethod::joint:
        return "joint";
    case AoAMethod::music:
        return "music";
    case AoAMethod::spotfi:
        return "spotfi";
    case AoAMethod::ifft:
        return "ifft";
    }
    return "?";
}

namespace {

struct RawPeak {
    double psi = 0.0;
    double selection = 0.0; // magnitude used for ordering
    std::complex<double> weight{0.0, 0.0};
};

// Shared merging/ordering for profile-based extraction. mags drives
// selection and centroids; weights accumulate the complex coefficients.
AoAEstimate extract_from_grid(const std::vector<double>& mags,
                              const std::vector<std::complex<double>>& weights,
                              std::size_t grid_size, double d_over_lambda,
                              double rel_threshold, AoAMethod method) {
    double vmax = 0.0;
    for (const double m : mags)
        vmax = std::max(vmax, m);
    if (vmax <= 0.0)
        throw NoPathFoundError("extract_angles: profile is identically zero");

    const double cut = rel_threshold * vmax;
    std::vector<RawPeak> peaks;
    std::size_t j = 0;
    while (j < grid_size) {
        if (mags[j] <= cut) {
            ++j;
            continue;
        }
        RawPeak pk;
        double mass = 0.0;
        double psi_acc = 0.0;
        while (j < grid_size && mags[j] > cut) {
            const double psi = -0.5 + static_cast<double>(j) / static_cast<double>(grid_size);
            mass += mags[j];
            psi_acc += mags[j] * psi;
            pk.weight += weights[j];
            pk.selection = std::max(pk.selection, mags[j]);
            ++j;
        }
        pk.psi = psi_acc / mass;
        peaks.push_back(pk);
    }

    std::sort(peaks.begin(), peaks.end(), [](const RawPeak& a, const RawPeak& b) {
        if (std::abs(std::abs(a.weight) - std::abs(b.weight)) > 1e-12)
            return std::abs(a.weight) > std::abs(b.weight);
        if (std::abs(a.psi) != std::abs(b.psi))
            return std::abs(a.psi) < std::abs(b.psi); // ties toward smaller |Psi|
        return a.psi < b.psi;
    });

    AoAEstimate est;
    est.method = method;
    for (const RawPeak& pk : peaks) {
        const double sn = std::clamp(pk.psi / d_over_lambda, -1.0, 1.0);
        est.angles_rad.push_back(std::asin(sn));
        est.weights.push_back(pk.weight);
    }
    return est;
}

} // namespace

AoAEstimate extract_angles(const AoAProfile& profile, double rel_threshold) {
    if (profile.grid_size == 0 ||
        static_cast<std::size_t>(profile.coeffs.size()) != profile.grid_size)
        throw ValidationError("extract_angles: malformed profile");
    if (!(rel_threshold > 0.0) || rel_threshold >= 1.0)
        throw ValidationError("extract_angles: rel_threshold must lie in (0, 1)");
    std::vector<double> mags(profile.grid_size);
    std::vector<std::complex<double>> weights(profile.grid_size);
    for (std::size_t j = 0; j < profile.grid_size; ++j) {
        mags[j] = std::abs(profile.coeffs(static_cast<Eigen::Index>(j)));
        weights[j] = profile.coeffs(static_cast<Eigen::Index>(j));
    }
    return extract_from_grid(mags, weights, profile.grid_size, profile.d_over_lambda,
                             rel_threshold, AoAMethod::sparse);
}

AoAEstimate extract_angles(const JointProfile& profile, double rel_threshold) {
    if (profile.grid_size == 0 ||
        static_cast<std::size_t>(profile.coeffs.rows()) != profile.grid_size ||
        profile.coeffs.cols() == 0)
        throw ValidationError("extract_angles: malformed joint profile");
    if (!(rel_threshold > 0.0) || rel_threshold >= 1.0)
        throw ValidationError("extract_angles: rel_threshold must lie in (0, 1)");
    const std::size_t l = static_cast<std::size_t>(profile.coeffs.cols());
    std::vector<double> mags(profile.grid_size);
    std::vector<std::complex<double>> weights(profile.grid_size);
    for (std::size_t j = 0; j < profile.grid_size; ++j) {
        mags[j] = profile.coeffs.row(static_cast<Eigen::Index>(j)).norm();
        weights[j] = profile.coeffs.row(static_cast<Eigen::Index>(j)).sum() /
                     static_cast<double>(l);
    }
    // d/lambda may differ per measurement only in the fourth decimal for
    // harmonic diversity; the first measurement's value converts Psi to angle.
    return extract_from_grid(mags, weights, profile.grid_size, profile.d_over_lambda[0],
                             rel_threshold, AoAMethod::joint);
}

namespace {

std::size_t eigengap_order(const Eigen::VectorXd& evals_ascending) {
    const Eigen::Index n = evals_ascending.size();
    const double lmax = std::max(evals_ascending(n - 1), 1e-300);
    std::size_t best_i = 1;
    double best_ratio = -1.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        // descending index i corresponds to ascending index n-1-i
        const double hi = std::max(evals_ascending(n - 1 - i), 1e-15 * lmax);
        const double lo = std::max(evals_ascending(n - 2 - i), 1e-15 * lmax);
        const double ratio = hi / lo;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_i = static_cast<std::size_t>(i) + 1;
        }
    }
    return best_i;
}

AoAEstimate music_on_covariance(const Eigen::MatrixXcd& r, double d_over_lambda,
                                std::size_t n_sources, double scan_step_deg,
                                AoAMethod method) {
    const std::size_t n = static_cast<std::size_t>(r.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    if (n_sources == 0)
        n_sources = eigengap_order(es.eigenvalues());
    if (n_sources >= n)
        throw ValidationError("music: n_sources " + std::to_string(n_sources) +
                              " must be below the element count " + std::to_string(n));

    const Eigen::MatrixXcd noise =
        es.eigenvectors().leftCols(static_cast<Eigen::Index>(n - n_sources));

    const std::size_t n_points = static_cast<std::size_t>(std::floor(180.0 / scan_step_deg)) + 1;
    std::vector<double> spectrum(n_points);
    std::vector<double> angles(n_points);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n_points; ++i) {
        const double theta_deg = -90.0 + static_cast<double>(i) * scan_step_deg;
        const double theta = theta_deg * kPi / 180.0;
        angles[i] = theta;
        const double s = std::sin(theta);
        for (std::size_t k = 0; k < n; ++k) {
            const double ph = -2.0 * kPi * static_cast<double>(k) * d_over_lambda * s;
            v(static_cast<Eigen::Index>(k)) =
                std::complex<double>(std::cos(ph), std::sin(ph)) * inv_sqrt_n;
        }
        spectrum[i] = 1.0 / std::max((noise.adjoint() * v).squaredNorm(), 1e-30);
    }

    std::vector<std::pair<double, double>> peaks; // (height, angle)
    for (std::size_t i = 0; i < n_points; ++i) {
        const bool left_ok = (i == 0) || spectrum[i] > spectrum[i - 1];
        const bool right_ok = (i + 1 == n_points) || spectrum[i] >= spectrum[i + 1];
        if (left_ok && right_ok)
            peaks.emplace_back(spectrum[i], angles[i]);
    }
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return std::abs(a.second) < std::abs(b.second);
    });
    if (peaks.size() > n_sources)
        peaks.resize(n_sources);

    double total = 0.0;
    for (const auto& [h, ang] : peaks)
        total += h;
    AoAEstimate est;
    est.method = method;
    for (const auto& [h, ang] : peaks) {
        est.angles_rad.push_back(ang);
        est.weights.emplace_back(h / std::max(total, 1e-300), 0.0);
    }
    return est;
}

} // namespace

AoAEstimate music_aoa(const RelativeChannel& h, double d_over_lambda, std::size_t n_sources,
                      double scan_step_deg) {
    validate(h);
    check_d_over_lambda(d_over_lambda);
    if (h.values.size() < 2)
        throw ValidationError("music_aoa: need at least 2 channel values");
    if (!(scan_step_deg > 0.0))
        throw ValidationError("music_aoa: scan_step_deg must be positive");

    const Eigen::Index n = static_cast<Eigen::Index>(h.values.size());
    Eigen::VectorXcd hv(n);
    for (Eigen::Index i = 0; i < n; ++i)
        hv(i) = h.values[static_cast<std::size_t>(i)];
    const Eigen::MatrixXcd r = hv * hv.adjoint();
    return music_on_covariance(r, d_over_lambda, n_sources, scan_step_deg, AoAMethod::music);
}

AoAEstimate spotfi_aoa(const RelativeChannel& h, double d_over_lambda, std::size_t subarray_len,
                       std::size_t n_sources, double scan_step_deg) {
    validate(h);
    check_d_over_lambda(d_over_lambda);
    if (!(scan_step_deg > 0.0))
        throw ValidationError("spotfi_aoa: scan_step_deg must be positive");
    const std::size_t n = h.values.size();
    if (subarray_len < 2)
        throw ValidationError("spotfi_aoa: subarray_len must be at least 2");
    if (subarray_len > n)
        throw ValidationError("spotfi_aoa: subarray_len " + std::to_string(subarray_len) +
                              " exceeds the channel length " + std::to_string(n));

    const std::size_t n_sub = n - subarray_len + 1;
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(subarray_len),
                                                static_cast<Eigen::Index>(subarray_len));
    Eigen::VectorXcd x(static_cast<Eigen::Index>(subarray_len));
    for (std::size_t k = 0; k < n_sub; ++k) {
        for (std::size_t i = 0; i < subarray_len; ++i)
            x(static_cast<Eigen::Index>(i)) = h.values[k + i];
        r += x * x.adjoint();
    }
    r /= static_cast<double>(n_sub);
    return music_on_covariance(r, d_over_lambda, n_sources, scan_step_deg, AoAMethod::spotfi);
}

} // namespace emadir
