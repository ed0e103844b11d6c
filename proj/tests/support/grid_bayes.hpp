#pragma once

#include "ambiplan/belief.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace ambiplan::testing {

/// Brute-force Bayes over a regular state grid (1-D or 2-D), independent of
/// the Kalman algebra under test.
class StateGrid {
public:
    StateGrid(const Vector& center, double half_width, double pitch)
        : center_(center), pitch_(pitch), per_axis_(static_cast<int>(std::ceil(2.0 * half_width / pitch)) + 1),
          half_width_(half_width) {
        const auto dim = center.size();
        std::size_t total = 1;
        for (Eigen::Index i = 0; i < dim; ++i) total *= static_cast<std::size_t>(per_axis_);
        points_.reserve(total);
        if (dim == 1) {
            for (int i = 0; i < per_axis_; ++i) points_.push_back(Vector::Constant(1, coord(0, i)));
        } else {
            for (int i = 0; i < per_axis_; ++i)
                for (int j = 0; j < per_axis_; ++j) points_.push_back(Vector{{coord(0, i), coord(1, j)}});
        }
    }

    [[nodiscard]] const std::vector<Vector>& points() const { return points_; }
    [[nodiscard]] int per_axis() const { return per_axis_; }
    [[nodiscard]] double pitch() const { return pitch_; }

    /// Unnormalized Gaussian density at every grid point.
    [[nodiscard]] std::vector<double> gaussian(const Vector& mean, const Matrix& cov) const {
        const Matrix inv = cov.inverse();
        std::vector<double> out;
        out.reserve(points_.size());
        for (const auto& x : points_) {
            const Vector d = x - mean;
            out.push_back(std::exp(-0.5 * d.dot(inv * d)));
        }
        return out;
    }

private:
    double coord(Eigen::Index axis, int i) const { return center_(axis) - half_width_ + pitch_ * i; }

    Vector center_;
    double pitch_;
    int per_axis_;
    double half_width_;
    std::vector<Vector> points_;
};

inline void normalize(std::vector<double>& p) {
    double total = 0.0;
    for (double v : p) total += v;
    for (double& v : p) v /= total;
}

inline double total_variation(std::vector<double> p, std::vector<double> q) {
    normalize(p);
    normalize(q);
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
    return 0.5 * tv;
}

/// Agent-only linear-Gaussian world: x in R^n, z = H x + v.
inline WorldModel linear_world(const Matrix& h, const Matrix& obs_cov, const Matrix& process_cov) {
    WorldModel model;
    model.agent_dim = static_cast<std::size_t>(h.cols());
    model.process_noise = process_cov;
    model.obs_noise = obs_cov;
    model.obs_matrices = {h};
    model.association_prior = {1.0};
    model.targets = {Vector::Zero(h.cols())};
    model.actions = {ActionId::left, ActionId::right};
    model.validate();
    return model;
}

struct GridCase {
    ConditionalBelief prior;
    Matrix h;
    Matrix obs_cov;
    Vector z;
};

inline Matrix random_spd(Eigen::Index n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> ev(lo, hi);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = u(rng);
    const Eigen::HouseholderQR<Matrix> qr(a);
    const Matrix q = qr.householderQ();
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = ev(rng);
    return q * d.asDiagonal() * q.transpose();
}

/// Random 1-D (even seeds) or 2-D (odd seeds) measurement-update case.
inline GridCase random_grid_case(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::Index n = (seed % 2 == 0) ? 1 : 2;
    GridCase c;
    c.prior.mean = Vector(n);
    for (Eigen::Index i = 0; i < n; ++i) c.prior.mean(i) = 2.0 * u(rng);
    c.prior.covariance = random_spd(n, 0.2, 1.0, rng);
    c.h = Matrix(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) c.h(i, j) = (i == j ? 1.0 : 0.0) + 0.4 * u(rng);
    c.obs_cov = random_spd(n, 0.1, 0.8, rng);
    c.z = c.h * c.prior.mean;
    for (Eigen::Index i = 0; i < n; ++i) c.z(i) += u(rng);
    return c;
}

/// TV distance between the grid posterior and `posterior`, both on the grid.
inline double update_tv(const GridCase& c, const ConditionalBelief& posterior, double pitch) {
    const double sd = std::sqrt(c.prior.covariance.diagonal().maxCoeff());
    const StateGrid grid(posterior.mean, 9.0 * sd, pitch);
    const Matrix r_inv = c.obs_cov.inverse();
    std::vector<double> bayes = grid.gaussian(c.prior.mean, c.prior.covariance);
    for (std::size_t i = 0; i < bayes.size(); ++i) {
        const Vector e = c.z - c.h * grid.points()[i];
        bayes[i] *= std::exp(-0.5 * e.dot(r_inv * e));
    }
    return total_variation(bayes, grid.gaussian(posterior.mean, posterior.covariance));
}

/// TV between grid propagation of N(m, v) by drift d and noise q and the
/// Gaussian N(m', v') returned by the code under test (1-D).
inline double predict_tv(double m, double v, double drift, double q, double m_out, double v_out, double pitch) {
    const double half = 8.0 * std::sqrt(v + q);
    const int n = static_cast<int>(std::ceil(2.0 * half / pitch)) + 1;
    const double lo_prior = m - half;
    const double lo_post = m + drift - half;
    std::vector<double> prior(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = lo_prior + pitch * i;
        prior[static_cast<std::size_t>(i)] = std::exp(-0.5 * (x - m) * (x - m) / v);
    }
    normalize(prior);
    // Kernel offsets k * pitch, truncated at 8 standard deviations.
    const int kw = static_cast<int>(std::ceil(8.0 * std::sqrt(q) / pitch));
    std::vector<double> kernel(static_cast<std::size_t>(2 * kw + 1));
    for (int k = -kw; k <= kw; ++k) {
        const double s = k * pitch;
        kernel[static_cast<std::size_t>(k + kw)] = std::exp(-0.5 * s * s / q);
    }
    normalize(kernel);
    // post grid x_j = lo_post + j pitch = (lo_prior + i pitch) + drift + k pitch,
    // drift is a multiple of the pitch in the cases used here.
    const int shift = static_cast<int>(std::lround(drift / pitch));
    std::vector<double> post(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int k = -kw; k <= kw; ++k) {
            const int j = i + k + shift - static_cast<int>(std::lround((lo_post - lo_prior) / pitch));
            if (j < 0 || j >= n) continue;
            post[static_cast<std::size_t>(j)] +=
                prior[static_cast<std::size_t>(i)] * kernel[static_cast<std::size_t>(k + kw)];
        }
    }
    std::vector<double> gauss(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double x = lo_post + pitch * j;
        gauss[static_cast<std::size_t>(j)] = std::exp(-0.5 * (x - m_out) * (x - m_out) / v_out);
    }
    return total_variation(post, gauss);
}

}  // namespace ambiplan::testing
