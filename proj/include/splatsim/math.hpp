#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "splatsim/error.hpp"

namespace splatsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec3i = Eigen::Vector3i;

inline Mat3 symmetrize(const Mat3& m) { return 0.5 * (m + m.transpose()); }

struct Svd3 {
    Mat3 u;      // rotation, det = +1
    Vec3 sigma;  // descending; sigma[2] carries the sign of det(F)
    Mat3 v;      // rotation, det = +1
};

namespace detail {

inline Svd3 svd3_jacobi(const Mat3& f) {
    Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Svd3 r{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    if (r.u.determinant() < 0) {
        r.u.col(2) *= -1.0;
        r.sigma[2] *= -1.0;
    }
    if (r.v.determinant() < 0) {
        r.v.col(2) *= -1.0;
        r.sigma[2] *= -1.0;
    }
    return r;
}

} // namespace detail

// Rotation-safe SVD of a 3x3 matrix: F = U * diag(sigma) * V^T with U, V
// proper rotations. Uses the closed-form symmetric eigen solve of F^T F for
// speed and falls back to Jacobi iterations when the spectrum is too
// squeezed for the normal-equations route.
inline Svd3 svd3(const Mat3& f) {
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(f.transpose() * f);
    const Vec3 lam = es.eigenvalues(); // ascending
    if (!(lam[2] > 0.0) || lam[0] < 1e-10 * lam[2]) {
        return detail::svd3_jacobi(f);
    }

    Svd3 r;
    r.sigma = Vec3(std::sqrt(lam[2]), std::sqrt(lam[1]), std::sqrt(lam[0]));
    r.v.col(0) = es.eigenvectors().col(2);
    r.v.col(1) = es.eigenvectors().col(1);
    r.v.col(2) = es.eigenvectors().col(0);
    if (r.v.determinant() < 0) r.v.col(2) *= -1.0;

    for (int i = 0; i < 3; ++i) r.u.col(i) = f * r.v.col(i) / r.sigma[i];
    // One Newton-Schulz sweep to restore orthonormality lost in F^T F.
    r.u = 0.5 * r.u * (3.0 * Mat3::Identity() - r.u.transpose() * r.u);
    if (r.u.determinant() < 0) {
        r.u.col(2) *= -1.0;
        r.sigma[2] *= -1.0;
    }

    const double scale = r.sigma.cwiseAbs().maxCoeff();
    if ((r.u * r.sigma.asDiagonal() * r.v.transpose() - f).norm() > 1e-9 * scale) {
        return detail::svd3_jacobi(f);
    }
    return r;
}

// Deterministic RNG: the mt19937_64 stream is specified by the standard and
// the value derivations below avoid std::*_distribution, whose output is
// implementation-defined.
class DetRng {
  public:
    explicit DetRng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    Vec3 normal_vec3() { return Vec3(normal(), normal(), normal()); }

    // Uniformly distributed rotation via normalized quaternion.
    Mat3 random_rotation() {
        Eigen::Quaterniond q(normal(), normal(), normal(), normal());
        q.normalize();
        return q.toRotationMatrix();
    }

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Mixes a stream id into a base seed; used to give independent deterministic
// substreams (per cell, per source) regardless of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace splatsim
