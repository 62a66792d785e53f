#pragma once

#include "splatsim/math.hpp"
#include "splatsim/splat_model.hpp"

namespace splatsim {

// Maps simulation state onto renderable splat attributes. Covariances
// deform with the full deformation gradient; the appearance frame rotates
// with the polar-decomposition rotation while SH magnitudes stay fixed.

// Dynamic covariance a = F A F^T, numerically symmetrized.
inline Mat3 update_covariance(const Mat3& static_cov, const Mat3& def_grad) {
    return symmetrize(def_grad * static_cov * def_grad.transpose());
}

// Rotation factor of F = R S via SVD, det(R) = +1.
inline Mat3 extract_rotation(const Mat3& def_grad) {
    if (!(def_grad.determinant() > 0.0) || !def_grad.allFinite())
        throw SimError(ErrorCode::DegenerateGradient,
                       "polar decomposition of degenerate gradient");
    const Svd3 svd = svd3(def_grad);
    return svd.u * svd.v.transpose();
}

namespace detail {

// Band-1 real SH basis is B(d) = K1 (-d_y, d_z, -d_x); the coefficient
// triple therefore rotates with the conjugated matrix P R P^T.
inline Mat3 band1_coeff_rotation(const Mat3& r) {
    Mat3 p;
    p << 0, -1, 0,
         0, 0, 1,
         -1, 0, 0;
    return p * r * p.transpose();
}

} // namespace detail

// Rotates the appearance frame: band 0 is isotropic, band 1 transforms with
// the exact degree-1 representation, bands >= 2 pass through unchanged
// (documented fidelity limit).
inline ShCoeffs rotate_sh(const ShCoeffs& sh, const Mat3& rotation) {
    ShCoeffs out = sh;
    if (sh.size() < 4) return out;
    const Mat3 rep = detail::band1_coeff_rotation(rotation);
    for (int ch = 0; ch < 3; ++ch) {
        const Vec3 c(sh[1][ch], sh[2][ch], sh[3][ch]);
        const Vec3 rotated = rep * c;
        out[1][ch] = rotated[0];
        out[2][ch] = rotated[1];
        out[3][ch] = rotated[2];
    }
    return out;
}

// Base color implied by the band-0 coefficients (inverse of the SH0
// initialization).
inline std::array<double, 3> base_color_of(const ShCoeffs& sh) {
    return {kSh0 * sh[0][0] + 0.5, kSh0 * sh[0][1] + 0.5, kSh0 * sh[0][2] + 0.5};
}

} // namespace splatsim
