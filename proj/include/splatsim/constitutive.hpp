#pragma once

#include <algorithm>
#include <cmath>

#include "splatsim/math.hpp"
#include "splatsim/splat_model.hpp"

namespace splatsim {

// NACC elastoplastic law. Stress state is reduced to the volumetric measure
// p = -tr(tau)/3 and shear measure q = sqrt(3/2) |dev tau|; the elastic
// region is the interior of an ellipse y(p,q) <= 0 whose size follows the
// hardening variable alpha through p0. Trial states outside the surface are
// projected back with a continuous return map and F is rewritten to match
// the projected state.

enum class ReturnCase { Elastic, TipUpper, TipLower, Interior };

inline const char* return_case_name(ReturnCase c) {
    switch (c) {
        case ReturnCase::Elastic: return "elastic";
        case ReturnCase::TipUpper: return "tip_upper";
        case ReturnCase::TipLower: return "tip_lower";
        case ReturnCase::Interior: return "interior";
    }
    return "?";
}

struct ReturnMapResult {
    YieldPoint projected;
    ReturnCase case_tag = ReturnCase::Elastic;
    Mat3 new_def_grad = Mat3::Identity(); // filled by plastic_step
    double delta_alpha = 0.0;             // filled by plastic_step
};

namespace detail {

// Principal Kirchhoff stress for the given principal stretches.
inline Vec3 principal_stress(const Vec3& sigma, const NaccMaterial& mat) {
    if (mat.elastic_model == ElasticModel::StvkHencky) {
        const Vec3 eps = sigma.array().log();
        const double tr = eps.sum();
        return 2.0 * mat.mu * eps + Vec3::Constant(mat.lambda * tr);
    }
    // Neo-Hookean: tau = mu (F F^T - I) + lambda ln(J) I
    const double log_j = std::log(sigma.prod());
    return mat.mu * (sigma.array().square() - 1.0).matrix() +
           Vec3::Constant(mat.lambda * log_j);
}

inline YieldPoint pq_of_principal(const Vec3& tau) {
    const double mean = tau.sum() / 3.0;
    const Vec3 dev = tau - Vec3::Constant(mean);
    return {-mean, std::sqrt(1.5) * dev.norm()};
}

inline void require_invertible(const Mat3& f) {
    if (!(f.determinant() > 0.0) || !f.allFinite())
        throw SimError(ErrorCode::DegenerateGradient,
                       "deformation gradient with det <= 0");
}

// Both real roots of a t^2 + b t + c = 0 in ascending order, computed in
// the cancellation-stable form. Caller guarantees disc >= 0 and a > 0.
inline void quadratic_roots(double a, double b, double c, double& r1, double& r2) {
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    const double s = std::sqrt(disc);
    const double qq = -0.5 * (b + (b >= 0.0 ? s : -s));
    double x1 = qq / a;
    double x2 = (qq != 0.0) ? c / qq : 0.0;
    if (x1 > x2) std::swap(x1, x2);
    r1 = x1;
    r2 = x2;
}

} // namespace detail

// Kirchhoff stress of an elastic deformation gradient. StvkHencky evaluates
// tau = 2 mu eps + lambda tr(eps) I in the principal frame with
// eps = log(sigma); Neo-Hookean uses tau = mu (F F^T - I) + lambda ln(J) I.
inline Mat3 kirchhoff_stress(const Mat3& def_grad, const NaccMaterial& mat) {
    detail::require_invertible(def_grad);
    const Svd3 svd = svd3(def_grad);
    const Vec3 tau = detail::principal_stress(svd.sigma, mat);
    return svd.u * tau.asDiagonal() * svd.u.transpose();
}

// (p, q) of the Kirchhoff stress: p = -tr(tau)/3, q = sqrt(3/2) |dev tau|_F.
inline YieldPoint pq_of(const Mat3& def_grad, const NaccMaterial& mat) {
    detail::require_invertible(def_grad);
    const Svd3 svd = svd3(def_grad);
    return detail::pq_of_principal(detail::principal_stress(svd.sigma, mat));
}

// Consolidation pressure p0 = kappa sinh(xi max(-alpha, 0)).
inline double p0_of(double alpha, const NaccMaterial& mat) {
    return mat.kappa * std::sinh(mat.xi * std::max(-alpha, 0.0));
}

// Yield function y(p, q) = q^2 (1 + 2 beta) + M^2 (p + beta p0)(p - p0);
// y <= 0 is the elastic region.
inline double yield(const YieldPoint& pt, double p0, const NaccMaterial& mat) {
    const double m2 = mat.slope_m * mat.slope_m;
    return pt.q * pt.q * (1.0 + 2.0 * mat.beta) +
           m2 * (pt.p + mat.beta * p0) * (pt.p - p0);
}

// Continuous return map. Tip projections are unchanged from the classic
// scheme; the interior branch replaces the fixed ellipse center by the
// pseudo-center p_c' = p_c + phi_k (p_tr - p_c), phi_k = |(p_tr-p_c)/L_p|^k,
// which removes the directional jump at p = p0 for any finite k.
inline ReturnMapResult return_map(const YieldPoint& trial, double p0,
                                  const NaccMaterial& mat, double k = 2.0) {
    ReturnMapResult res;
    res.projected = trial;
    res.case_tag = ReturnCase::Elastic;
    if (yield(trial, p0, mat) <= 0.0) return res;

    if (p0 <= 0.0) {
        // Degenerate surface: the ellipse collapses to the origin and both
        // tip rules land there (fluid limit).
        res.projected = {0.0, 0.0};
        res.case_tag = trial.p >= 0.0 ? ReturnCase::TipUpper : ReturnCase::TipLower;
        return res;
    }
    if (trial.p > p0) {
        res.projected = {p0, 0.0};
        res.case_tag = ReturnCase::TipUpper;
        return res;
    }
    if (trial.p < -mat.beta * p0) {
        res.projected = {-mat.beta * p0, 0.0};
        res.case_tag = ReturnCase::TipLower;
        return res;
    }

    const double pc = 0.5 * (1.0 - mat.beta) * p0;
    const double lp = p0 - pc; // semi-major axis
    const double phi = std::pow(std::abs((trial.p - pc) / lp), k);
    const double pcd = pc + phi * (trial.p - pc);

    const double m2 = mat.slope_m * mat.slope_m;
    const double dp = trial.p - pcd;
    const double a = (1.0 + 2.0 * mat.beta) * trial.q * trial.q + m2 * dp * dp;
    const double b = m2 * dp * (2.0 * pcd + mat.beta * p0 - p0);
    const double c = m2 * (pcd + mat.beta * p0) * (pcd - p0); // y(pcd, 0) <= 0

    double t = 0.0;
    if (a > 0.0) {
        double r1, r2;
        detail::quadratic_roots(a, b, c, r1, r2);
        t = (r1 >= 0.0) ? r1 : r2; // smallest non-negative root
        t = std::clamp(t, 0.0, 1.0);
    }
    res.projected = {pcd + t * dp, t * trial.q};
    res.case_tag = ReturnCase::Interior;
    return res;
}

namespace detail {

// Solves for Hencky strain eps = (m/3) I + s * dhat such that the principal
// stress of exp(eps) evaluates to the target (p, q). dhat is the unit
// deviatoric direction of the trial strain. Closed form for StvkHencky,
// Newton for other models (seeded with the StvkHencky solution).
inline Vec3 solve_hencky_for_pq(const Vec3& eps_trial, const YieldPoint& target,
                                const NaccMaterial& mat) {
    const double m_tr = eps_trial.sum();
    Vec3 dev = eps_trial - Vec3::Constant(m_tr / 3.0);
    const double dn = dev.norm();
    const Vec3 dhat = dn > 0.0 ? Vec3(dev / dn) : Vec3::Zero();

    double m = -target.p / mat.kappa;
    double s = (dn > 0.0) ? target.q / (std::sqrt(6.0) * mat.mu) : 0.0;

    if (mat.elastic_model == ElasticModel::StvkHencky)
        return Vec3::Constant(m / 3.0) + s * dhat;

    const double scale = std::max({1.0, std::abs(target.p), target.q});
    for (int it = 0; it < 60; ++it) {
        const Vec3 eps = Vec3::Constant(m / 3.0) + s * dhat;
        const Vec3 e2 = (2.0 * eps).array().exp();
        const Vec3 tau = mat.mu * (e2 - Vec3::Ones()) + Vec3::Constant(mat.lambda * m);
        const YieldPoint pq = pq_of_principal(tau);
        const double fp = pq.p - target.p;
        const double fq = pq.q - target.q;
        if (std::abs(fp) < 1e-11 * scale && std::abs(fq) < 1e-11 * scale) break;

        const Vec3 dtau_dm = (2.0 / 3.0) * mat.mu * e2 + Vec3::Constant(mat.lambda);
        const Vec3 dtau_ds = 2.0 * mat.mu * e2.cwiseProduct(dhat);
        const double dp_dm = -dtau_dm.sum() / 3.0;
        const double dp_ds = -dtau_ds.sum() / 3.0;
        const Vec3 dev_tau = tau - Vec3::Constant(tau.sum() / 3.0);
        const double devn = dev_tau.norm();
        double dq_dm = 0.0, dq_ds = 0.0;
        if (devn > 0.0) {
            const Vec3 ddev_dm = dtau_dm - Vec3::Constant(dtau_dm.sum() / 3.0);
            const Vec3 ddev_ds = dtau_ds - Vec3::Constant(dtau_ds.sum() / 3.0);
            dq_dm = std::sqrt(1.5) * dev_tau.dot(ddev_dm) / devn;
            dq_ds = std::sqrt(1.5) * dev_tau.dot(ddev_ds) / devn;
        }
        double det = dp_dm * dq_ds - dp_ds * dq_dm;
        if (dn == 0.0 || std::abs(det) < 1e-300) {
            // deviator pinned at zero: 1-D update on the volumetric part
            m -= fp / (dp_dm != 0.0 ? dp_dm : -mat.kappa);
            continue;
        }
        m -= (fp * dq_ds - fq * dp_ds) / det;
        s -= (fq * dp_dm - fp * dq_dm) / det;
        if (s < 0.0) s = 0.0;
    }
    return Vec3::Constant(m / 3.0) + s * dhat;
}

inline Vec3 reconstruct_sigma(const Svd3& svd, const YieldPoint& projected,
                              const NaccMaterial& mat) {
    if (!(svd.sigma[2] > 0.0))
        throw SimError(ErrorCode::DegenerateGradient,
                       "degenerate SVD in def-grad reconstruction");
    const Vec3 eps_trial = svd.sigma.array().log();
    const Vec3 eps = solve_hencky_for_pq(eps_trial, projected, mat);
    return eps.array().exp();
}

inline Mat3 reconstruct_from_svd(const Svd3& svd, const YieldPoint& projected,
                                 const NaccMaterial& mat) {
    const Vec3 sigma = reconstruct_sigma(svd, projected, mat);
    return svd.u * sigma.asDiagonal() * svd.v.transpose();
}

} // namespace detail

// Rewrites the trial deformation gradient so its (p, q) matches the
// projected point: the trace part of the Hencky strain is rescaled to hit
// p, the deviatoric part to hit q with its direction preserved (a zero
// trial deviator stays zero). Rotation factors of the SVD are kept.
inline Mat3 reconstruct_def_grad(const Mat3& trial_def_grad, const YieldPoint& projected,
                                 const NaccMaterial& mat) {
    detail::require_invertible(trial_def_grad);
    return detail::reconstruct_from_svd(svd3(trial_def_grad), projected, mat);
}

// Elastic volume ratio implied by the volumetric stress measure.
inline double elastic_volume_ratio(double p, const NaccMaterial& mat) {
    const double radicand = 1.0 - 2.0 * p / mat.kappa;
    if (!(radicand > 0.0))
        throw SimError(ErrorCode::PressureOverflow,
                       "J_E radicand <= 0 (p = " + std::to_string(p) + ")");
    return std::sqrt(radicand);
}

// Hardening update alpha' = alpha + ln(J_E(p_trial) / J_E(p_new)).
inline double update_alpha(double alpha, double p_trial, double p_new,
                           const NaccMaterial& mat) {
    return alpha + std::log(elastic_volume_ratio(p_trial, mat) /
                            elastic_volume_ratio(p_new, mat));
}

// Copy of the material pushed to the fluid limit p0 -> 0: alpha0 and beta
// near zero leave an effectively empty elastic region.
inline NaccMaterial fluid_params(const NaccMaterial& mat) {
    NaccMaterial fluid = mat;
    fluid.alpha0 = -1e-6;
    fluid.beta = 1e-3;
    return fluid;
}

struct PlasticUpdate {
    YieldPoint trial;
    double p0 = 0.0;
    ReturnMapResult rm;
    Mat3 kirchhoff = Mat3::Zero(); // stress of rm.new_def_grad
};

// Full per-particle constitutive update for one trial deformation gradient:
// pq_of -> p0_of -> return_map -> reconstruct_def_grad -> update_alpha.
// A single SVD is shared across the stages, and the Kirchhoff stress of the
// returned gradient comes out for free.
inline PlasticUpdate plastic_step(const Mat3& f_trial, double alpha,
                                  const NaccMaterial& mat, double k = 2.0) {
    detail::require_invertible(f_trial);
    const Svd3 svd = svd3(f_trial);

    PlasticUpdate upd;
    const Vec3 tau_trial = detail::principal_stress(svd.sigma, mat);
    upd.trial = detail::pq_of_principal(tau_trial);
    upd.p0 = p0_of(alpha, mat);
    upd.rm = return_map(upd.trial, upd.p0, mat, k);
    if (upd.rm.case_tag == ReturnCase::Elastic) {
        upd.rm.new_def_grad = f_trial;
        upd.rm.delta_alpha = 0.0;
        upd.kirchhoff = svd.u * tau_trial.asDiagonal() * svd.u.transpose();
        return upd;
    }
    const Vec3 sigma_new = detail::reconstruct_sigma(svd, upd.rm.projected, mat);
    upd.rm.new_def_grad = svd.u * sigma_new.asDiagonal() * svd.v.transpose();
    upd.rm.delta_alpha =
        update_alpha(alpha, upd.trial.p, upd.rm.projected.p, mat) - alpha;
    upd.kirchhoff = svd.u * detail::principal_stress(sigma_new, mat).asDiagonal() *
                    svd.u.transpose();
    return upd;
}

} // namespace splatsim
