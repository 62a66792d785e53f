#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "splatsim/error.hpp"
#include "splatsim/math.hpp"

namespace splatsim {

enum class ElasticModel { StvkHencky, NeoHookean };

// Elastic moduli plus the NACC yield/hardening parameters for one material.
// Derived Lame/bulk moduli are cached at construction.
struct NaccMaterial {
    std::string name;
    double youngs_modulus = 0.0; // E, Pa
    double poisson_ratio = 0.0;  // nu
    double density = 0.0;        // rho, kg/m^3
    double beta = 0.0;           // tensile-cap ratio
    double alpha0 = 0.0;         // initial hardening state
    double xi = 0.0;             // hardening rate
    double slope_m = 0.0;        // M, critical-state slope
    ElasticModel elastic_model = ElasticModel::StvkHencky;

    double mu = 0.0;     // shear modulus
    double lambda = 0.0; // first Lame parameter
    double kappa = 0.0;  // bulk modulus E / (3(1-2nu))

    NaccMaterial() = default;
    NaccMaterial(std::string name_, double e, double nu, double rho, double alpha0_,
                 double beta_, double xi_, double m,
                 ElasticModel model = ElasticModel::StvkHencky)
        : name(std::move(name_)), youngs_modulus(e), poisson_ratio(nu), density(rho),
          beta(beta_), alpha0(alpha0_), xi(xi_), slope_m(m), elastic_model(model) {
        update_moduli();
    }

    void update_moduli() {
        mu = youngs_modulus / (2.0 * (1.0 + poisson_ratio));
        lambda = youngs_modulus * poisson_ratio /
                 ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
        kappa = youngs_modulus / (3.0 * (1.0 - 2.0 * poisson_ratio));
    }
};

using MaterialTable = std::vector<NaccMaterial>;

// Volumetric / shear stress measures; the yield surface lives in this plane.
struct YieldPoint {
    double p = 0.0; // Pa, positive in compression
    double q = 0.0; // Pa, >= 0
};

// Spherical-harmonic coefficients, coefficient-major: coeffs[j] is the rgb
// triplet of basis function j. Sizes 1, 4, 9, 16 for bands 0..3.
using ShCoeffs = std::vector<std::array<double, 3>>;

inline int sh_band_count(const ShCoeffs& sh) {
    switch (sh.size()) {
        case 1: return 0;
        case 4: return 1;
        case 9: return 2;
        case 16: return 3;
        default: return -1;
    }
}

inline constexpr double kSh0 = 0.28209479177387814; // 1 / (2 sqrt(pi))

// One Gaussian splat carrying both its physical MPM state and its
// appearance attributes.
struct GaussianParticle {
    double mass = 0.0;           // kg
    double initial_volume = 0.0; // m^3
    Vec3 ref_position = Vec3::Zero();
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Mat3 def_grad = Mat3::Identity();   // elastic deformation gradient
    Mat3 static_cov = Mat3::Identity(); // A_p, SPD
    Mat3 dynamic_cov = Mat3::Identity(); // a_p = F A F^T when published
    double opacity = 1.0;
    ShCoeffs sh{{ {0.0, 0.0, 0.0} }};
    double alpha = 0.0; // damage/hardening variable
    int material_id = 0;
};

using ParticleSet = std::vector<GaussianParticle>;

struct Violation {
    std::int64_t particle = -1; // -1: table-level problem
    std::string message;
};

using ValidationReport = std::vector<Violation>;

namespace detail {
inline bool spd3(const Mat3& m) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
        return false;
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(symmetrize(m));
    return es.eigenvalues()[0] > 0.0;
}
} // namespace detail

// Report-only invariant check over a particle set and its material table.
// Never mutates; an empty report means valid.
inline ValidationReport validate(const ParticleSet& particles, const MaterialTable& materials) {
    ValidationReport report;
    auto flag = [&report](std::int64_t i, std::string msg) {
        report.push_back({i, std::move(msg)});
    };

    for (std::size_t mi = 0; mi < materials.size(); ++mi) {
        const NaccMaterial& m = materials[mi];
        const std::string where = "material " + std::to_string(mi) + " (" + m.name + "): ";
        if (!(m.youngs_modulus > 0.0)) flag(-1, where + "youngs_modulus must be > 0");
        if (!(m.poisson_ratio > 0.0 && m.poisson_ratio < 0.5))
            flag(-1, where + "poisson_ratio out of (0, 0.5)");
        if (!(m.density > 0.0)) flag(-1, where + "density must be > 0");
        if (!(m.beta >= 0.0)) flag(-1, where + "beta must be >= 0");
        if (!(m.xi > 0.0)) flag(-1, where + "xi must be > 0");
        if (!(m.slope_m > 0.0)) flag(-1, where + "slope_m must be > 0");
        if (!std::isfinite(m.mu) || !std::isfinite(m.lambda) || !std::isfinite(m.kappa) ||
            !(m.mu > 0.0) || !(m.kappa > 0.0))
            flag(-1, where + "derived moduli must be finite and positive");
    }

    for (std::size_t i = 0; i < particles.size(); ++i) {
        const GaussianParticle& p = particles[i];
        const auto idx = static_cast<std::int64_t>(i);
        if (!(p.mass > 0.0)) flag(idx, "mass must be > 0");
        if (!(p.initial_volume > 0.0)) flag(idx, "initial_volume must be > 0");
        if (!(p.opacity >= 0.0 && p.opacity <= 1.0)) flag(idx, "opacity out of [0,1]");
        if (!(p.def_grad.determinant() > 0.0)) flag(idx, "degenerate deformation gradient");
        if (!detail::spd3(p.static_cov)) flag(idx, "static covariance not SPD");
        if (sh_band_count(p.sh) < 0) flag(idx, "sh coefficient count not a band boundary");
        if (p.material_id < 0 || static_cast<std::size_t>(p.material_id) >= materials.size())
            flag(idx, "material_id " + std::to_string(p.material_id) + " not in table");
        if (!p.position.allFinite() || !p.velocity.allFinite() || !p.def_grad.allFinite())
            flag(idx, "non-finite state");
    }
    return report;
}

} // namespace splatsim
