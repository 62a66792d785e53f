#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "splatsim/error.hpp"
#include "splatsim/math.hpp"
#include "splatsim/splat_model.hpp"

namespace splatsim {

// Interior population: a voxelized density field over the splat cloud,
// boundary extraction by thresholding, flood-fill classification of the
// enclosed volume, and stratified seeding of interior particles.

enum class CellClass : std::uint8_t { Exterior = 0, Boundary = 1, Interior = 2 };

struct DensityField {
    Vec3 origin = Vec3::Zero(); // corner of the voxelized region
    double spacing = 0.0;
    Vec3i dims = Vec3i::Zero(); // cells per axis
    std::vector<double> density;
    std::vector<CellClass> cells;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dims.y() + j) * dims.z() + k;
    }
    Vec3 cell_center(int i, int j, int k) const {
        return origin + spacing * Vec3(i + 0.5, j + 0.5, k + 0.5);
    }
    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims.x() && j < dims.y() && k < dims.z();
    }
    // Nearest-cell density lookup, zero outside the field.
    double sample(const Vec3& x) const {
        const Vec3 u = (x - origin) / spacing;
        const int i = static_cast<int>(std::floor(u.x()));
        const int j = static_cast<int>(std::floor(u.y()));
        const int k = static_cast<int>(std::floor(u.z()));
        if (!in_bounds(i, j, k)) return 0.0;
        return density[index(i, j, k)];
    }
    std::size_t count(CellClass c) const {
        std::size_t n = 0;
        for (CellClass x : cells)
            if (x == c) ++n;
        return n;
    }
};

enum class CovSource { Static, Dynamic };

// Density field d(x) = sum_p opacity_p exp(-0.5 (x-x_p)^T A_p^{-1} (x-x_p))
// sampled at cell centers. Per-Gaussian support is truncated at
// support_radius_mult Mahalanobis units.
inline DensityField density_field(const ParticleSet& splats, const Vec3& origin,
                                  double extent, int resolution,
                                  double support_radius_mult,
                                  CovSource source = CovSource::Static) {
    DensityField field;
    field.origin = origin;
    field.spacing = extent / resolution;
    field.dims = Vec3i::Constant(resolution);
    field.density.assign(field.cell_count(), 0.0);
    field.cells.assign(field.cell_count(), CellClass::Exterior);

    const double maha_cut = support_radius_mult * support_radius_mult;
    for (std::size_t pi = 0; pi < splats.size(); ++pi) {
        const GaussianParticle& p = splats[pi];
        const Mat3 cov = source == CovSource::Static ? p.static_cov : p.dynamic_cov;
        Eigen::LLT<Mat3> llt(symmetrize(cov));
        if (llt.info() != Eigen::Success)
            throw SimError(ErrorCode::DegenerateCovariance,
                           "splat covariance not SPD (particle " + std::to_string(pi) + ")",
                           static_cast<std::int64_t>(pi));

        // axis-aligned bounds of the support ellipsoid
        Vec3i lo, hi;
        for (int a = 0; a < 3; ++a) {
            const double half = support_radius_mult * std::sqrt(cov(a, a));
            lo[a] = static_cast<int>(std::floor((p.position[a] - half - origin[a]) /
                                                field.spacing - 0.5));
            hi[a] = static_cast<int>(std::ceil((p.position[a] + half - origin[a]) /
                                               field.spacing - 0.5));
            lo[a] = std::max(lo[a], 0);
            hi[a] = std::min(hi[a], field.dims[a] - 1);
        }
        for (int i = lo.x(); i <= hi.x(); ++i) {
            for (int j = lo.y(); j <= hi.y(); ++j) {
                for (int k = lo.z(); k <= hi.z(); ++k) {
                    const Vec3 r = field.cell_center(i, j, k) - p.position;
                    const double maha = r.dot(llt.solve(r));
                    if (maha > maha_cut) continue;
                    field.density[field.index(i, j, k)] += p.opacity * std::exp(-0.5 * maha);
                }
            }
        }
    }
    return field;
}

// Fits a cubic field domain around the splats with a padding margin.
inline void fit_field_domain(const ParticleSet& splats, double pad_fraction,
                             Vec3& origin, double& extent) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : splats) {
        lo = lo.cwiseMin(p.position);
        hi = hi.cwiseMax(p.position);
    }
    if (splats.empty()) {
        lo = Vec3::Zero();
        hi = Vec3::Ones();
    }
    const Vec3 size = hi - lo;
    extent = size.maxCoeff() * (1.0 + 2.0 * pad_fraction);
    if (extent <= 0.0) extent = 1.0;
    const Vec3 center = 0.5 * (lo + hi);
    origin = center - 0.5 * extent * Vec3::Ones();
}

// Threshold + flood fill: cells with d >= tau_d become Boundary, everything
// reachable from the domain hull through non-Boundary cells is Exterior,
// the rest is Interior.
inline void classify(DensityField& field, double tau_d) {
    const std::size_t n = field.cell_count();
    for (std::size_t i = 0; i < n; ++i)
        field.cells[i] = field.density[i] >= tau_d ? CellClass::Boundary : CellClass::Interior;

    std::deque<Vec3i> queue;
    auto push_exterior = [&](int i, int j, int k) {
        const std::size_t idx = field.index(i, j, k);
        if (field.cells[idx] != CellClass::Interior) return;
        field.cells[idx] = CellClass::Exterior;
        queue.push_back(Vec3i(i, j, k));
    };
    for (int i = 0; i < field.dims.x(); ++i)
        for (int j = 0; j < field.dims.y(); ++j)
            for (int k = 0; k < field.dims.z(); ++k)
                if (i == 0 || j == 0 || k == 0 || i == field.dims.x() - 1 ||
                    j == field.dims.y() - 1 || k == field.dims.z() - 1)
                    push_exterior(i, j, k);

    static const int nbr[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                  {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    while (!queue.empty()) {
        const Vec3i c = queue.front();
        queue.pop_front();
        for (const auto& d : nbr) {
            const int i = c.x() + d[0], j = c.y() + d[1], k = c.z() + d[2];
            if (field.in_bounds(i, j, k)) push_exterior(i, j, k);
        }
    }
}

// Interior color assignment for seeded particles.
struct ColorRule {
    enum class Mode { Uniform, RadialBands, Speckle };
    Mode mode = Mode::Uniform;
    std::array<double, 3> color{0.5, 0.5, 0.5};

    struct RadialBand {
        double radius_frac; // band applies for normalized radius <= radius_frac
        std::array<double, 3> color;
    };
    std::vector<RadialBand> bands; // ascending radius_frac; last one should be 1.0

    std::array<double, 3> speck_color{0.0, 0.0, 0.0};
    double speck_fraction = 0.0;
};

inline std::array<double, 3> evaluate_color(const ColorRule& rule, const Vec3& pos,
                                            const Vec3& center, double max_radius,
                                            DetRng& rng) {
    switch (rule.mode) {
        case ColorRule::Mode::Uniform:
            return rule.color;
        case ColorRule::Mode::RadialBands: {
            const double r = max_radius > 0.0 ? (pos - center).norm() / max_radius : 0.0;
            for (const auto& band : rule.bands)
                if (r <= band.radius_frac) return band.color;
            return rule.bands.empty() ? rule.color : rule.bands.back().color;
        }
        case ColorRule::Mode::Speckle:
            return rng.next_double() < rule.speck_fraction ? rule.speck_color : rule.color;
    }
    return rule.color;
}

// Band-0 SH coefficient for an rgb color in [0,1]^3: sh0 = (c - 0.5) / C0.
inline std::array<double, 3> sh0_init(const std::array<double, 3>& color) {
    std::array<double, 3> sh{};
    for (int ch = 0; ch < 3; ++ch) {
        if (!(color[ch] >= 0.0 && color[ch] <= 1.0))
            throw SimError(ErrorCode::RangeError, "color component out of [0,1]");
        sh[ch] = (color[ch] - 0.5) / kSh0;
    }
    return sh;
}

// First-match color banding for material assignment; the default id catches
// everything else.
struct ColorBand {
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{1, 1, 1};
    int material_id = 0;
};

struct MaterialBands {
    std::vector<ColorBand> bands;
    int default_id = 0;

    int classify(const std::array<double, 3>& color) const {
        for (const auto& b : bands) {
            bool match = true;
            for (int ch = 0; ch < 3; ++ch)
                match &= color[ch] >= b.lo[ch] && color[ch] <= b.hi[ch];
            if (match) return b.material_id;
        }
        return default_id;
    }
};

// Sets material ids from the band-0 color of each particle.
inline void assign_materials_by_color(ParticleSet& particles, const MaterialBands& bands) {
    for (auto& p : particles) {
        const std::array<double, 3> c{kSh0 * p.sh[0][0] + 0.5, kSh0 * p.sh[0][1] + 0.5,
                                      kSh0 * p.sh[0][2] + 0.5};
        p.material_id = bands.classify(c);
    }
}

// Seeds particles_per_cell particles into every Interior cell by jittered
// stratification. Each particle carries volume cell_volume / ppc, a
// spherical covariance of matching radius, opacity 1, band-0 SH from the
// color rule, and a material id from the bands. When a material table is
// given, mass and alpha are finalized from it.
inline ParticleSet seed_interior(const DensityField& field, int particles_per_cell,
                                 const ColorRule& color_rule, const MaterialBands& bands,
                                 std::uint64_t seed,
                                 const MaterialTable* materials = nullptr) {
    if (particles_per_cell < 1)
        throw SimError(ErrorCode::RangeError, "particles_per_cell must be >= 1");

    // interior centroid and extent drive the radial color rule
    Vec3 centroid = Vec3::Zero();
    std::size_t n_interior = 0;
    for (int i = 0; i < field.dims.x(); ++i)
        for (int j = 0; j < field.dims.y(); ++j)
            for (int k = 0; k < field.dims.z(); ++k)
                if (field.cells[field.index(i, j, k)] == CellClass::Interior) {
                    centroid += field.cell_center(i, j, k);
                    ++n_interior;
                }
    if (n_interior == 0) return {};
    centroid /= static_cast<double>(n_interior);
    double max_radius = 0.0;
    for (int i = 0; i < field.dims.x(); ++i)
        for (int j = 0; j < field.dims.y(); ++j)
            for (int k = 0; k < field.dims.z(); ++k)
                if (field.cells[field.index(i, j, k)] == CellClass::Interior)
                    max_radius = std::max(max_radius,
                                          (field.cell_center(i, j, k) - centroid).norm());

    const double cell_vol = field.spacing * field.spacing * field.spacing;
    const double volume = cell_vol / particles_per_cell;
    const double radius = std::cbrt(3.0 * volume / (4.0 * M_PI));
    const int sub = std::max(1, static_cast<int>(std::floor(std::cbrt(
                                    static_cast<double>(particles_per_cell)))));
    const int strata = sub * sub * sub;

    ParticleSet out;
    out.reserve(n_interior * particles_per_cell);
    for (int i = 0; i < field.dims.x(); ++i) {
        for (int j = 0; j < field.dims.y(); ++j) {
            for (int k = 0; k < field.dims.z(); ++k) {
                const std::size_t idx = field.index(i, j, k);
                if (field.cells[idx] != CellClass::Interior) continue;
                DetRng rng(mix_seed(seed, idx));
                const Vec3 corner = field.origin +
                                    field.spacing * Vec3(i, j, k);
                for (int s = 0; s < particles_per_cell; ++s) {
                    Vec3 frac;
                    if (s < strata) {
                        const int sx = s / (sub * sub), sy = (s / sub) % sub, sz = s % sub;
                        frac = Vec3((sx + 0.5 + 0.98 * (rng.next_double() - 0.5)) / sub,
                                    (sy + 0.5 + 0.98 * (rng.next_double() - 0.5)) / sub,
                                    (sz + 0.5 + 0.98 * (rng.next_double() - 0.5)) / sub);
                    } else {
                        frac = Vec3(0.01 + 0.98 * rng.next_double(),
                                    0.01 + 0.98 * rng.next_double(),
                                    0.01 + 0.98 * rng.next_double());
                    }
                    GaussianParticle p;
                    p.position = corner + field.spacing * frac;
                    p.ref_position = p.position;
                    p.initial_volume = volume;
                    p.static_cov = radius * radius * Mat3::Identity();
                    p.dynamic_cov = p.static_cov;
                    p.opacity = 1.0;
                    const auto color =
                        evaluate_color(color_rule, p.position, centroid, max_radius, rng);
                    p.sh.assign(1, sh0_init(color));
                    p.material_id = bands.classify(color);
                    if (materials != nullptr) {
                        const NaccMaterial& mat = materials->at(p.material_id);
                        p.mass = mat.density * volume;
                        p.alpha = mat.alpha0;
                    }
                    out.push_back(p);
                }
            }
        }
    }
    return out;
}

} // namespace splatsim
