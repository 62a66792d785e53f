#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "splatsim/error.hpp"
#include "splatsim/gaussian_evolution.hpp"
#include "splatsim/math.hpp"
#include "splatsim/spatial_hash.hpp"
#include "splatsim/splat_model.hpp"
#include "splatsim/volume_fill.hpp"

namespace splatsim {

// PCA surface normals and Blinn-Phong point shading under point lights.

struct Light {
    Vec3 position = Vec3::Zero();
    Vec3 color = Vec3::Ones(); // component-wise >= 0
};

struct ShadingParams {
    std::vector<Light> lights;
    Vec3 ambient = Vec3::Zero();
    double shininess = 32.0;
    int k_neighbors = 16;
    enum class Visibility { None, Density } visibility = Visibility::None;
    double occlusion_scale = 10.0; // extinction per (density * meter)
    int occlusion_resolution = 64;
};

// Unit normal per particle: smallest-eigenvalue direction of the k-NN
// covariance, oriented outward from the cloud centroid. Eigenvalue ties are
// broken by lexicographic eigenvector order.
inline std::vector<Vec3> pca_normals(const ParticleSet& particles, int k_neighbors) {
    if (k_neighbors < 4)
        throw SimError(ErrorCode::RangeError, "k_neighbors must be >= 4");
    if (particles.size() < static_cast<std::size_t>(k_neighbors) + 1)
        throw SimError(ErrorCode::InsufficientNeighbors,
                       "need at least k_neighbors+1 particles for PCA normals");

    std::vector<Vec3> pos(particles.size());
    Vec3 centroid = Vec3::Zero();
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t i = 0; i < particles.size(); ++i) {
        pos[i] = particles[i].position;
        centroid += pos[i];
        lo = lo.cwiseMin(pos[i]);
        hi = hi.cwiseMax(pos[i]);
    }
    centroid /= static_cast<double>(particles.size());
    const double extent = std::max((hi - lo).maxCoeff(), 1e-12);
    const double cell = std::max(extent / std::cbrt(static_cast<double>(particles.size())),
                                 1e-9 * extent);
    SpatialHash hash;
    hash.build(pos, cell);

    auto canonical = [](Vec3 v) {
        for (int a = 0; a < 3; ++a) {
            if (v[a] > 0.0) break;
            if (v[a] < 0.0) {
                v = -v;
                break;
            }
        }
        return v;
    };

    std::vector<Vec3> normals(particles.size());
    for (std::size_t i = 0; i < particles.size(); ++i) {
        const auto nbrs = hash.knn(pos[i], k_neighbors, static_cast<std::int64_t>(i));
        Vec3 mean = Vec3::Zero();
        for (auto idx : nbrs) mean += pos[idx];
        mean /= static_cast<double>(nbrs.size());
        Mat3 cov = Mat3::Zero();
        for (auto idx : nbrs) {
            const Vec3 d = pos[idx] - mean;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> es;
        es.computeDirect(cov);
        Vec3 n = es.eigenvectors().col(0);
        const double lam0 = es.eigenvalues()[0], lam1 = es.eigenvalues()[1];
        if (lam1 - lam0 <= 1e-12 * std::max(es.eigenvalues()[2], 1e-300)) {
            const Vec3 a = canonical(es.eigenvectors().col(0));
            const Vec3 b = canonical(es.eigenvectors().col(1));
            n = std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3)
                    ? a
                    : b;
        }
        n.normalize();
        if (n.dot(pos[i] - centroid) < 0.0) n = -n;
        normals[i] = n;
    }
    return normals;
}

// L = c0 * I_a + sum_m T_m (c0 * I_m) (1/r_m^2) (D_m + S_m) with
// D = max(n.l, 0), S = max(n.h, 0)^p, h = (l + v)/|l + v|. Raw (unclamped)
// value; clamping happens at export only.
inline Vec3 blinn_phong(const Vec3& base_color, const Vec3& normal, const Vec3& position,
                        const Vec3& view_dir, const std::vector<Light>& lights,
                        const Vec3& ambient, double shininess,
                        const std::vector<double>& visibility) {
    Vec3 out = base_color.cwiseProduct(ambient);
    for (std::size_t m = 0; m < lights.size(); ++m) {
        const Vec3 to_light = lights[m].position - position;
        const double r2 = to_light.squaredNorm();
        if (r2 <= 0.0)
            throw SimError(ErrorCode::CoincidentLight,
                           "light " + std::to_string(m) + " coincides with the surface point");
        const Vec3 l = to_light / std::sqrt(r2);
        const double diffuse = std::max(normal.dot(l), 0.0);
        const Vec3 hv = l + view_dir;
        const double hn = hv.norm();
        const double specular =
            hn > 0.0 ? std::pow(std::max(normal.dot(hv / hn), 0.0), shininess) : 0.0;
        const double t = m < visibility.size() ? visibility[m] : 1.0;
        out += t / r2 * (diffuse + specular) * base_color.cwiseProduct(lights[m].color);
    }
    return out;
}

// Transmittance along the ray to one light, approximated by marching the
// density field at one-spacing steps: T = exp(-scale * sum d ds).
inline double density_visibility(const Vec3& position, const Vec3& light_pos,
                                 const DensityField& field, double scale) {
    const Vec3 to_light = light_pos - position;
    const double dist = to_light.norm();
    if (dist <= 0.0 || field.spacing <= 0.0) return 1.0;
    const Vec3 dir = to_light / dist;
    double integral = 0.0;
    for (double s = field.spacing; s < dist - 0.5 * field.spacing; s += field.spacing)
        integral += field.sample(position + s * dir) * field.spacing;
    return std::exp(-scale * integral);
}

// Display colors for one frame: base color from band-0 SH, PCA normals, and
// Blinn-Phong under the configured lights. `occlusion` enables the density
// visibility mode when non-null.
inline std::vector<std::array<double, 3>> shade_frame(const ParticleSet& particles,
                                                      const ShadingParams& params,
                                                      const Vec3& view_dir,
                                                      const DensityField* occlusion = nullptr) {
    std::vector<std::array<double, 3>> colors(particles.size());
    const bool lit = !params.lights.empty();
    std::vector<Vec3> normals;
    if (lit) normals = pca_normals(particles, params.k_neighbors);
    const Vec3 v = -view_dir.normalized();

    std::vector<double> t(params.lights.size(), 1.0);
    for (std::size_t i = 0; i < particles.size(); ++i) {
        const auto base = base_color_of(particles[i].sh);
        const Vec3 c0(base[0], base[1], base[2]);
        if (!lit) {
            const Vec3 ambient_only = c0.cwiseProduct(params.ambient);
            colors[i] = {ambient_only[0], ambient_only[1], ambient_only[2]};
            continue;
        }
        if (occlusion != nullptr && params.visibility == ShadingParams::Visibility::Density) {
            for (std::size_t m = 0; m < params.lights.size(); ++m)
                t[m] = density_visibility(particles[i].position, params.lights[m].position,
                                          *occlusion, params.occlusion_scale);
        } else {
            std::fill(t.begin(), t.end(), 1.0);
        }
        const Vec3 shaded = blinn_phong(c0, normals[i], particles[i].position, v,
                                        params.lights, params.ambient, params.shininess, t);
        colors[i] = {shaded[0], shaded[1], shaded[2]};
    }
    return colors;
}

} // namespace splatsim
