#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "splatsim/math.hpp"

namespace splatsim {

// Background Eulerian grid of nodal mass / momentum / velocity / force.
// dims counts nodes per axis; node (i,j,k) sits at origin + spacing*(i,j,k).
struct MpmGrid {
    Vec3 origin = Vec3::Zero();
    double spacing = 0.0;
    Vec3i dims = Vec3i::Zero();

    std::vector<double> mass;    // kg
    std::vector<Vec3> momentum;  // kg m/s
    std::vector<Vec3> velocity;  // m/s, defined only where mass > 0
    std::vector<Vec3> force;     // N

    MpmGrid() = default;
    MpmGrid(const Vec3& origin_, double spacing_, const Vec3i& dims_) {
        reset(origin_, spacing_, dims_);
    }

    void reset(const Vec3& origin_, double spacing_, const Vec3i& dims_) {
        origin = origin_;
        spacing = spacing_;
        dims = dims_;
        const std::size_t n = node_count();
        mass.assign(n, 0.0);
        momentum.assign(n, Vec3::Zero());
        velocity.assign(n, Vec3::Zero());
        force.assign(n, Vec3::Zero());
    }

    std::size_t node_count() const {
        return static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
    }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dims.y() + j) * dims.z() + k;
    }

    Vec3 node_position(int i, int j, int k) const {
        return origin + spacing * Vec3(i, j, k);
    }

    Vec3 node_position(std::size_t idx) const {
        const int k = static_cast<int>(idx % dims.z());
        const int j = static_cast<int>((idx / dims.z()) % dims.y());
        const int i = static_cast<int>(idx / (static_cast<std::size_t>(dims.y()) * dims.z()));
        return node_position(i, j, k);
    }

    void clear() {
        std::fill(mass.begin(), mass.end(), 0.0);
        std::fill(momentum.begin(), momentum.end(), Vec3::Zero());
        std::fill(velocity.begin(), velocity.end(), Vec3::Zero());
        std::fill(force.begin(), force.end(), Vec3::Zero());
    }

    double total_mass() const {
        double m = 0.0;
        for (double v : mass) m += v;
        return m;
    }

    Vec3 total_momentum() const {
        Vec3 p = Vec3::Zero();
        for (const Vec3& v : momentum) p += v;
        return p;
    }
};

} // namespace splatsim
