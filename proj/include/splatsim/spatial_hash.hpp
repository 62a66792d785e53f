#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "splatsim/math.hpp"

namespace splatsim {

// Uniform-grid point index for deterministic k-NN / radius queries. Ties in
// distance are broken by point index.
class SpatialHash {
  public:
    SpatialHash() = default;

    void build(const std::vector<Vec3>& points, double cell_size) {
        points_ = &points;
        cell_ = cell_size;
        if (points.empty()) {
            dims_.setZero();
            return;
        }
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (const Vec3& p : points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        origin_ = lo - Vec3::Constant(0.5 * cell_);
        for (int a = 0; a < 3; ++a)
            dims_[a] = std::max(1, static_cast<int>(std::floor((hi[a] - origin_[a]) / cell_)) + 1);

        const std::size_t ncells =
            static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z();
        starts_.assign(ncells + 1, 0);
        for (const Vec3& p : points) ++starts_[cell_index(p) + 1];
        for (std::size_t c = 0; c < ncells; ++c) starts_[c + 1] += starts_[c];
        entries_.resize(points.size());
        std::vector<std::size_t> cursor(starts_.begin(), starts_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i)
            entries_[cursor[cell_index(points[i])]++] = static_cast<std::uint32_t>(i);
    }

    // Indices of the k nearest points to `query`, excluding `exclude`.
    // Ring expansion stops once every ungathered point is provably farther
    // than the current k-th candidate (points beyond Chebyshev ring R are at
    // least R*cell_ away).
    std::vector<std::uint32_t> knn(const Vec3& query, int k,
                                   std::int64_t exclude = -1) const {
        std::vector<std::pair<double, std::uint32_t>> scored;
        if (!points_ || points_->empty() || k <= 0) return {};
        const Vec3i c = cell_of(query);
        const int max_ring = dims_.maxCoeff() + 1;
        for (int ring = 0; ring <= max_ring; ++ring) {
            gather_ring(c, ring, scored, query, exclude);
            if (static_cast<int>(scored.size()) >= k) {
                std::nth_element(scored.begin(), scored.begin() + (k - 1), scored.end());
                const double dk = std::sqrt(scored[k - 1].first);
                if (static_cast<double>(ring) * cell_ >= dk) break;
            }
        }
        std::sort(scored.begin(), scored.end());
        if (static_cast<int>(scored.size()) > k) scored.resize(k);
        std::vector<std::uint32_t> out;
        out.reserve(scored.size());
        for (const auto& [d2, idx] : scored) {
            (void)d2;
            out.push_back(idx);
        }
        return out;
    }

    // Indices within `radius` of the query (inclusive), ascending index order.
    std::vector<std::uint32_t> within(const Vec3& query, double radius) const {
        std::vector<std::uint32_t> out;
        if (!points_ || points_->empty()) return out;
        const int reach = static_cast<int>(std::ceil(radius / cell_)) + 1;
        const Vec3i c = cell_of(query);
        const double r2 = radius * radius;
        for (int i = std::max(0, c.x() - reach); i <= std::min(dims_.x() - 1, c.x() + reach); ++i)
            for (int j = std::max(0, c.y() - reach); j <= std::min(dims_.y() - 1, c.y() + reach); ++j)
                for (int k = std::max(0, c.z() - reach); k <= std::min(dims_.z() - 1, c.z() + reach); ++k) {
                    const std::size_t cell = linear(i, j, k);
                    for (std::size_t e = starts_[cell]; e < starts_[cell + 1]; ++e) {
                        const std::uint32_t idx = entries_[e];
                        if (((*points_)[idx] - query).squaredNorm() <= r2) out.push_back(idx);
                    }
                }
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    Vec3i cell_of(const Vec3& p) const {
        Vec3i c;
        for (int a = 0; a < 3; ++a) {
            c[a] = static_cast<int>(std::floor((p[a] - origin_[a]) / cell_));
            c[a] = std::clamp(c[a], 0, dims_[a] - 1);
        }
        return c;
    }
    std::size_t linear(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dims_.y() + j) * dims_.z() + k;
    }
    std::size_t cell_index(const Vec3& p) const {
        const Vec3i c = cell_of(p);
        return linear(c.x(), c.y(), c.z());
    }

    void gather_ring(const Vec3i& c, int ring,
                     std::vector<std::pair<double, std::uint32_t>>& out,
                     const Vec3& query, std::int64_t exclude) const {
        const int lo[3] = {c.x() - ring, c.y() - ring, c.z() - ring};
        const int hi[3] = {c.x() + ring, c.y() + ring, c.z() + ring};
        for (int i = std::max(0, lo[0]); i <= std::min(dims_.x() - 1, hi[0]); ++i)
            for (int j = std::max(0, lo[1]); j <= std::min(dims_.y() - 1, hi[1]); ++j)
                for (int k = std::max(0, lo[2]); k <= std::min(dims_.z() - 1, hi[2]); ++k) {
                    const bool shell = i == lo[0] || i == hi[0] || j == lo[1] ||
                                       j == hi[1] || k == lo[2] || k == hi[2];
                    if (!shell && ring > 0) continue;
                    const std::size_t cell = linear(i, j, k);
                    for (std::size_t e = starts_[cell]; e < starts_[cell + 1]; ++e) {
                        const std::uint32_t idx = entries_[e];
                        if (static_cast<std::int64_t>(idx) == exclude) continue;
                        out.emplace_back(((*points_)[idx] - query).squaredNorm(), idx);
                    }
                }
    }

    const std::vector<Vec3>* points_ = nullptr;
    double cell_ = 1.0;
    Vec3 origin_ = Vec3::Zero();
    Vec3i dims_ = Vec3i::Zero();
    std::vector<std::size_t> starts_;
    std::vector<std::uint32_t> entries_;
};

} // namespace splatsim
