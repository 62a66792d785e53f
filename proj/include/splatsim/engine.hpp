#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "splatsim/constitutive.hpp"
#include "splatsim/exec.hpp"
#include "splatsim/grid.hpp"
#include "splatsim/splat_model.hpp"

namespace splatsim {

// Explicit MPM substep: clear -> P2G -> grid forces -> grid update (with
// boundary enforcement) -> G2P with the constitutive return map. Quadratic
// B-spline transfers over a 3x3x3 stencil.
//
// Concurrency contract: deterministic mode accumulates in particle-index
// order on one thread. Parallel mode bins particles into 4^3-cell blocks and
// scatters them in eight checkerboard phases whose blocks touch disjoint
// node sets, so results are reproducible for any thread count; the only
// divergence from deterministic mode is floating-point summation order.

struct BoundaryCondition {
    enum class Shape { Plane, Box };
    enum class Mode { Sticky, Slip };

    Shape shape = Shape::Plane;
    Mode mode = Mode::Sticky;
    Vec3 point = Vec3::Zero();   // plane support point
    Vec3 normal = Vec3::UnitY(); // plane unit normal, pointing away from the obstacle
    Vec3 box_min = Vec3::Zero();
    Vec3 box_max = Vec3::Zero();
    Vec3 velocity = Vec3::Zero(); // obstacle velocity (moving obstacles)

    bool contains(const Vec3& x) const {
        if (shape == Shape::Plane) return (x - point).dot(normal) <= 0.0;
        return (x.array() >= box_min.array()).all() && (x.array() <= box_max.array()).all();
    }

    // Outward normal at an interior point (nearest face for boxes).
    Vec3 outward_normal(const Vec3& x) const {
        if (shape == Shape::Plane) return normal;
        int best_axis = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        double best_sign = 1.0;
        for (int a = 0; a < 3; ++a) {
            const double d_lo = x[a] - box_min[a];
            const double d_hi = box_max[a] - x[a];
            if (d_lo < best_dist) { best_dist = d_lo; best_axis = a; best_sign = -1.0; }
            if (d_hi < best_dist) { best_dist = d_hi; best_axis = a; best_sign = 1.0; }
        }
        Vec3 n = Vec3::Zero();
        n[best_axis] = best_sign;
        return n;
    }

    void apply(const Vec3& x, Vec3& v) const {
        if (!contains(x)) return;
        if (mode == Mode::Sticky) {
            v = velocity;
            return;
        }
        const Vec3 n = outward_normal(x);
        const Vec3 rel = v - velocity;
        const double vn = rel.dot(n);
        if (vn < 0.0) v = velocity + (rel - vn * n);
    }
};

struct StepStats {
    std::uint64_t substep = 0;
    double time = 0.0;
    double total_mass = 0.0;     // grid total after P2G
    Vec3 total_momentum = Vec3::Zero();
    double max_speed = 0.0;      // particle |v| after G2P
    std::int64_t plastic_count = 0;
    double cfl = 0.0;            // max |v| dt / dx
    std::int64_t clamped_count = 0; // particles pushed back into the margin
};

// Per-axis quadratic B-spline weights/derivatives for one particle.
struct BsplineStencil {
    Vec3i base;                   // lowest node of the 3x3x3 stencil
    std::array<Vec3, 3> w;        // w[axis][offset]
    std::array<Vec3, 3> dw;       // d/dx of the 1-D weight, already / spacing
};

namespace detail {

inline bool inside_margin(const Vec3& u, const Vec3i& dims) {
    for (int a = 0; a < 3; ++a) {
        if (!(u[a] >= 1.5 && u[a] <= dims[a] - 2.5)) return false;
    }
    return true;
}

inline BsplineStencil make_stencil(const Vec3& pos, const MpmGrid& grid) {
    const Vec3 u = (pos - grid.origin) / grid.spacing;
    if (!inside_margin(u, grid.dims))
        throw SimError(ErrorCode::OutOfDomain, "particle outside grid interior margin");
    BsplineStencil st;
    const double inv_dx = 1.0 / grid.spacing;
    for (int a = 0; a < 3; ++a) {
        const int b = static_cast<int>(std::floor(u[a] - 0.5));
        st.base[a] = b;
        const double d = u[a] - b - 1.0; // in [-0.5, 0.5)
        st.w[a] = Vec3(0.5 * (0.5 - d) * (0.5 - d), 0.75 - d * d,
                       0.5 * (0.5 + d) * (0.5 + d));
        st.dw[a] = Vec3(-(0.5 - d) * inv_dx, -2.0 * d * inv_dx, (0.5 + d) * inv_dx);
    }
    return st;
}

} // namespace detail

struct WeightedNode {
    Vec3i node;
    double weight;
    Vec3 grad;
};

// Quadratic B-spline interpolation stencil of one position: 27 nodes with
// weights (partition of unity) and weight gradients (sum to zero).
inline std::array<WeightedNode, 27> bspline_weights(const Vec3& pos, const MpmGrid& grid) {
    const BsplineStencil st = detail::make_stencil(pos, grid);
    std::array<WeightedNode, 27> out;
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                WeightedNode& wn = out[n++];
                wn.node = st.base + Vec3i(i, j, k);
                wn.weight = st.w[0][i] * st.w[1][j] * st.w[2][k];
                wn.grad = Vec3(st.dw[0][i] * st.w[1][j] * st.w[2][k],
                               st.w[0][i] * st.dw[1][j] * st.w[2][k],
                               st.w[0][i] * st.w[1][j] * st.dw[2][k]);
            }
        }
    }
    return out;
}

namespace detail {

// Checkerboard block binning for race-free parallel scatter. Blocks span
// 4^3 cells; two blocks of the same parity color are at least 4 base cells
// apart, so their 3-wide stencils never share a node.
class ScatterPlan {
  public:
    struct BlockRange {
        std::uint32_t begin;
        std::uint32_t end;
    };

    void build(const ParticleSet& particles, const MpmGrid& grid) {
        const Vec3i nb((grid.dims.x() + 3) / 4, (grid.dims.y() + 3) / 4,
                       (grid.dims.z() + 3) / 4);
        const std::size_t nblocks =
            static_cast<std::size_t>(nb.x()) * nb.y() * nb.z();
        keys_.resize(particles.size());
        counts_.assign(nblocks + 1, 0);

        const double inv_dx = 1.0 / grid.spacing;
        for (std::size_t i = 0; i < particles.size(); ++i) {
            Vec3i blk;
            for (int a = 0; a < 3; ++a) {
                const double u = (particles[i].position[a] - grid.origin[a]) * inv_dx;
                int b = static_cast<int>(std::floor(u - 0.5));
                b = std::clamp(b, 0, grid.dims[a] - 3);
                blk[a] = b / 4;
            }
            keys_[i] = (static_cast<std::uint32_t>(blk.x()) * nb.y() + blk.y()) * nb.z() +
                       blk.z();
            ++counts_[keys_[i] + 1];
        }
        for (std::size_t b = 0; b < nblocks; ++b) counts_[b + 1] += counts_[b];
        order_.resize(particles.size());
        offsets_ = counts_;
        for (std::size_t i = 0; i < particles.size(); ++i)
            order_[offsets_[keys_[i]]++] = static_cast<std::uint32_t>(i);

        for (auto& ph : phases_) ph.clear();
        for (int bx = 0; bx < nb.x(); ++bx) {
            for (int by = 0; by < nb.y(); ++by) {
                for (int bz = 0; bz < nb.z(); ++bz) {
                    const std::size_t key =
                        (static_cast<std::size_t>(bx) * nb.y() + by) * nb.z() + bz;
                    if (counts_[key] == counts_[key + 1]) continue;
                    const int color = (bx & 1) | ((by & 1) << 1) | ((bz & 1) << 2);
                    phases_[color].push_back(
                        {static_cast<std::uint32_t>(counts_[key]),
                         static_cast<std::uint32_t>(counts_[key + 1])});
                }
            }
        }
    }

    // Runs emit(particle_index) for every particle: deterministic order in
    // serial mode, block phases in parallel mode.
    template <typename Emit>
    void scatter(std::size_t n, const ExecPolicy& exec, Emit&& emit) const {
        const int threads = exec.effective_threads();
        if (threads <= 1) {
            for (std::size_t i = 0; i < n; ++i) emit(i);
            return;
        }
        for (const auto& phase : phases_) {
            parallel_for_each(phase.size(), threads, [&](std::size_t b) {
                const BlockRange r = phase[b];
                for (std::uint32_t it = r.begin; it < r.end; ++it) emit(order_[it]);
            });
        }
    }

  private:
    std::vector<std::uint32_t> keys_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> order_;
    std::array<std::vector<BlockRange>, 8> phases_;
};

} // namespace detail

struct EngineParams {
    Vec3 gravity = Vec3::Zero();
    double flip_ratio = 0.95;
    double return_map_k = 2.0;
    ExecPolicy exec = ExecPolicy::serial();
};

class MpmEngine {
  public:
    MpmEngine(MaterialTable materials, EngineParams params)
        : materials_(std::move(materials)), params_(params) {}

    const MaterialTable& materials() const { return materials_; }
    EngineParams& params() { return params_; }
    const EngineParams& params() const { return params_; }

    // Nodal mass and momentum accumulation; velocity = momentum / mass where
    // mass > 0. Grid must be cleared.
    void p2g(const ParticleSet& particles, MpmGrid& grid) {
        if (params_.exec.effective_threads() > 1) plan_.build(particles, grid);
        plan_size_ = particles.size();
        plan_.scatter(particles.size(), params_.exec, [&](std::size_t i) {
            const GaussianParticle& p = particles[i];
            const BsplineStencil st = detail::make_stencil(p.position, grid);
            const Vec3 mv = p.mass * p.velocity;
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const double wab = st.w[0][a] * st.w[1][b];
                    std::size_t idx = grid.index(st.base.x() + a, st.base.y() + b,
                                                 st.base.z());
                    for (int c = 0; c < 3; ++c, ++idx) {
                        const double w = wab * st.w[2][c];
                        grid.mass[idx] += w * p.mass;
                        grid.momentum[idx] += w * mv;
                    }
                }
            }
        });
        parallel_for_each(grid.node_count(), params_.exec.effective_threads(),
                          [&](std::size_t i) {
                              grid.velocity[i] = grid.mass[i] > 0.0
                                                     ? Vec3(grid.momentum[i] / grid.mass[i])
                                                     : Vec3::Zero();
                          });
    }

    // Internal stress forces f_i -= V_p^0 tau_p grad(N_ip) plus gravity
    // m_i g. Requires p2g on the same configuration.
    void grid_forces(const ParticleSet& particles, MpmGrid& grid) {
        const bool use_cache = stress_cache_valid_ && stress_cache_.size() == particles.size();
        // reuses the plan built by p2g (grid_forces runs on the same positions)
        if (params_.exec.effective_threads() > 1 && plan_size_ != particles.size())
            plan_.build(particles, grid);
        plan_.scatter(particles.size(), params_.exec, [&](std::size_t i) {
            const GaussianParticle& p = particles[i];
            Mat3 tau;
            if (use_cache) {
                tau = stress_cache_[i];
            } else {
                try {
                    tau = kirchhoff_stress(p.def_grad, materials_.at(p.material_id));
                } catch (const SimError& e) {
                    throw SimError(e.code(), std::string(e.what()) + " (particle " +
                                                 std::to_string(i) + ")",
                                   static_cast<std::int64_t>(i));
                }
            }
            const Mat3 vtau = p.initial_volume * tau;
            const BsplineStencil st = detail::make_stencil(p.position, grid);
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    std::size_t idx = grid.index(st.base.x() + a, st.base.y() + b,
                                                 st.base.z());
                    for (int c = 0; c < 3; ++c, ++idx) {
                        const Vec3 grad(st.dw[0][a] * st.w[1][b] * st.w[2][c],
                                        st.w[0][a] * st.dw[1][b] * st.w[2][c],
                                        st.w[0][a] * st.w[1][b] * st.dw[2][c]);
                        grid.force[idx] -= vtau * grad;
                    }
                }
            }
        });
        parallel_for_each(grid.node_count(), params_.exec.effective_threads(),
                          [&](std::size_t i) {
                              if (grid.mass[i] > 0.0)
                                  grid.force[i] += grid.mass[i] * params_.gravity;
                          });
    }

    // Explicit Euler nodal velocity update followed by boundary enforcement.
    void grid_update(MpmGrid& grid, double dt,
                     const std::vector<BoundaryCondition>& boundaries) const {
        parallel_for_each(grid.node_count(), params_.exec.effective_threads(),
                          [&](std::size_t i) {
                              if (grid.mass[i] <= 0.0) return;
                              grid.velocity[i] += dt * grid.force[i] / grid.mass[i];
                              if (boundaries.empty()) return;
                              const Vec3 x = grid.node_position(i);
                              for (const BoundaryCondition& bc : boundaries)
                                  bc.apply(x, grid.velocity[i]);
                          });
    }

    struct G2pStats {
        double max_speed = 0.0;
        std::int64_t plastic_count = 0;
        std::int64_t clamped_count = 0;
    };

    // PIC/FLIP velocity gather, trial F update, constitutive return map,
    // advection, and margin clamping. grid_v_old are the nodal velocities
    // right after p2g (the FLIP reference).
    G2pStats g2p(const MpmGrid& grid, const std::vector<Vec3>& grid_v_old,
                 ParticleSet& particles, double dt) {
        const int threads = params_.exec.effective_threads();
        const std::size_t n = particles.size();
        const std::size_t nchunks =
            threads <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1));
        const std::size_t chunk_size = nchunks == 0 ? 1 : (n + nchunks - 1) / nchunks;
        std::vector<G2pStats> partial(nchunks);
        stress_cache_.resize(n);

        const double flip = params_.flip_ratio;
        const Vec3 margin_lo = grid.origin + 1.5 * grid.spacing * Vec3::Ones();
        const Vec3 margin_hi =
            grid.origin + grid.spacing * (grid.dims.cast<double>() - 2.5 * Vec3::Ones());

        parallel_for_each(nchunks, threads, [&](std::size_t ci) {
            G2pStats& st_out = partial[ci];
            const std::size_t begin = ci * chunk_size;
            const std::size_t end = std::min(n, begin + chunk_size);
            for (std::size_t i = begin; i < end; ++i) {
                GaussianParticle& p = particles[i];
                const BsplineStencil st = detail::make_stencil(p.position, grid);
                Vec3 v_pic = Vec3::Zero();
                Vec3 v_delta = Vec3::Zero();
                Mat3 grad_v = Mat3::Zero();
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        const double wab = st.w[0][a] * st.w[1][b];
                        std::size_t idx = grid.index(st.base.x() + a, st.base.y() + b,
                                                     st.base.z());
                        for (int c = 0; c < 3; ++c, ++idx) {
                            const double w = wab * st.w[2][c];
                            const Vec3& vi = grid.velocity[idx];
                            v_pic += w * vi;
                            v_delta += w * (vi - grid_v_old[idx]);
                            const Vec3 grad(st.dw[0][a] * st.w[1][b] * st.w[2][c],
                                            st.w[0][a] * st.dw[1][b] * st.w[2][c],
                                            st.w[0][a] * st.w[1][b] * st.dw[2][c]);
                            grad_v += vi * grad.transpose();
                        }
                    }
                }

                p.velocity = flip * (p.velocity + v_delta) + (1.0 - flip) * v_pic;

                const Mat3 f_trial = (Mat3::Identity() + dt * grad_v) * p.def_grad;
                try {
                    const PlasticUpdate upd = plastic_step(
                        f_trial, p.alpha, materials_.at(p.material_id), params_.return_map_k);
                    p.def_grad = upd.rm.new_def_grad;
                    p.alpha += upd.rm.delta_alpha;
                    stress_cache_[i] = upd.kirchhoff;
                    if (upd.rm.case_tag != ReturnCase::Elastic) ++st_out.plastic_count;
                } catch (const SimError& e) {
                    throw SimError(e.code(), std::string(e.what()) + " (particle " +
                                                 std::to_string(i) + ")",
                                   static_cast<std::int64_t>(i));
                }

                p.position += dt * p.velocity;
                bool clamped = false;
                for (int a = 0; a < 3; ++a) {
                    if (p.position[a] < margin_lo[a]) { p.position[a] = margin_lo[a]; clamped = true; }
                    if (p.position[a] > margin_hi[a]) { p.position[a] = margin_hi[a]; clamped = true; }
                }
                if (clamped) {
                    p.velocity = Vec3::Zero();
                    ++st_out.clamped_count;
                }
                st_out.max_speed = std::max(st_out.max_speed, p.velocity.norm());
            }
        });

        G2pStats total;
        for (const G2pStats& s : partial) {
            total.max_speed = std::max(total.max_speed, s.max_speed);
            total.plastic_count += s.plastic_count;
            total.clamped_count += s.clamped_count;
        }
        return total;
    }

    // One full substep. Boundary conditions are given at their current
    // position/velocity (the caller resolves scripted obstacles).
    StepStats step(ParticleSet& particles, MpmGrid& grid, double dt,
                   const std::vector<BoundaryCondition>& boundaries,
                   std::uint64_t substep_index = 0, double time = 0.0) {
        grid.clear();
        p2g(particles, grid);

        StepStats stats;
        stats.substep = substep_index;
        stats.time = time;
        stats.total_mass = grid.total_mass();
        stats.total_momentum = grid.total_momentum();

        v_old_.assign(grid.velocity.begin(), grid.velocity.end());
        grid_forces(particles, grid);
        grid_update(grid, dt, boundaries);
        const G2pStats g = g2p(grid, v_old_, particles, dt);
        stress_cache_valid_ = true;

        stats.max_speed = g.max_speed;
        stats.plastic_count = g.plastic_count;
        stats.clamped_count = g.clamped_count;
        stats.cfl = grid.spacing > 0.0 ? g.max_speed * dt / grid.spacing : 0.0;
        return stats;
    }

    // Must be called whenever particle deformation gradients are modified
    // outside of step().
    void invalidate_stress_cache() { stress_cache_valid_ = false; }

  private:
    MaterialTable materials_;
    EngineParams params_;
    detail::ScatterPlan plan_;
    std::size_t plan_size_ = static_cast<std::size_t>(-1);
    std::vector<Vec3> v_old_;
    std::vector<Mat3> stress_cache_;
    bool stress_cache_valid_ = false;
};

} // namespace splatsim
