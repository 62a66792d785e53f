#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "splatsim/splat_model.hpp"

namespace splatsim {

// Reference material rows used by the demos and tests. Each entry also
// carries the timing the material was tuned for.
struct MaterialPreset {
    NaccMaterial material;
    double dt_frame;     // s
    double grid_spacing; // m
    double dt_step;      // s
};

inline const std::vector<MaterialPreset>& material_presets() {
    static const std::vector<MaterialPreset> presets = {
        {{"watermelon_rind", 2000.0, 0.38, 2.0, -0.04, 2.0, 2.0, 2.36}, 1.0 / 50, 3e-3, 1e-4},
        {{"watermelon_flesh", 1000.0, 0.38, 2.0, -0.04, 0.6, 2.0, 2.36}, 1.0 / 50, 3e-3, 1e-4},
        {{"watermelon_seed", 1e4, 0.38, 2.0, -0.04, 5.0, 2.0, 2.36}, 1.0 / 50, 3e-3, 1e-4},
        {{"jelly", 2000.0, 0.45, 2.0, -0.5, 1.0, 2.0, 2.36}, 1.0 / 500, 3e-3, 1e-5},
        {{"pumpkin", 4000.0, 0.40, 2.0, -0.04, 1.0, 2.0, 2.36}, 1.0 / 50, 3e-3, 1e-4},
        {{"kiwi", 2000.0, 0.42, 2.0, -0.04, 1.0, 2.0, 2.36}, 1.0 / 50, 1e-2, 1e-4},
        {{"pineapple", 5000.0, 0.39, 2.0, -0.04, 1.0, 2.0, 2.36}, 1.0 / 50, 1e-2, 1e-4},
        {{"dragonfruit", 2000.0, 0.42, 2.0, -0.04, 1.0, 2.0, 2.36}, 1.0 / 50, 1e-2, 1e-4},
        {{"tosta", 2000.0, 0.38, 2.0, -0.1, 1.0, 2.0, 2.36}, 1.0 / 50, 5e-3, 1e-4},
        {{"sandcastle", 50.0, 0.05, 2.0, -0.04, 0.01, 1.0, 2.36}, 1.0 / 50, 1e-2, 1e-4},
    };
    return presets;
}

inline std::optional<MaterialPreset> find_preset(std::string_view name) {
    for (const auto& p : material_presets()) {
        if (p.material.name == name) return p;
    }
    return std::nullopt;
}

} // namespace splatsim
