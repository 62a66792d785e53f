#pragma once

#include <cstdio>

namespace splatsim {

// Placeholder during bring-up; the full CLI is assembled once the engine
// and IO layers exist.
inline int cli_main(int, char**) {
    std::fprintf(stderr, "splatsim: not wired up yet\n");
    return 1;
}

} // namespace splatsim
