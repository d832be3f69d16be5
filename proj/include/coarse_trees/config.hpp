#pragma once

#include <cstdint>
#include <cstdlib>

namespace coarse_trees {

/// Sentinel for "no vertex": absent parents, unmaterialized children,
/// unmapped targets.
inline constexpr std::uint32_t kNoVertex = 0xFFFFFFFFu;

/// Hard cap on materialized tree vertices, overridable through the
/// COARSE_TREES_MAX_VERTICES environment variable. Read once per process.
inline std::uint64_t max_vertex_cap() {
    static const std::uint64_t cap = [] {
        const char* env = std::getenv("COARSE_TREES_MAX_VERTICES");
        if (env != nullptr) {
            char* end = nullptr;
            const unsigned long long parsed = std::strtoull(env, &end, 10);
            if (end != env && parsed > 0) return static_cast<std::uint64_t>(parsed);
        }
        return std::uint64_t{60'000'000};
    }();
    return cap;
}

}  // namespace coarse_trees
