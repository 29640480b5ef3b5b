// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit status 0 only if all pass.

#include <cstdio>
#include <filesystem>

#include "bdsde/acceptance.hpp"
#include "bdsde/parallel.hpp"

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20240901ULL;
    const auto dir = std::filesystem::temp_directory_path() / "bdsde_acceptance";
    std::filesystem::remove_all(dir);

    const auto results = bdsde::run_full_acceptance(dir, seed, bdsde::hardware_workers());

    int failures = 0;
    for (const auto& r : results) {
        std::printf("%s criterion %2d: %s — %s (%.2fs)\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.detail.c_str(), r.seconds);
        failures += !r.pass;
    }
    std::printf("%zu/%zu acceptance criteria passed\n", results.size() - failures,
                results.size());
    return failures == 0 ? 0 : 1;
}
