#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bdsde {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;   // measured values vs thresholds (deterministic text)
    double seconds = 0;   // wall clock, reported in the manifest only
};

/// Criteria 1-10: deterministic given (seed, workers); artifacts land in
/// `artifact_dir`.
std::vector<CriterionResult> run_acceptance_criteria(const std::filesystem::path& artifact_dir,
                                                     std::uint64_t seed, int workers);

/// Criterion 11: emits the full artifact set twice with the same seed and
/// compares every CSV byte for byte.
CriterionResult run_determinism_criterion(const std::filesystem::path& out_dir,
                                          std::uint64_t seed, int workers);

/// All eleven criteria; artifacts under out_dir/run1 and out_dir/run2.
std::vector<CriterionResult> run_full_acceptance(const std::filesystem::path& out_dir,
                                                 std::uint64_t seed, int workers);

}  // namespace bdsde
