#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ambiplan {

/// Outcome of one family of deterministic inequality checks.
struct FamilyResult {
    std::string name;
    std::size_t passed = 0;
    std::size_t total = 0;
    /// Smallest (bound + slack - gap) seen; negative means a violation.
    double worst_margin = 0.0;
    /// Instances whose bound is positive, and the largest gap / bound among them.
    std::size_t nontrivial = 0;
    double max_ratio = 0.0;
    std::string first_failure;

    [[nodiscard]] bool ok() const { return total > 0 && passed == total; }
};

inline constexpr double kInequalitySlack = 1e-9;

/// Pruned and full SN estimates are bit-identical with a zero budget, and the
/// estimated bound is exactly 0.
FamilyResult verify_zero_budget(std::size_t instances, std::uint64_t seed = 0);

/// |full SN - pruned SN| <= bound_estimate on random tiny instances; one family
/// per strategy (adaptive, k_best, threshold).
std::vector<FamilyResult> verify_estimator_bound(std::size_t instances, std::uint64_t seed = 0);

/// |exact_value - exact_value_pruned| <= exact hindsight bound, one family per strategy.
std::vector<FamilyResult> verify_exact_bound(std::size_t instances, std::uint64_t seed = 0);

/// Exact regret of the pruned-optimal policy <= 2 * exact hindsight bound, one family per strategy.
std::vector<FamilyResult> verify_regret(std::size_t instances, std::uint64_t seed = 0);

/// Every family above; prints one line per family.
std::vector<FamilyResult> verify_all(std::size_t instances, std::ostream& out, std::uint64_t seed = 0);

}  // namespace ambiplan
