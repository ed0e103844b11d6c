#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ambiplan {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ActionId : std::uint8_t { up, down, left, right };

/// Fixed enumeration order, used for UCB tie-breaking and untried-action order.
inline constexpr std::array<ActionId, 4> kActionOrder{ActionId::up, ActionId::down, ActionId::left,
                                                      ActionId::right};

std::string_view to_string(ActionId id);
std::optional<ActionId> parse_action(std::string_view name);

/// A primitive motion: the agent position moves by `displacement`.
struct Action {
    ActionId id{ActionId::up};
    Vector displacement;
};

/// Relative-position measurement of one (unidentified) source.
struct Observation {
    Vector value;
};

/// Identifies one mixture component: the root component it descends from
/// plus one association id per observation update since the root.
struct HypothesisLabel {
    int root = 0;
    std::vector<int> associations;

    [[nodiscard]] HypothesisLabel extended(int association) const;
    [[nodiscard]] std::size_t length() const { return associations.size(); }

    /// FNV-1a over (root, associations); stable across platforms.
    [[nodiscard]] std::uint64_t hash() const;

    /// Flat integer form [root, a1, a2, ...] used by the JSON snapshots.
    [[nodiscard]] std::vector<int> flat() const;
    static HypothesisLabel from_flat(const std::vector<int>& flat);

    friend auto operator<=>(const HypothesisLabel&, const HypothesisLabel&) = default;
    friend bool operator==(const HypothesisLabel&, const HypothesisLabel&) = default;
};

std::string to_string(const HypothesisLabel& label);

/// splitmix64 finalizer; used to derive independent seeds from (seed, salt).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace ambiplan
