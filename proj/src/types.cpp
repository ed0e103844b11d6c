#include "ambiplan/types.hpp"

#include <sstream>

namespace ambiplan {

std::string_view to_string(ActionId id) {
    switch (id) {
        case ActionId::up: return "up";
        case ActionId::down: return "down";
        case ActionId::left: return "left";
        case ActionId::right: return "right";
    }
    return "?";
}

std::optional<ActionId> parse_action(std::string_view name) {
    for (auto id : kActionOrder) {
        if (to_string(id) == name) return id;
    }
    return std::nullopt;
}

HypothesisLabel HypothesisLabel::extended(int association) const {
    HypothesisLabel out;
    out.root = root;
    out.associations.reserve(associations.size() + 1);
    out.associations = associations;
    out.associations.push_back(association);
    return out;
}

std::uint64_t HypothesisLabel::hash() const {
    constexpr std::uint64_t kOffset = 1469598103934665603ULL;
    constexpr std::uint64_t kPrime = 1099511628211ULL;
    std::uint64_t h = kOffset;
    auto feed = [&](int v) {
        auto u = static_cast<std::uint32_t>(v);
        for (int byte = 0; byte < 4; ++byte) {
            h ^= (u >> (8 * byte)) & 0xFFu;
            h *= kPrime;
        }
    };
    feed(root);
    for (int a : associations) feed(a);
    return h;
}

std::vector<int> HypothesisLabel::flat() const {
    std::vector<int> out;
    out.reserve(associations.size() + 1);
    out.push_back(root);
    out.insert(out.end(), associations.begin(), associations.end());
    return out;
}

HypothesisLabel HypothesisLabel::from_flat(const std::vector<int>& flat) {
    HypothesisLabel label;
    if (flat.empty()) return label;
    label.root = flat.front();
    label.associations.assign(flat.begin() + 1, flat.end());
    return label;
}

std::string to_string(const HypothesisLabel& label) {
    std::ostringstream os;
    os << label.root << ':';
    for (std::size_t i = 0; i < label.associations.size(); ++i) {
        if (i) os << ',';
        os << label.associations[i];
    }
    return os.str();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace ambiplan
