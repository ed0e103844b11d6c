#pragma once

#include "ambiplan/belief.hpp"
#include "ambiplan/planner.hpp"
#include "ambiplan/pruning.hpp"

#include <json.hpp>

#include <iosfwd>

namespace ambiplan {

using Json = nlohmann::json;

/// Belief snapshot: {"history_len", "components": [{"label": [root, a1, ...],
/// "weight", "mean": [...], "covariance": {"rows", "cols", "data"}}]}.
/// Matrices are stored row-major.
Json to_json(const MixtureBelief& b);
MixtureBelief belief_from_json(const Json& j);

Json to_json(const PruneReceipt& r);

/// One trace line: step, action, reward, n_hypotheses, delta_step,
/// apriori_bound (null when unknown), hindsight_bound, plan_wallclock_ms, the
/// execution receipt and, when recorded, the belief snapshot.
Json to_json(const StepRecord& s);

/// Writes one JSON object per line.
void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace);

}  // namespace ambiplan
