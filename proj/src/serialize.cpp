#include "ambiplan/serialize.hpp"

#include "ambiplan/errors.hpp"

#include <ostream>

namespace ambiplan {

namespace {

Json matrix_json(const Matrix& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ContractViolation("matrix data length does not match its shape");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    return m;
}

Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

Json to_json(const MixtureBelief& b) {
    Json comps = Json::array();
    for (const auto& c : b.components()) {
        comps.push_back({{"label", c.label.flat()},
                         {"weight", c.weight()},
                         {"log_weight", c.log_weight},
                         {"mean", vector_json(c.belief.mean)},
                         {"covariance", matrix_json(c.belief.covariance)}});
    }
    return Json{{"history_len", b.history_len()}, {"components", std::move(comps)}};
}

MixtureBelief belief_from_json(const Json& j) {
    std::vector<Component> comps;
    for (const auto& c : j.at("components")) {
        Component out;
        out.label = HypothesisLabel::from_flat(c.at("label").get<std::vector<int>>());
        out.log_weight = c.contains("log_weight") ? c.at("log_weight").get<double>()
                                                  : std::log(c.at("weight").get<double>());
        const auto mean = c.at("mean").get<std::vector<double>>();
        out.belief.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        out.belief.covariance = matrix_from_json(c.at("covariance"));
        comps.push_back(std::move(out));
    }
    return MixtureBelief(std::move(comps), j.at("history_len").get<std::size_t>());
}

Json to_json(const PruneReceipt& r) {
    return Json{{"depth", r.depth}, {"delta_step", r.delta_step}, {"pruned_label_count", r.pruned_labels.size()}};
}

Json to_json(const StepRecord& s) {
    Json j{{"step", s.step},
           {"action", std::string(to_string(s.action))},
           {"reward", s.reward},
           {"n_hypotheses", s.n_hypotheses},
           {"delta_step", s.delta_step},
           {"apriori_bound", s.apriori ? Json(*s.apriori) : Json(nullptr)},
           {"hindsight_bound", s.hindsight},
           {"plan_wallclock_ms", s.plan_wallclock_ms},
           {"simulations", s.simulations},
           {"active_target", s.active_target},
           {"true_position", vector_json(s.true_position)},
           {"receipt", {{"depth", 0}, {"delta_step", s.delta_step}, {"pruned_label_count", s.pruned_label_count}}}};
    if (s.snapshot) j["belief"] = to_json(*s.snapshot);
    return j;
}

void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace) {
    for (const auto& s : trace.steps) out << to_json(s).dump() << '\n';
}

}  // namespace ambiplan
