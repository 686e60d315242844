#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sfp/analysis.hpp"

// Serialization: JSON schemas for games, profiles, choice rules and
// equilibrium reports; CSV emission for trajectories; atomic file writes.
// Parse failures surface as ConfigError.

namespace sfp::io {

using json = nlohmann::ordered_json;

// Doubles with 17 significant digits; round-trips bit-exactly.
std::string format17(double v);
// json serialization with every float at 17 significant digits.
std::string dump17(const json& j, int indent = 2);

json load_json_file(const std::string& path);
json parse_json(const std::string& text);

// {"players": N, "actions": [m1,...], "payoffs": [flat row-major tensor, ...]}
games::Game game_from_json(const json& j);
json game_to_json(const games::Game& g);

// {"blocks": [[...], ...]}
games::MixedProfile profile_from_json(const json& j,
                                      const std::vector<int>& action_counts);
json profile_to_json(const games::MixedProfile& p);

// {"kind":"logit","eta":0.5} or {"kind":"custom","name":"..."} per player;
// a single object is replicated to all players, an array gives one entry
// per player. Custom names resolve through the response registry.
std::vector<response::ChoiceSpec> choices_from_json(const json& j, int players);

// {"point": {...}, "residual": r, "eigenvalues": [[re,im],...], "label": "..."}
json report_to_json(const flow::EquilibriumReport& rep);
flow::EquilibriumReport report_from_json(const json& j,
                                         const std::vector<int>& action_counts);

json catalog_to_json(const std::vector<flow::EquilibriumReport>& entries);
std::vector<flow::EquilibriumReport> catalog_from_json(
    const json& j, const std::vector<int>& action_counts);

// Header "t,x_0,...,x_{D-1}", one row per stored knot.
std::string trajectory_csv(const stochastic::Trajectory& traj);
stochastic::Trajectory trajectory_from_csv(const std::string& text);

// Header "n,u_0,...,u_{D-1},x_0,...,x_{D-1}", one row per recorded increment.
std::string noise_csv(const stochastic::NoiseRecord& rec);

// Echo of the run parameters stored on a trajectory.
json run_config_json(const stochastic::Trajectory& traj);

// Writes to a temp file in the same directory, then renames over the target.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace sfp::io
