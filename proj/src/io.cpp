#include "sfp/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sfp/errors.hpp"

namespace sfp::io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    bad(std::string("missing field \"") + name + "\"");
  return j.at(name);
}

long int_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer())
    bad(std::string("field \"") + name + "\" must be an integer");
  return v.get<long>();
}

double num_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number())
    bad(std::string("field \"") + name + "\" must be a number");
  return v.get<double>();
}

std::vector<double> double_array(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) bad(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void append_dump17(const json& j, int indent, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
  switch (j.type()) {
    case json::value_t::number_float:
      out += format17(j.get<double>());
      return;
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        out += pad;
        append_dump17(j[k], indent, depth + 1, out);
        out += (k + 1 < j.size()) ? ",\n" : "\n";
      }
      out += close_pad + "]";
      return;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t k = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++k) {
        out += pad + json(it.key()).dump() + ": ";
        append_dump17(it.value(), indent, depth + 1, out);
        out += (k + 1 < j.size()) ? ",\n" : "\n";
      }
      out += close_pad + "}";
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump17(const json& j, int indent) {
  std::string out;
  append_dump17(j, indent, 0, out);
  out += "\n";
  return out;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("invalid json: ") + e.what());
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

games::Game game_from_json(const json& j) {
  const long players = int_field(j, "players");
  if (players < 1) bad("\"players\" must be >= 1");
  const json& actions_j = field(j, "actions");
  if (!actions_j.is_array() ||
      actions_j.size() != static_cast<std::size_t>(players))
    bad("\"actions\" must list one action count per player");
  std::vector<int> actions;
  for (const auto& a : actions_j) {
    if (!a.is_number_integer()) bad("\"actions\" must hold integers");
    actions.push_back(a.get<int>());
  }
  const json& payoffs_j = field(j, "payoffs");
  if (!payoffs_j.is_array() ||
      payoffs_j.size() != static_cast<std::size_t>(players))
    bad("\"payoffs\" must list one flat tensor per player");
  std::vector<std::vector<double>> payoffs;
  for (const auto& t : payoffs_j)
    payoffs.push_back(double_array(t, "payoff tensor"));
  try {
    return games::Game(std::move(actions), std::move(payoffs));
  } catch (const StructuralError& e) {
    bad(std::string("bad game: ") + e.what());
  } catch (const DomainError& e) {
    bad(std::string("bad game: ") + e.what());
  }
}

json game_to_json(const games::Game& g) {
  json j;
  j["players"] = g.players();
  j["actions"] = g.action_counts();
  json tensors = json::array();
  for (int i = 0; i < g.players(); ++i) {
    json flat = json::array();
    for (long a = 0; a < g.profile_count(); ++a) flat.push_back(g.payoff_flat(i, a));
    tensors.push_back(std::move(flat));
  }
  j["payoffs"] = std::move(tensors);
  return j;
}

games::MixedProfile profile_from_json(const json& j,
                                      const std::vector<int>& action_counts) {
  const json& blocks_j = field(j, "blocks");
  if (!blocks_j.is_array() || blocks_j.size() != action_counts.size())
    bad("\"blocks\" must list one block per player");
  std::vector<std::vector<double>> blocks;
  for (std::size_t i = 0; i < blocks_j.size(); ++i) {
    std::vector<double> b = double_array(blocks_j[i], "profile block");
    if (b.size() != static_cast<std::size_t>(action_counts[i]))
      bad("profile block size does not match the action count");
    blocks.push_back(std::move(b));
  }
  try {
    return games::MixedProfile(std::move(blocks));
  } catch (const std::runtime_error& e) {
    bad(std::string("bad profile: ") + e.what());
  }
}

json profile_to_json(const games::MixedProfile& p) {
  json blocks = json::array();
  for (int i = 0; i < static_cast<int>(p.blocks().size()); ++i)
    blocks.push_back(p.block(i));
  json j;
  j["blocks"] = std::move(blocks);
  return j;
}

namespace {

response::ChoiceSpec one_choice(const json& j) {
  const json& kind = field(j, "kind");
  if (!kind.is_string()) bad("choice \"kind\" must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "logit") {
    const double eta = num_field(j, "eta");
    try {
      return response::ChoiceSpec::logit(eta);
    } catch (const DomainError& e) {
      bad(std::string("bad choice: ") + e.what());
    }
  }
  if (k == "custom") {
    const json& name = field(j, "name");
    if (!name.is_string()) bad("custom choice \"name\" must be a string");
    try {
      return response::lookup_custom_choice(name.get<std::string>());
    } catch (const std::runtime_error& e) {
      bad(std::string("bad choice: ") + e.what());
    }
  }
  bad("choice \"kind\" must be \"logit\" or \"custom\"");
}

}  // namespace

std::vector<response::ChoiceSpec> choices_from_json(const json& j,
                                                    int players) {
  std::vector<response::ChoiceSpec> out;
  if (j.is_object()) {
    out.assign(players, one_choice(j));
  } else if (j.is_array()) {
    if (j.size() != static_cast<std::size_t>(players))
      bad("choices array must list one entry per player");
    for (const auto& e : j) out.push_back(one_choice(e));
  } else {
    bad("choices must be an object or an array of objects");
  }
  return out;
}

json report_to_json(const flow::EquilibriumReport& rep) {
  json j;
  j["point"] = profile_to_json(rep.point);
  j["residual"] = rep.residual;
  json ev = json::array();
  for (const auto& z : rep.eigenvalues)
    ev.push_back(json::array({z.real(), z.imag()}));
  j["eigenvalues"] = std::move(ev);
  j["label"] = flow::to_string(rep.label);
  return j;
}

flow::EquilibriumReport report_from_json(
    const json& j, const std::vector<int>& action_counts) {
  flow::EquilibriumReport rep{
      profile_from_json(field(j, "point"), action_counts)};
  rep.residual = num_field(j, "residual");
  const json& ev = field(j, "eigenvalues");
  if (!ev.is_array()) bad("\"eigenvalues\" must be an array of [re, im]");
  for (const auto& z : ev) {
    const std::vector<double> parts = double_array(z, "eigenvalue");
    if (parts.size() != 2) bad("eigenvalue entries must be [re, im]");
    rep.eigenvalues.emplace_back(parts[0], parts[1]);
  }
  const json& label = field(j, "label");
  if (!label.is_string()) bad("\"label\" must be a string");
  try {
    rep.label = flow::label_from_string(label.get<std::string>());
  } catch (const std::runtime_error& e) {
    bad(std::string("bad label: ") + e.what());
  }
  return rep;
}

json catalog_to_json(const std::vector<flow::EquilibriumReport>& entries) {
  json list = json::array();
  for (const auto& rep : entries) list.push_back(report_to_json(rep));
  json j;
  j["equilibria"] = std::move(list);
  return j;
}

std::vector<flow::EquilibriumReport> catalog_from_json(
    const json& j, const std::vector<int>& action_counts) {
  const json& list = field(j, "equilibria");
  if (!list.is_array()) bad("\"equilibria\" must be an array");
  std::vector<flow::EquilibriumReport> out;
  for (const auto& e : list) out.push_back(report_from_json(e, action_counts));
  return out;
}

std::string trajectory_csv(const stochastic::Trajectory& traj) {
  std::string out = "t";
  for (int c = 0; c < traj.dim(); ++c) out += ",x_" + std::to_string(c);
  out += "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format17(traj.time(k));
    const double* x = traj.state(k);
    for (int c = 0; c < traj.dim(); ++c) {
      out += ",";
      out += format17(x[c]);
    }
    out += "\n";
  }
  return out;
}

stochastic::Trajectory trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,x_0", 0) != 0)
    bad("trajectory csv must start with header t,x_0,...");
  int dim = 0;
  for (char c : line) dim += (c == ',');
  stochastic::Trajectory traj(dim, 1);
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    const char* s = line.c_str();
    char* end = nullptr;
    for (;;) {
      const double v = std::strtod(s, &end);
      if (end == s) bad("trajectory csv row is not numeric: " + line);
      vals.push_back(v);
      if (*end == '\0' || *end == '\r') break;
      if (*end != ',') bad("trajectory csv row is malformed: " + line);
      s = end + 1;
    }
    if (static_cast<int>(vals.size()) != dim + 1)
      bad("trajectory csv row has the wrong arity: " + line);
    try {
      traj.append(row++, vals[0], vals.data() + 1);
    } catch (const std::runtime_error& e) {
      bad(std::string("bad trajectory: ") + e.what());
    }
  }
  if (traj.size() == 0) bad("trajectory csv holds no rows");
  return traj;
}

std::string noise_csv(const stochastic::NoiseRecord& rec) {
  std::string out = "n";
  for (int c = 0; c < rec.dim; ++c) out += ",u_" + std::to_string(c);
  for (int c = 0; c < rec.dim; ++c) out += ",x_" + std::to_string(c);
  out += "\n";
  for (std::size_t k = 0; k < rec.size(); ++k) {
    out += std::to_string(rec.steps[k]);
    const double* u = rec.increment(k);
    for (int c = 0; c < rec.dim; ++c) {
      out += ",";
      out += format17(u[c]);
    }
    const double* x = rec.state(k);
    for (int c = 0; c < rec.dim; ++c) {
      out += ",";
      out += format17(x[c]);
    }
    out += "\n";
  }
  return out;
}

json run_config_json(const stochastic::Trajectory& traj) {
  json j;
  j["seed"] = traj.seed;
  j["steps"] = traj.total_steps;
  j["schedule"] = traj.schedule_name;
  j["stride"] = traj.stride_used;
  j["field"] = traj.field_name;
  j["start_index"] = traj.start_index();
  return j;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw DomainError("cannot write file: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw DomainError("cannot replace file: " + path);
}

}  // namespace sfp::io
