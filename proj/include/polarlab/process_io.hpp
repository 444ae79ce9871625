#pragma once

// Process description files and named presets.
//
// File schema:
//   {"name": "...", "states": [...], "obs": [...],
//    "edges": [{"from": s, "to": s', "x": 0|1, "y": obs, "p": prob}, ...],
//    "periodic_ok": bool}
// State and observation labels may be strings or numbers; edges refer to
// them by label. "obs" may be omitted or empty for no side information.
//
// Presets: "bb00", "hmm2", "iid:<p>", "bsc:<p>", "bec:<e>",
//          "ge" or "ge:<pg>,<pb>,<g2b>,<b2g>".

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "polarlab/process.hpp"

namespace polarlab {

namespace detail {

inline std::string label_of(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  throw Error("process file: labels must be strings or numbers");
}

inline std::vector<double> parse_numbers(const std::string& text, std::size_t expected,
                                         const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw Error("");
    } catch (...) {
      throw Error("preset " + what + ": cannot parse '" + item + "'");
    }
  }
  if (out.size() != expected)
    throw Error("preset " + what + " expects " + std::to_string(expected) + " parameters");
  return out;
}

}  // namespace detail

/// The 2-state hidden-Markov preset: transitions [[1/2,1/2],[1,0]], so
/// pi = (2/3, 1/3); state 0 emits Ber(0.4), state 1 emits 0. Entropy rate
/// is about 0.83.
inline EdgeKernel make_hmm2() {
  return make_hidden_markov({{0.5, 0.5}, {1.0, 0.0}}, {{{0.6, 0.4}}, {{1.0, 0.0}}}, "hmm2");
}

/// Gilbert-Elliott channel with uniform i.i.d. input; Y is the channel output.
inline EdgeKernel make_gilbert_elliott(double p_good = 0.01, double p_bad = 0.2, double g2b = 0.1,
                                       double b2g = 0.2) {
  std::ostringstream name;
  name << "ge:" << p_good << "," << p_bad << "," << g2b << "," << b2g;
  return compose_channel_with_input(gilbert_elliott_channel(p_good, p_bad, g2b, b2g), iid_input(0.5),
                                    name.str());
}

inline EdgeKernel make_preset(const std::string& name) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : name.substr(colon + 1);
  if (head == "bb00" && args.empty()) return make_periodic_bb00();
  if (head == "hmm2" && args.empty()) return make_hmm2();
  if (head == "iid") {
    const double p = detail::parse_numbers(args, 1, "iid")[0];
    const double law[2] = {1 - p, p};
    return make_iid(law, {}, name);
  }
  if (head == "bsc") {
    const double p = detail::parse_numbers(args, 1, "bsc")[0];
    const double law[4] = {0.5 * (1 - p), 0.5 * p, 0.5 * p, 0.5 * (1 - p)};
    return make_iid(law, {"0", "1"}, name);
  }
  if (head == "bec") {
    const double e = detail::parse_numbers(args, 1, "bec")[0];
    const double law[6] = {0.5 * (1 - e), 0.0, 0.5 * e, 0.0, 0.5 * (1 - e), 0.5 * e};
    return make_iid(law, {"0", "1", "?"}, name);
  }
  if (head == "ge") {
    if (args.empty()) return make_gilbert_elliott();
    const auto v = detail::parse_numbers(args, 4, "ge");
    return make_gilbert_elliott(v[0], v[1], v[2], v[3]);
  }
  throw Error("unknown process preset '" + name + "'");
}

inline EdgeKernel kernel_from_json(const nlohmann::json& j) {
  try {
    const std::string name = j.value("name", std::string("custom"));
    std::vector<std::string> states, obs;
    std::map<std::string, int> state_index, obs_index;
    for (const auto& s : j.at("states")) {
      const std::string label = detail::label_of(s);
      if (!state_index.emplace(label, static_cast<int>(states.size())).second)
        throw Error("process file: duplicate state '" + label + "'");
      states.push_back(label);
    }
    if (j.contains("obs"))
      for (const auto& o : j.at("obs")) {
        const std::string label = detail::label_of(o);
        if (!obs_index.emplace(label, static_cast<int>(obs.size())).second)
          throw Error("process file: duplicate observation '" + label + "'");
        obs.push_back(label);
      }
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      Edge edge;
      const auto from = state_index.find(detail::label_of(e.at("from")));
      const auto to = state_index.find(detail::label_of(e.at("to")));
      if (from == state_index.end() || to == state_index.end())
        throw Error("process file: edge refers to an unknown state");
      edge.from = from->second;
      edge.to = to->second;
      edge.x = e.at("x").get<int>();
      if (obs.empty()) {
        edge.y = 0;
      } else {
        const auto y = obs_index.find(detail::label_of(e.at("y")));
        if (y == obs_index.end()) throw Error("process file: edge refers to an unknown observation");
        edge.y = y->second;
      }
      edge.p = e.at("p").get<double>();
      edges.push_back(edge);
    }
    return EdgeKernel(name, static_cast<int>(states.size()), obs, edges, j.value("periodic_ok", false),
                      states);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("process file: ") + ex.what());
  }
}

inline nlohmann::json kernel_to_json(const EdgeKernel& k) {
  nlohmann::json j;
  j["name"] = k.name();
  j["states"] = k.state_labels();
  j["obs"] = k.num_obs() == 1 ? std::vector<std::string>{} : k.obs_labels();
  j["periodic_ok"] = k.periodic_ok();
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : k.edges()) {
    nlohmann::json je{{"from", k.state_labels()[e.from]}, {"to", k.state_labels()[e.to]}, {"x", e.x},
                      {"p", e.p}};
    if (k.num_obs() > 1) je["y"] = k.obs_labels()[e.y];
    j["edges"].push_back(je);
  }
  return j;
}

/// Resolves a --process argument: an existing file path is parsed as JSON,
/// anything else is looked up as a preset.
inline EdgeKernel load_process(const std::string& source) {
  if (std::filesystem::is_regular_file(source)) {
    std::ifstream in(source);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& ex) {
      throw Error("process file " + source + ": " + ex.what());
    }
    return kernel_from_json(j);
  }
  return make_preset(source);
}

}  // namespace polarlab
