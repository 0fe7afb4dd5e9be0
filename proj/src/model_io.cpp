#include "advmc/model_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace advmc {

namespace {

using nlohmann::json;

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

void write_header(std::ostringstream& out, const char* type, int n, int init,
                  const std::vector<std::string>& atoms,
                  const std::vector<std::vector<int>>& labels) {
  out << "{\n";
  out << "  \"type\": \"" << type << "\",\n";
  out << "  \"n\": " << n << ",\n";
  out << "  \"init\": " << init << ",\n";
  out << "  \"atoms\": [";
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (i) out << ", ";
    out << '"' << escape(atoms[i]) << '"';
  }
  out << "],\n";
  out << "  \"labels\": {";
  bool first_state = true;
  for (int s = 0; s < n; ++s) {
    if (labels[s].empty()) continue;
    if (!first_state) out << ", ";
    first_state = false;
    out << '"' << s << "\": [";
    for (size_t i = 0; i < labels[s].size(); ++i) {
      if (i) out << ", ";
      out << '"' << escape(atoms[labels[s][i]]) << '"';
    }
    out << ']';
  }
  out << "},\n";
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, e.what());
  }
}

int get_int(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number_integer())
    fail(Errc::ParseError, std::string("missing or non-integer field '") + field + "'");
  return j[field].get<int>();
}

double get_prob(const json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j[field].is_number())
    fail(Errc::ParseError, "missing or non-numeric field '" + std::string(field) + "' in " + where);
  return j[field].get<double>();
}

std::vector<std::string> get_atoms(const json& j) {
  if (!j.contains("atoms") || !j["atoms"].is_array())
    fail(Errc::ParseError, "missing or non-array field 'atoms'");
  std::vector<std::string> atoms;
  for (const auto& a : j["atoms"]) {
    if (!a.is_string()) fail(Errc::ParseError, "atom names must be strings");
    atoms.push_back(a.get<std::string>());
  }
  return atoms;
}

std::vector<std::vector<int>> get_labels(const json& j, int n, const std::vector<std::string>& atoms) {
  std::vector<std::vector<int>> labels(n);
  if (!j.contains("labels")) return labels;
  if (!j["labels"].is_object()) fail(Errc::ParseError, "'labels' must be an object keyed by state index");
  for (const auto& [key, value] : j["labels"].items()) {
    int state;
    try {
      size_t used = 0;
      state = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      fail(Errc::ParseError, "label key '" + key + "' is not a state index");
    }
    if (state < 0 || state >= n)
      fail(Errc::BadLabel, "label key '" + key + "' outside 0.." + std::to_string(n - 1));
    if (!value.is_array()) fail(Errc::ParseError, "labels for state " + key + " must be an array");
    for (const auto& a : value) {
      if (!a.is_string()) fail(Errc::ParseError, "labels for state " + key + " must be atom names");
      auto it = std::find(atoms.begin(), atoms.end(), a.get<std::string>());
      if (it == atoms.end())
        fail(Errc::BadLabel, "state " + key + " labeled with undeclared atom '" + a.get<std::string>() + "'");
      labels[state].push_back(static_cast<int>(it - atoms.begin()));
    }
    std::sort(labels[state].begin(), labels[state].end());
    labels[state].erase(std::unique(labels[state].begin(), labels[state].end()), labels[state].end());
  }
  return labels;
}

}  // namespace

std::string format_probability(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

std::string model_to_json(const Dtmc& model) {
  std::ostringstream out;
  write_header(out, "dtmc", model.n, model.init, model.atoms, model.labels);
  out << "  \"transitions\": [\n";
  bool first = true;
  for (int s = 0; s < model.n; ++s) {
    for (const Transition& t : model.rows[s]) {
      if (!first) out << ",\n";
      first = false;
      out << "    {\"from\": " << s << ", \"to\": " << t.to << ", \"p\": " << format_probability(t.p) << "}";
    }
  }
  out << "\n  ]\n}\n";
  return out.str();
}

std::string model_to_json(const Mdp& model) {
  std::ostringstream out;
  write_header(out, "mdp", model.n, model.init, model.atoms, model.labels);
  out << "  \"transitions\": [\n";
  bool first = true;
  for (int s = 0; s < model.n; ++s) {
    for (const auto& [a, dist] : model.act_rows[s]) {
      for (const Transition& t : dist) {
        if (!first) out << ",\n";
        first = false;
        out << "    {\"from\": " << s << ", \"action\": \"" << escape(model.actions[a])
            << "\", \"to\": " << t.to << ", \"p\": " << format_probability(t.p) << "}";
      }
    }
  }
  out << "\n  ]\n}\n";
  return out.str();
}

Model parse_model_json(const std::string& text) {
  json j = parse_json(text);
  if (!j.is_object()) fail(Errc::ParseError, "model file must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string())
    fail(Errc::ParseError, "missing or non-string field 'type'");
  const std::string type = j["type"].get<std::string>();
  const int n = get_int(j, "n");
  if (n <= 0) fail(Errc::ParseError, "'n' must be positive");
  const int init = get_int(j, "init");
  std::vector<std::string> atoms = get_atoms(j);
  std::vector<std::vector<int>> labels = get_labels(j, n, atoms);
  if (!j.contains("transitions") || !j["transitions"].is_array())
    fail(Errc::ParseError, "missing or non-array field 'transitions'");

  if (type == "dtmc") {
    Dtmc model;
    model.n = n;
    model.init = init;
    model.atoms = std::move(atoms);
    model.labels = std::move(labels);
    model.rows.resize(n);
    size_t index = 0;
    for (const auto& tr : j["transitions"]) {
      const std::string where = "transitions[" + std::to_string(index++) + "]";
      if (tr.contains("action"))
        fail(Errc::ParseError, where + " carries an action field in a dtmc file");
      int from = get_int(tr, "from");
      int to = get_int(tr, "to");
      double p = get_prob(tr, "p", where);
      if (from < 0 || from >= n) fail(Errc::ParseError, where + ": 'from' outside the state space");
      if (to < 0 || to >= n) fail(Errc::ParseError, where + ": 'to' outside the state space");
      for (const Transition& existing : model.rows[from])
        if (existing.to == to)
          fail(Errc::ParseError, where + ": duplicate transition " + std::to_string(from) + "->" + std::to_string(to));
      model.rows[from].push_back({to, p});
    }
    for (auto& row : model.rows)
      std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.to < b.to; });
    validate_dtmc(model);
    return model;
  }
  if (type == "mdp") {
    Mdp model;
    model.n = n;
    model.init = init;
    model.atoms = std::move(atoms);
    model.labels = std::move(labels);
    model.act_rows.resize(n);
    size_t index = 0;
    for (const auto& tr : j["transitions"]) {
      const std::string where = "transitions[" + std::to_string(index++) + "]";
      if (!tr.contains("action") || !tr["action"].is_string())
        fail(Errc::ParseError, where + ": mdp transitions require a string 'action'");
      const std::string action = tr["action"].get<std::string>();
      int from = get_int(tr, "from");
      int to = get_int(tr, "to");
      double p = get_prob(tr, "p", where);
      if (from < 0 || from >= n) fail(Errc::ParseError, where + ": 'from' outside the state space");
      if (to < 0 || to >= n) fail(Errc::ParseError, where + ": 'to' outside the state space");
      auto it = std::find(model.actions.begin(), model.actions.end(), action);
      int a;
      if (it == model.actions.end()) {
        a = static_cast<int>(model.actions.size());
        model.actions.push_back(action);
      } else {
        a = static_cast<int>(it - model.actions.begin());
      }
      auto& row = model.act_rows[from];
      auto rit = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == a; });
      if (rit == row.end()) {
        row.push_back({a, {}});
        rit = row.end() - 1;
      }
      for (const Transition& existing : rit->second)
        if (existing.to == to)
          fail(Errc::ParseError, where + ": duplicate transition (" + std::to_string(from) + "," + action + "," +
                                     std::to_string(to) + ")");
      rit->second.push_back({to, p});
    }
    for (auto& row : model.act_rows) {
      std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [a, dist] : row)
        std::sort(dist.begin(), dist.end(), [](const Transition& x, const Transition& y) { return x.to < y.to; });
    }
    validate_mdp(model);
    return model;
  }
  fail(Errc::ParseError, "unknown model type '" + type + "'");
}

Model load_model(const std::string& path) { return parse_model_json(read_text_file(path)); }

void store_model(const Model& model, const std::string& path) {
  if (std::holds_alternative<Dtmc>(model))
    write_text_file(path, model_to_json(std::get<Dtmc>(model)));
  else
    write_text_file(path, model_to_json(std::get<Mdp>(model)));
}

ThreatModel parse_threat_json(const std::string& text) {
  json j = parse_json(text);
  if (!j.is_object()) fail(Errc::ParseError, "threat file must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string())
    fail(Errc::ParseError, "missing or non-string field 'kind'");
  ThreatModel tm;
  tm.kind = threat_kind_from_name(j["kind"].get<std::string>());
  if (!j.contains("epsilon") || !j["epsilon"].is_number())
    fail(Errc::ParseError, "missing or non-numeric field 'epsilon'");
  tm.epsilon = j["epsilon"].get<double>();
  const bool has_states = j.contains("vulnerable_states");
  const bool has_transitions = j.contains("vulnerable_transitions");
  if (state_selected(tm.kind)) {
    if (!has_states || has_transitions)
      fail(Errc::ParseError, std::string(threat_kind_name(tm.kind)) + " threat requires exactly 'vulnerable_states'");
    for (const auto& s : j["vulnerable_states"]) {
      if (!s.is_number_integer()) fail(Errc::ParseError, "'vulnerable_states' must hold state indices");
      tm.vulnerable_states.push_back(s.get<int>());
    }
  } else {
    if (has_states || !has_transitions)
      fail(Errc::ParseError,
           std::string(threat_kind_name(tm.kind)) + " threat requires exactly 'vulnerable_transitions'");
    for (const auto& pair : j["vulnerable_transitions"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer())
        fail(Errc::ParseError, "'vulnerable_transitions' must hold [from, to] pairs");
      tm.vulnerable_transitions.push_back({pair[0].get<int>(), pair[1].get<int>()});
    }
  }
  if (!(tm.epsilon >= 0.0 && tm.epsilon <= 1.0))
    fail(Errc::ParameterOutOfRange, "epsilon must lie in [0,1]");
  return tm;
}

ThreatModel load_threat(const std::string& path) { return parse_threat_json(read_text_file(path)); }

std::string threat_to_json(const ThreatModel& tm) {
  json j;
  j["kind"] = threat_kind_name(tm.kind);
  j["epsilon"] = tm.epsilon;
  if (state_selected(tm.kind)) {
    j["vulnerable_states"] = tm.vulnerable_states;
  } else {
    json pairs = json::array();
    for (const auto& [s, t] : tm.vulnerable_transitions) pairs.push_back({s, t});
    j["vulnerable_transitions"] = pairs;
  }
  return j.dump(2) + "\n";
}

void store_threat(const ThreatModel& tm, const std::string& path) {
  write_text_file(path, threat_to_json(tm));
}

std::string idtmc_to_json(const IdtmcExport& exported) {
  std::ostringstream out;
  auto write_matrix = [&](const std::vector<std::vector<double>>& mat) {
    out << "[\n";
    for (size_t r = 0; r < mat.size(); ++r) {
      out << "    [";
      for (size_t c = 0; c < mat[r].size(); ++c) {
        if (c) out << ", ";
        out << format_probability(mat[r][c]);
      }
      out << (r + 1 < mat.size() ? "],\n" : "]\n");
    }
    out << "  ]";
  };
  out << "{\n  \"lower\": ";
  write_matrix(exported.lower);
  out << ",\n  \"upper\": ";
  write_matrix(exported.upper);
  out << "\n}\n";
  return out.str();
}

void store_idtmc(const IdtmcExport& exported, const std::string& path) {
  write_text_file(path, idtmc_to_json(exported));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::ParseError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::ParseError, "cannot write '" + path + "'");
  out << content;
  if (!out) fail(Errc::ParseError, "write to '" + path + "' failed");
}

}  // namespace advmc
