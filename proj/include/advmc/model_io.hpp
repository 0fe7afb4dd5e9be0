#pragma once

#include <string>
#include <variant>

#include "advmc/model.hpp"
#include "advmc/threat.hpp"

namespace advmc {

using Model = std::variant<Dtmc, Mdp>;

/// Canonical JSON for the model file format. Probabilities carry 17
/// significant digits so stored values round-trip bit-for-bit.
std::string model_to_json(const Dtmc& model);
std::string model_to_json(const Mdp& model);

Model parse_model_json(const std::string& text);
Model load_model(const std::string& path);
void store_model(const Model& model, const std::string& path);

ThreatModel parse_threat_json(const std::string& text);
ThreatModel load_threat(const std::string& path);
std::string threat_to_json(const ThreatModel& tm);
void store_threat(const ThreatModel& tm, const std::string& path);

std::string idtmc_to_json(const IdtmcExport& exported);
void store_idtmc(const IdtmcExport& exported, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// 17-significant-digit scientific form used for every probability we emit.
std::string format_probability(double value);

}  // namespace advmc
