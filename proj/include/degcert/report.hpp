#pragma once

// Machine-readable outcome of a degeneracy test. Serialization is
// deterministic (alphabetically sorted keys) so identical runs produce
// byte-identical reports.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "degcert/config.hpp"

namespace degcert {

enum class Verdict { DegeneracyCertified, Inconclusive };
enum class Reason { None, SignReversal, NontrivialLoop, NonzeroWinding, NonzeroStoneK };

inline const char* to_string(Verdict v) {
  return v == Verdict::DegeneracyCertified ? "DEGENERACY_CERTIFIED" : "INCONCLUSIVE";
}

inline const char* to_string(Reason r) {
  switch (r) {
    case Reason::SignReversal: return "sign_reversal";
    case Reason::NontrivialLoop: return "nontrivial_loop";
    case Reason::NonzeroWinding: return "nonzero_winding";
    case Reason::NonzeroStoneK: return "nonzero_stone_k";
    case Reason::None: return "none";
  }
  return "none";
}

struct TestReport {
  Verdict verdict = Verdict::Inconclusive;
  Reason reason = Reason::None;

  std::optional<std::vector<long>> k_list;
  std::optional<long> h;
  std::optional<long> winding;
  std::optional<long> stone_k;

  std::map<std::string, double> diagnostics;
  std::optional<std::string> surface_condition_checked;
  std::string version = kVersion;
  nlohmann::json config_echo = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["verdict"] = to_string(verdict);
    j["reason"] = to_string(reason);
    nlohmann::json inv = nlohmann::json::object();
    if (k_list) inv["k_list"] = *k_list;
    if (h) inv["h"] = *h;
    if (winding) inv["winding"] = *winding;
    if (stone_k) inv["stone_k"] = *stone_k;
    j["invariants"] = inv;
    j["diagnostics"] = diagnostics;
    if (surface_condition_checked)
      j["surface_condition_checked"] = *surface_condition_checked;
    j["version"] = version;
    j["config"] = config_echo;
    return j;
  }

  static TestReport from_json(const nlohmann::json& j) {
    TestReport r;
    const std::string v = j.at("verdict").get<std::string>();
    if (v == "DEGENERACY_CERTIFIED") r.verdict = Verdict::DegeneracyCertified;
    else if (v == "INCONCLUSIVE") r.verdict = Verdict::Inconclusive;
    else fail(ErrorCode::ParseError, "report", "unknown verdict: " + v);
    const std::string reason = j.at("reason").get<std::string>();
    if (reason == "sign_reversal") r.reason = Reason::SignReversal;
    else if (reason == "nontrivial_loop") r.reason = Reason::NontrivialLoop;
    else if (reason == "nonzero_winding") r.reason = Reason::NonzeroWinding;
    else if (reason == "nonzero_stone_k") r.reason = Reason::NonzeroStoneK;
    else if (reason == "none") r.reason = Reason::None;
    else fail(ErrorCode::ParseError, "report", "unknown reason: " + reason);
    const auto& inv = j.at("invariants");
    if (inv.contains("k_list")) r.k_list = inv["k_list"].get<std::vector<long>>();
    if (inv.contains("h")) r.h = inv["h"].get<long>();
    if (inv.contains("winding")) r.winding = inv["winding"].get<long>();
    if (inv.contains("stone_k")) r.stone_k = inv["stone_k"].get<long>();
    r.diagnostics = j.at("diagnostics").get<std::map<std::string, double>>();
    if (j.contains("surface_condition_checked"))
      r.surface_condition_checked = j["surface_condition_checked"].get<std::string>();
    r.version = j.at("version").get<std::string>();
    r.config_echo = j.at("config");
    return r;
  }
};

}  // namespace degcert
