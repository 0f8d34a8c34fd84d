#include "qrepath/profile_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qrepath {
namespace {

using nlohmann::json;

constexpr double kFlowTolerance = 1e-9;

std::vector<double> Numbers(const json& value, const std::string& where) {
  if (!value.is_array()) throw ProfileError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const json& v : value) {
    if (!v.is_number()) throw ProfileError(where + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void ExpectLength(const std::vector<double>& v, std::size_t n, const std::string& where) {
  if (v.size() != n) {
    throw ProfileError(where + ": expected " + std::to_string(n) + " entries, got " +
                       std::to_string(v.size()));
  }
}

std::vector<double> PlayerPlan(const SequenceSpace& space, int i, const json& entry) {
  const std::string& name = space.player_names()[i];
  if (!entry.is_object() || entry.size() != 1) {
    throw ProfileError("player '" + name +
                       "': expected exactly one of mixed, behavior, realization");
  }
  const PlayerSequences& seqs = space.player(i);
  const std::string form = entry.begin().key();
  const json& value = entry.begin().value();
  const std::string where = "player '" + name + "' " + form;

  if (form == "realization") {
    std::vector<double> plan = Numbers(value, where);
    ExpectLength(plan, seqs.size(), where);
    return plan;
  }
  if (form == "behavior") {
    if (!value.is_object()) throw ProfileError(where + ": expected an object");
    BehaviorProfile behavior = UniformBehavior(space);
    std::size_t seen = 0;
    for (int j = 0; j < seqs.num_infosets(); ++j) {
      const std::string& infoset = space.InfosetName(i, j);
      if (!value.contains(infoset)) {
        throw ProfileError(where + ": missing infoset '" + infoset + "'");
      }
      std::vector<double> probs = Numbers(value[infoset], where + " '" + infoset + "'");
      ExpectLength(probs, seqs.num_actions(j), where + " '" + infoset + "'");
      behavior[i][j] = std::move(probs);
      ++seen;
    }
    if (seen != value.size()) throw ProfileError(where + ": unknown infoset");
    return RealizationFromBehavior(space, behavior)[i];
  }
  if (form == "mixed") {
    std::vector<double> sigma = Numbers(value, where);
    if (!space.has_strategies()) {
      throw ProfileError(where + ": reduced strategies unavailable for this game");
    }
    ExpectLength(sigma, space.strategies(i).size(), where);
    std::vector<double> plan(seqs.size(), 0.0);
    const auto& strategies = space.strategies(i);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      for (int seq : strategies[s].sequences) plan[seq] += sigma[s];
    }
    return plan;
  }
  throw ProfileError(where + ": unknown form (use mixed, behavior or realization)");
}

RealizationProfile Players(const SequenceSpace& space, const json& players,
                           const std::string& where) {
  if (!players.is_object()) throw ProfileError(where + ": expected an object");
  RealizationProfile gamma;
  for (int i = 0; i < space.num_players(); ++i) {
    const std::string& name = space.player_names()[i];
    if (!players.contains(name)) {
      throw ProfileError(where + ": missing player '" + name + "'");
    }
    gamma.plan.push_back(PlayerPlan(space, i, players[name]));
  }
  if (players.size() != static_cast<std::size_t>(space.num_players())) {
    throw ProfileError(where + ": unknown player");
  }
  for (const auto& plan : gamma.plan) {
    for (double v : plan) {
      if (!std::isfinite(v) || v < 0.0) {
        throw ProfileError(where + ": probabilities must be finite and nonnegative");
      }
    }
  }
  if (MaxFlowResidual(space, gamma) > kFlowTolerance) {
    throw ProfileError(where + ": probabilities violate the realization constraints");
  }
  return gamma;
}

}  // namespace

ProfileFile ParseProfile(const SequenceSpace& space, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProfileError(std::string("profile is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ProfileError("profile must be a JSON object");
  if (doc.contains("format") && doc["format"] != "qrepath-profile v1") {
    throw ProfileError("unsupported profile format");
  }
  if (!doc.contains("players")) throw ProfileError("profile has no 'players'");
  ProfileFile out;
  out.gamma = Players(space, doc["players"], "players");
  if (doc.contains("t")) {
    if (!doc["t"].is_number()) throw ProfileError("'t' must be a number");
    out.t = doc["t"].get<double>();
  }
  if (doc.contains("nu")) {
    const std::vector<double> nu = Numbers(doc["nu"], "nu");
    ExpectLength(nu, space.num_infoset_slots(), "nu");
    out.nu = Eigen::Map<const Eigen::VectorXd>(nu.data(), static_cast<Eigen::Index>(nu.size()));
  }
  if (doc.contains("anchor")) out.anchor = Players(space, doc["anchor"], "anchor");
  return out;
}

ProfileFile LoadProfile(const SequenceSpace& space, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProfileError("cannot open profile '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return ParseProfile(space, text.str());
}

std::string SerializeProfile(const SequenceSpace& space, const ProfileFile& profile) {
  auto players = [&](const RealizationProfile& gamma) {
    nlohmann::ordered_json out;
    for (int i = 0; i < space.num_players(); ++i) {
      out[space.player_names()[i]] = {{"realization", gamma[i]}};
    }
    return out;
  };
  nlohmann::ordered_json doc;
  doc["format"] = "qrepath-profile v1";
  doc["players"] = players(profile.gamma);
  if (profile.t) doc["t"] = *profile.t;
  if (profile.nu) {
    doc["nu"] = std::vector<double>(profile.nu->data(), profile.nu->data() + profile.nu->size());
  }
  if (profile.anchor) doc["anchor"] = players(*profile.anchor);
  return doc.dump(2) + "\n";
}

}  // namespace qrepath
