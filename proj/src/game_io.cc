#include "qrepath/game_io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qrepath {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::pair<int, int> LineColumn(std::string_view text, std::size_t offset) {
  int line = 1;
  int column = 1;
  for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

[[noreturn]] void ShapeError(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what, 0, 0);
}

const json& Field(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) ShapeError(where, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string StringField(const json& object, const char* key, const std::string& where) {
  const json& value = Field(object, key, where);
  if (!value.is_string()) ShapeError(where, std::string("\"") + key + "\" must be a string");
  return value.get<std::string>();
}

NodeSpec ReadNode(const json& value, const std::string& where) {
  if (!value.is_object()) ShapeError(where, "node must be an object");
  NodeSpec spec;
  if (value.contains("payoffs")) {
    const json& payoffs = value["payoffs"];
    if (!payoffs.is_array()) ShapeError(where, "\"payoffs\" must be an array");
    std::vector<double> u;
    for (const json& entry : payoffs) {
      if (!entry.is_number()) ShapeError(where, "payoff entries must be numbers");
      u.push_back(entry.get<double>());
    }
    spec.payoffs = std::move(u);
    if (value.contains("player")) spec.player = StringField(value, "player", where);
    if (value.contains("actions")) {
      ShapeError(where, "terminal node must not declare actions");
    }
    return spec;
  }
  spec.player = StringField(value, "player", where);
  if (value.contains("infoset")) spec.infoset = StringField(value, "infoset", where);
  const json& actions = Field(value, "actions", where);
  if (!actions.is_array()) ShapeError(where, "\"actions\" must be an array");
  for (std::size_t a = 0; a < actions.size(); ++a) {
    const std::string at = where + ".actions[" + std::to_string(a) + "]";
    const json& entry = actions[a];
    if (!entry.is_object()) ShapeError(at, "action must be an object");
    NodeSpec::Action action;
    action.label = StringField(entry, "label", at);
    if (entry.contains("prob")) {
      if (!entry["prob"].is_number()) ShapeError(at, "\"prob\" must be a number");
      action.prob = entry["prob"].get<double>();
    }
    if (entry.contains("child") && !entry["child"].is_null()) {
      action.child.push_back(ReadNode(entry["child"], at + ".child"));
    }
    spec.actions.push_back(std::move(action));
  }
  return spec;
}

ordered_json WriteNode(const NodeSpec& spec) {
  ordered_json node;
  if (spec.payoffs.has_value()) {
    node["payoffs"] = *spec.payoffs;
    return node;
  }
  node["player"] = spec.player;
  if (spec.player != "chance") node["infoset"] = spec.infoset;
  ordered_json actions = ordered_json::array();
  for (const auto& action : spec.actions) {
    ordered_json entry;
    entry["label"] = action.label;
    if (action.prob.has_value()) entry["prob"] = *action.prob;
    entry["child"] = WriteNode(action.child.front());
    actions.push_back(std::move(entry));
  }
  node["actions"] = std::move(actions);
  return node;
}

}  // namespace

GameTree ParseGame(std::string_view text) {
  json document;
  try {
    document = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, column] = LineColumn(text, e.byte == 0 ? 0 : e.byte - 1);
    // Drop nlohmann's "[json.exception...] parse error at ...: " prefix.
    std::string detail = e.what();
    if (const auto colon = detail.find(": "); colon != std::string::npos) {
      detail = detail.substr(colon + 2);
    }
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + detail,
                     line, column);
  }
  if (!document.is_object()) ShapeError("document", "top level must be an object");
  if (document.contains("format")) {
    const json& format = document["format"];
    if (!format.is_string() || format.get<std::string>() != kGameFormat) {
      ShapeError("format", "unsupported format (expected \"" +
                               std::string(kGameFormat) + "\")");
    }
  }
  const json& players = Field(document, "players", "document");
  if (!players.is_array()) ShapeError("players", "must be an array of names");
  std::vector<std::string> names;
  for (const json& p : players) {
    if (!p.is_string()) ShapeError("players", "player names must be strings");
    names.push_back(p.get<std::string>());
  }
  NodeSpec root = ReadNode(Field(document, "root", "document"), "root");
  return GameTree::Build(std::move(names), root);
}

GameTree LoadGame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseGame(buffer.str());
}

std::string SerializeGame(const GameTree& game) {
  ordered_json document;
  document["format"] = kGameFormat;
  document["players"] = game.players();
  document["root"] = WriteNode(game.ToSpec());
  return document.dump(2) + "\n";
}

}  // namespace qrepath
