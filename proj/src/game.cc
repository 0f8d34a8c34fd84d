#include "qrepath/game.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace qrepath {

NodeSpec Leaf(std::vector<double> payoffs) {
  NodeSpec spec;
  spec.payoffs = std::move(payoffs);
  return spec;
}

NodeSpec Decision(std::string player, std::string infoset,
                  std::vector<std::pair<std::string, NodeSpec>> actions) {
  NodeSpec spec;
  spec.player = std::move(player);
  spec.infoset = std::move(infoset);
  for (auto& [label, child] : actions) {
    NodeSpec::Action action;
    action.label = label;
    action.child.push_back(std::move(child));
    spec.actions.push_back(std::move(action));
  }
  return spec;
}

NodeSpec Chance(std::vector<std::tuple<std::string, double, NodeSpec>> actions) {
  NodeSpec spec;
  spec.player = "chance";
  for (auto& [label, prob, child] : actions) {
    NodeSpec::Action action;
    action.label = label;
    action.prob = prob;
    action.child.push_back(std::move(child));
    spec.actions.push_back(std::move(action));
  }
  return spec;
}

namespace {

std::string FormatReal(double value) {
  std::ostringstream out;
  out.precision(12);
  out << value;
  return out.str();
}

struct Builder {
  std::vector<std::string> players;
  std::vector<Node> nodes;
  std::vector<std::vector<std::string>> node_actions;
  std::vector<std::vector<Infoset>> infosets;
  std::vector<std::map<std::string, int>> infoset_index;
  bool has_chance = false;

  int PlayerIndex(const std::string& name) const {
    auto it = std::find(players.begin(), players.end(), name);
    return it == players.end() ? -1 : static_cast<int>(it - players.begin());
  }

  int Add(const NodeSpec& spec, int parent, int parent_action, int depth,
          const std::string& where) {
    const int h = static_cast<int>(nodes.size());
    nodes.emplace_back();
    node_actions.emplace_back();
    nodes[h].parent = parent;
    nodes[h].parent_action = parent_action;
    nodes[h].depth = depth;

    if (spec.payoffs.has_value()) {
      if (!spec.actions.empty() || !spec.player.empty()) {
        throw GameError(where, "terminal node must not declare a player or actions");
      }
      const auto& payoffs = *spec.payoffs;
      if (payoffs.size() != players.size()) {
        throw GameError(where, "payoff arity mismatch: expected " +
                                   std::to_string(players.size()) + ", got " +
                                   std::to_string(payoffs.size()));
      }
      for (double u : payoffs) {
        if (!std::isfinite(u)) throw GameError(where, "payoff is not finite");
      }
      nodes[h].kind = Node::Kind::kTerminal;
      nodes[h].payoffs = payoffs;
      return h;
    }

    if (spec.player.empty()) {
      throw GameError(where, "node has neither payoffs nor a player");
    }
    if (spec.actions.empty()) {
      throw GameError(where, "nonterminal node has no actions");
    }
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < spec.actions.size(); ++a) {
      const auto& action = spec.actions[a];
      if (action.label.empty()) {
        throw GameError(where + ".actions[" + std::to_string(a) + "]",
                        "action label is empty");
      }
      if (std::find(labels.begin(), labels.end(), action.label) != labels.end()) {
        throw GameError(where, "duplicate action label '" + action.label + "'");
      }
      if (action.child.size() != 1) {
        throw GameError(where + ".actions[" + std::to_string(a) + "]",
                        "dangling action '" + action.label + "' has no child");
      }
      labels.push_back(action.label);
    }

    if (spec.player == "chance") {
      has_chance = true;
      nodes[h].kind = Node::Kind::kChance;
      nodes[h].player = kChancePlayer;
      double sum = 0.0;
      for (std::size_t a = 0; a < spec.actions.size(); ++a) {
        const auto& action = spec.actions[a];
        if (!action.prob.has_value()) {
          throw GameError(where + ".actions[" + std::to_string(a) + "]",
                          "chance action '" + action.label + "' has no probability");
        }
        const double p = *action.prob;
        if (!std::isfinite(p) || p < 0.0) {
          throw GameError(where + ".actions[" + std::to_string(a) + "]",
                          "chance probability must be nonnegative");
        }
        nodes[h].chance_probs.push_back(p);
        sum += p;
      }
      if (std::abs(sum - 1.0) > kChanceSumTolerance) {
        throw GameError(where, "chance probabilities sum " + FormatReal(sum) +
                                   " ≠ 1");
      }
    } else {
      const int player = PlayerIndex(spec.player);
      if (player < 0) {
        throw GameError(where, "unknown player '" + spec.player + "'");
      }
      if (spec.infoset.empty()) {
        throw GameError(where, "decision node has no infoset id");
      }
      for (std::size_t a = 0; a < spec.actions.size(); ++a) {
        if (spec.actions[a].prob.has_value()) {
          throw GameError(where + ".actions[" + std::to_string(a) + "]",
                          "probability given for a non-chance action");
        }
      }
      auto [it, inserted] = infoset_index[player].try_emplace(
          spec.infoset, static_cast<int>(infosets[player].size()));
      if (inserted) {
        infosets[player].push_back(Infoset{spec.infoset, labels, {}});
      } else if (infosets[player][it->second].actions != labels) {
        throw GameError(where, "information set '" + spec.infoset +
                                   "' of player '" + spec.player +
                                   "' has inconsistent action sets");
      }
      nodes[h].kind = Node::Kind::kDecision;
      nodes[h].player = player;
      nodes[h].infoset = it->second;
      infosets[player][it->second].nodes.push_back(h);
    }

    node_actions[h] = labels;
    for (std::size_t a = 0; a < spec.actions.size(); ++a) {
      const int child =
          Add(spec.actions[a].child.front(), h, static_cast<int>(a), depth + 1,
              where + ".actions[" + std::to_string(a) + "].child");
      nodes[h].children.push_back(child);
    }
    return h;
  }
};

}  // namespace

GameTree GameTree::Build(std::vector<std::string> players, const NodeSpec& root) {
  if (players.empty()) throw GameError("players", "at least one player required");
  for (std::size_t i = 0; i < players.size(); ++i) {
    if (players[i].empty() || players[i] == "chance") {
      throw GameError("players", "invalid player name '" + players[i] + "'");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (players[k] == players[i]) {
        throw GameError("players", "duplicate player name '" + players[i] + "'");
      }
    }
  }
  Builder builder;
  builder.players = players;
  builder.infosets.resize(players.size());
  builder.infoset_index.resize(players.size());
  builder.Add(root, -1, -1, 0, "root");

  GameTree game;
  game.players_ = std::move(players);
  game.nodes_ = std::move(builder.nodes);
  game.node_actions_ = std::move(builder.node_actions);
  game.infosets_ = std::move(builder.infosets);
  game.has_chance_ = builder.has_chance;
  for (int h = 0; h < game.num_nodes(); ++h) {
    if (game.nodes_[h].kind == Node::Kind::kTerminal) game.terminals_.push_back(h);
  }
  return game;
}

const std::string& GameTree::player_name(int player) const {
  static const std::string kChanceName = "chance";
  if (player == kChancePlayer) return kChanceName;
  return players_.at(player);
}

int GameTree::PlayerIndex(std::string_view name) const {
  for (int i = 0; i < num_players(); ++i) {
    if (players_[i] == name) return i;
  }
  return -1;
}

const std::vector<std::string>& GameTree::actions(int h) const {
  return node_actions_.at(h);
}

const std::string& GameTree::action_label(int h, int action) const {
  return node_actions_.at(h).at(action);
}

int GameTree::FindHistory(const std::vector<std::string>& labels) const {
  int h = 0;
  for (const auto& label : labels) {
    const auto& acts = node_actions_[h];
    auto it = std::find(acts.begin(), acts.end(), label);
    if (it == acts.end()) {
      std::string path;
      for (const auto& l : labels) path += (path.empty() ? "" : ",") + l;
      throw GameError("", "unknown history <" + path + ">");
    }
    h = nodes_[h].children[it - acts.begin()];
  }
  return h;
}

std::vector<std::string> GameTree::HistoryLabels(int h) const {
  std::vector<std::string> labels;
  for (int cur = h; nodes_.at(cur).parent >= 0; cur = nodes_[cur].parent) {
    labels.push_back(node_actions_[nodes_[cur].parent][nodes_[cur].parent_action]);
  }
  std::reverse(labels.begin(), labels.end());
  return labels;
}

std::vector<RecordEntry> GameTree::Record(int player, int h) const {
  if (h < 0 || h >= num_nodes()) {
    throw GameError("", "unknown history " + std::to_string(h));
  }
  std::vector<RecordEntry> record;
  if (nodes_[h].kind == Node::Kind::kDecision && nodes_[h].player == player) {
    record.push_back({{player, nodes_[h].infoset}, std::nullopt});
  }
  for (int cur = h; nodes_[cur].parent >= 0; cur = nodes_[cur].parent) {
    const Node& parent = nodes_[nodes_[cur].parent];
    if (parent.kind == Node::Kind::kDecision && parent.player == player) {
      record.push_back({{player, parent.infoset}, nodes_[cur].parent_action});
    }
  }
  std::reverse(record.begin(), record.end());
  return record;
}

NodeSpec GameTree::NodeToSpec(int h) const {
  const Node& node = nodes_[h];
  NodeSpec spec;
  if (node.kind == Node::Kind::kTerminal) {
    spec.payoffs = node.payoffs;
    return spec;
  }
  if (node.kind == Node::Kind::kChance) {
    spec.player = "chance";
  } else {
    spec.player = players_[node.player];
    spec.infoset = infosets_[node.player][node.infoset].name;
  }
  for (std::size_t a = 0; a < node.children.size(); ++a) {
    NodeSpec::Action action;
    action.label = node_actions_[h][a];
    if (node.kind == Node::Kind::kChance) action.prob = node.chance_probs[a];
    action.child.push_back(NodeToSpec(node.children[a]));
    spec.actions.push_back(std::move(action));
  }
  return spec;
}

NodeSpec GameTree::ToSpec() const { return NodeToSpec(0); }

bool GameTree::operator==(const GameTree& other) const {
  if (players_ != other.players_ || num_nodes() != other.num_nodes() ||
      node_actions_ != other.node_actions_) {
    return false;
  }
  for (int h = 0; h < num_nodes(); ++h) {
    const Node& a = nodes_[h];
    const Node& b = other.nodes_[h];
    if (a.kind != b.kind || a.player != b.player || a.infoset != b.infoset ||
        a.parent != b.parent || a.parent_action != b.parent_action ||
        a.children != b.children || a.chance_probs != b.chance_probs ||
        a.payoffs != b.payoffs) {
      return false;
    }
  }
  for (int i = 0; i < num_players(); ++i) {
    const auto& mine = infosets_[i];
    const auto& theirs = other.infosets_[i];
    if (mine.size() != theirs.size()) return false;
    for (std::size_t j = 0; j < mine.size(); ++j) {
      if (mine[j].name != theirs[j].name || mine[j].actions != theirs[j].actions ||
          mine[j].nodes != theirs[j].nodes) {
        return false;
      }
    }
  }
  return true;
}

std::vector<RecallViolation> CheckPerfectRecall(const GameTree& game) {
  std::vector<RecallViolation> violations;
  for (int i = 0; i < game.num_players(); ++i) {
    for (int j = 0; j < game.num_infosets(i); ++j) {
      const auto& members = game.infoset({i, j}).nodes;
      std::vector<std::vector<RecordEntry>> records;
      records.reserve(members.size());
      for (int h : members) records.push_back(game.Record(i, h));
      for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          if (records[a] != records[b]) {
            violations.push_back({{i, j}, members[a], members[b]});
          }
        }
      }
    }
  }
  return violations;
}

}  // namespace qrepath
