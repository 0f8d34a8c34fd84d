#ifndef QREPATH_GAME_H_
#define QREPATH_GAME_H_

// Finite extensive-form games: tree representation, structural validation,
// player records, and the perfect-recall check.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace qrepath {

// Player index used for chance nodes.
inline constexpr int kChancePlayer = -1;

// Tolerance on the sum of chance probabilities at a node.
inline constexpr double kChanceSumTolerance = 1e-12;

// Raised for structurally invalid games (bad arity, inconsistent infosets,
// chance probabilities not summing to one, ...). `where` is a path into the
// game description such as "root.actions[1].child".
class GameError : public std::runtime_error {
 public:
  GameError(const std::string& where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what),
        where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct InfosetId {
  int player = 0;
  int index = 0;
  bool operator==(const InfosetId&) const = default;
};

// Declarative node description, the in-memory mirror of the game file.
// Exactly one of three shapes: decision (player name + infoset id + actions),
// chance (player "chance" + actions with probabilities), or terminal
// (payoffs only).
struct NodeSpec {
  struct Action {
    std::string label;
    std::optional<double> prob;
    std::vector<NodeSpec> child;  // Holds exactly one node; empty = dangling.
  };
  std::string player;
  std::string infoset;
  std::vector<Action> actions;
  std::optional<std::vector<double>> payoffs;
};

// Convenience constructors used by tests and built-in examples.
NodeSpec Leaf(std::vector<double> payoffs);
NodeSpec Decision(std::string player, std::string infoset,
                  std::vector<std::pair<std::string, NodeSpec>> actions);
NodeSpec Chance(std::vector<std::tuple<std::string, double, NodeSpec>> actions);

struct Node {
  enum class Kind { kDecision, kChance, kTerminal };
  Kind kind = Kind::kTerminal;
  int player = kChancePlayer;  // Owner; kChancePlayer for chance/terminal.
  int infoset = -1;            // Index into the owner's infosets.
  int parent = -1;
  int parent_action = -1;      // Action index taken at the parent.
  int depth = 0;
  std::vector<int> children;
  std::vector<double> chance_probs;  // Chance nodes only.
  std::vector<double> payoffs;       // Terminal nodes only.
};

struct Infoset {
  std::string name;
  std::vector<std::string> actions;
  std::vector<int> nodes;  // Member histories in canonical order.
};

// One entry of a player's record R_i(h): an information set visited along h
// and the action taken there. The last entry has no action when h itself is
// one of the player's decision nodes.
struct RecordEntry {
  InfosetId infoset;
  std::optional<int> action;
  bool operator==(const RecordEntry&) const = default;
};

struct RecallViolation {
  InfosetId infoset;
  int history_a = -1;
  int history_b = -1;
};

// Immutable game tree. Histories are numbered in depth-first order with the
// root at index 0 and children visited in declared action order.
class GameTree {
 public:
  // Validates `root` and builds the tree. Throws GameError on structural
  // problems. Perfect recall is not enforced here; see CheckPerfectRecall.
  static GameTree Build(std::vector<std::string> players, const NodeSpec& root);

  int num_players() const { return static_cast<int>(players_.size()); }
  const std::vector<std::string>& players() const { return players_; }
  const std::string& player_name(int player) const;
  int PlayerIndex(std::string_view name) const;  // -1 if unknown.

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int h) const { return nodes_.at(h); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& terminals() const { return terminals_; }
  bool has_chance() const { return has_chance_; }

  int num_infosets(int player) const {
    return static_cast<int>(infosets_.at(player).size());
  }
  const Infoset& infoset(InfosetId id) const {
    return infosets_.at(id.player).at(id.index);
  }
  const std::vector<Infoset>& infosets(int player) const {
    return infosets_.at(player);
  }

  // Action labels available at history h (empty for terminals).
  const std::vector<std::string>& actions(int h) const;
  const std::string& action_label(int h, int action) const;

  // Resolves a history given as a list of action labels from the root.
  // Throws GameError("unknown history") if any label does not match.
  int FindHistory(const std::vector<std::string>& labels) const;
  // Action labels from the root to h.
  std::vector<std::string> HistoryLabels(int h) const;

  // R_i(h). Throws GameError for an out-of-range history.
  std::vector<RecordEntry> Record(int player, int h) const;

  // Canonical recursive description; Build(players(), ToSpec()) reproduces
  // this tree exactly.
  NodeSpec ToSpec() const;

  bool operator==(const GameTree& other) const;

 private:
  std::vector<std::string> players_;
  std::vector<Node> nodes_;
  std::vector<int> terminals_;
  std::vector<std::vector<Infoset>> infosets_;
  std::vector<std::vector<std::string>> node_actions_;
  bool has_chance_ = false;

  NodeSpec NodeToSpec(int h) const;
};

// Empty iff every pair of histories sharing an information set has identical
// records for its owner. Violations are reported once per (infoset, pair),
// ordered by player, infoset, then history indices.
std::vector<RecallViolation> CheckPerfectRecall(const GameTree& game);

}  // namespace qrepath

#endif  // QREPATH_GAME_H_
