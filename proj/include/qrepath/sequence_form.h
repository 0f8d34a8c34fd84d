#ifndef QREPATH_SEQUENCE_FORM_H_
#define QREPATH_SEQUENCE_FORM_H_

// Sequence form of a perfect-recall game: per-player sequence sets, the
// infoset forest each player's sequences induce, sparse payoff coefficients
// with chance folded in, and the realization-plan / mixed-strategy maps.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrepath/game.h"

namespace qrepath {

class RecallError : public std::runtime_error {
 public:
  explicit RecallError(std::vector<RecallViolation> violations);
  const std::vector<RecallViolation>& violations() const { return violations_; }

 private:
  std::vector<RecallViolation> violations_;
};

// Sequence 0 of every player is the empty sequence.
struct Sequence {
  int infoset = -1;  // Infoset whose action ends this sequence.
  int action = -1;
  int parent = -1;   // Sequence leading to `infoset`.
  std::string label;
};

struct PlayerSequences {
  std::vector<Sequence> sequences;
  std::vector<int> infoset_parent;            // j -> sequence leading to I_j.
  std::vector<std::vector<int>> extension;    // [j][a] -> sequence index.
  std::vector<std::vector<int>> downstream;   // sequence -> infosets below it.
  std::vector<int> infoset_order;             // Parents before descendants.

  int size() const { return static_cast<int>(sequences.size()); }
  int num_infosets() const { return static_cast<int>(infoset_parent.size()); }
  int num_actions(int j) const { return static_cast<int>(extension[j].size()); }
};

// Payoff of a sequence profile (one sequence per non-chance player), already
// multiplied by the chance probabilities along the terminal histories that
// define it.
struct PayoffCoefficient {
  std::vector<int> sequences;
  std::vector<double> payoffs;
};

// Reduced pure strategy: actions at exactly those infosets reachable given
// the player's own earlier choices.
struct PureStrategy {
  std::vector<int> action;      // Per infoset; -1 where unassigned.
  std::vector<int> sequences;   // Sequences s with s(seq) = 1, ascending.
  std::string label;            // e.g. "{L,r}".
};

struct RealizationProfile {
  std::vector<std::vector<double>> plan;

  int num_players() const { return static_cast<int>(plan.size()); }
  std::vector<double>& operator[](int i) { return plan[i]; }
  const std::vector<double>& operator[](int i) const { return plan[i]; }
};

struct MixedProfile {
  std::vector<std::vector<double>> strategy;

  int num_players() const { return static_cast<int>(strategy.size()); }
  std::vector<double>& operator[](int i) { return strategy[i]; }
  const std::vector<double>& operator[](int i) const { return strategy[i]; }
};

// Behavioral strategy profile: probs[i][j][a].
using BehaviorProfile = std::vector<std::vector<std::vector<double>>>;

class SequenceSpace {
 public:
  // Reduced strategies are materialized only while every player has at most
  // this many.
  static constexpr std::size_t kDefaultStrategyCap = 100000;

  // Throws RecallError if the game lacks perfect recall.
  static SequenceSpace Compile(const GameTree& game,
                               std::size_t strategy_cap = kDefaultStrategyCap);

  int num_players() const { return static_cast<int>(players_.size()); }
  const std::vector<std::string>& player_names() const { return names_; }
  const PlayerSequences& player(int i) const { return players_.at(i); }
  const std::vector<PayoffCoefficient>& coefficients() const {
    return coefficients_;
  }

  // Stacked layout shared by the equilibrium systems: one slot per non-empty
  // sequence (n0 in total) followed by one per information set (m0).
  int num_action_slots() const { return num_action_slots_; }
  int num_infoset_slots() const { return num_infoset_slots_; }
  int ActionSlot(int i, int seq) const { return action_offset_[i] + seq - 1; }
  int InfosetSlot(int i, int j) const { return infoset_offset_[i] + j; }

  // "(L,r)" style label of a sequence; "()" for the empty sequence.
  const std::string& SequenceLabel(int i, int seq) const {
    return players_.at(i).sequences.at(seq).label;
  }
  const std::string& InfosetName(int i, int j) const {
    return infoset_names_.at(i).at(j);
  }
  const std::string& ActionLabel(int i, int j, int a) const {
    return action_labels_.at(i).at(j).at(a);
  }

  bool has_strategies() const { return has_strategies_; }
  // Throws std::length_error when the reduced strategies were not
  // materialized (cap exceeded).
  const std::vector<PureStrategy>& strategies(int i) const;

 private:
  std::vector<std::string> names_;
  std::vector<PlayerSequences> players_;
  std::vector<PayoffCoefficient> coefficients_;
  std::vector<std::vector<std::string>> infoset_names_;
  std::vector<std::vector<std::vector<std::string>>> action_labels_;
  std::vector<int> action_offset_;
  std::vector<int> infoset_offset_;
  int num_action_slots_ = 0;
  int num_infoset_slots_ = 0;
  bool has_strategies_ = false;
  std::vector<std::vector<PureStrategy>> strategies_;
};

// Realization plans --------------------------------------------------------

RealizationProfile RealizationFromBehavior(const SequenceSpace& space,
                                           const BehaviorProfile& behavior);
// Behavioral ratios gamma(seq a) / gamma(seq); unreached infosets (zero
// parent mass) get the uniform distribution.
BehaviorProfile BehaviorFromRealization(const SequenceSpace& space,
                                        const RealizationProfile& gamma);
BehaviorProfile UniformBehavior(const SequenceSpace& space);

// Per player, per infoset: sum_a gamma(seq a) - gamma(seq), stacked in
// infoset-slot order.
std::vector<double> FlowResiduals(const SequenceSpace& space,
                                  const RealizationProfile& gamma);
double MaxFlowResidual(const SequenceSpace& space, const RealizationProfile& gamma);

// gamma(sigma): mass of each sequence under the mixed profile.
RealizationProfile RealizationOf(const SequenceSpace& space,
                                 const MixedProfile& sigma);
// A mixed profile sigma with RealizationOf(sigma) == gamma, built from the
// behavioral product formula. Throws std::invalid_argument if gamma violates
// the flow constraints by more than `tolerance`.
MixedProfile MixedOf(const SequenceSpace& space, const RealizationProfile& gamma,
                     double tolerance = 1e-9);

// Payoffs -----------------------------------------------------------------

// g^i(seq, gamma^{-i}) for every sequence of player i.
std::vector<double> SequencePayoffs(const SequenceSpace& space, int player,
                                    const RealizationProfile& gamma);
// g(gamma) for every player.
std::vector<double> ExpectedPayoffs(const SequenceSpace& space,
                                    const RealizationProfile& gamma);
// max over player i's realization plans of its payoff against gamma^{-i}.
double BestResponseValue(const SequenceSpace& space, int player,
                         const RealizationProfile& gamma);
// max_i (best response value - g^i(gamma)).
double NashGap(const SequenceSpace& space, const RealizationProfile& gamma);

}  // namespace qrepath

#endif  // QREPATH_SEQUENCE_FORM_H_
