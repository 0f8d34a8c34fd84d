#include "qrepath/sequence_form.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace qrepath {
namespace {

std::string DescribeViolations(const std::vector<RecallViolation>& violations) {
  std::string text = "game does not have perfect recall (" +
                     std::to_string(violations.size()) + " violation";
  if (violations.size() != 1) text += "s";
  text += ")";
  return text;
}

using ChoiceList = std::vector<std::pair<int, int>>;

// Partial pure strategies below `seq`: one choice per infoset reachable
// from `seq`, first downstream infoset varying slowest.
std::vector<ChoiceList> PartialStrategies(const PlayerSequences& seqs, int seq) {
  std::vector<ChoiceList> result = {ChoiceList{}};
  for (int j : seqs.downstream[seq]) {
    std::vector<ChoiceList> options;
    for (int a = 0; a < seqs.num_actions(j); ++a) {
      for (ChoiceList& below : PartialStrategies(seqs, seqs.extension[j][a])) {
        below.insert(below.begin(), {j, a});
        options.push_back(std::move(below));
      }
    }
    std::vector<ChoiceList> product;
    product.reserve(result.size() * options.size());
    for (const ChoiceList& head : result) {
      for (const ChoiceList& tail : options) {
        ChoiceList combined = head;
        combined.insert(combined.end(), tail.begin(), tail.end());
        product.push_back(std::move(combined));
      }
    }
    result = std::move(product);
  }
  return result;
}

double CountStrategies(const PlayerSequences& seqs, int seq) {
  double count = 1.0;
  for (int j : seqs.downstream[seq]) {
    double options = 0.0;
    for (int a = 0; a < seqs.num_actions(j); ++a) {
      options += CountStrategies(seqs, seqs.extension[j][a]);
    }
    count *= options;
  }
  return count;
}

}  // namespace

RecallError::RecallError(std::vector<RecallViolation> violations)
    : std::runtime_error(DescribeViolations(violations)),
      violations_(std::move(violations)) {}

SequenceSpace SequenceSpace::Compile(const GameTree& game, std::size_t strategy_cap) {
  auto violations = CheckPerfectRecall(game);
  if (!violations.empty()) throw RecallError(std::move(violations));

  const int n = game.num_players();
  SequenceSpace space;
  space.names_ = game.players();
  space.players_.resize(n);
  space.infoset_names_.resize(n);
  space.action_labels_.resize(n);
  for (int i = 0; i < n; ++i) {
    PlayerSequences& seqs = space.players_[i];
    const int m = game.num_infosets(i);
    seqs.sequences.push_back(Sequence{-1, -1, -1, "()"});
    seqs.infoset_parent.assign(m, -1);
    seqs.extension.resize(m);
    for (int j = 0; j < m; ++j) {
      space.infoset_names_[i].push_back(game.infoset({i, j}).name);
      space.action_labels_[i].push_back(game.infoset({i, j}).actions);
    }
  }

  std::map<std::vector<int>, std::size_t> coefficient_index;
  std::vector<int> current(n, 0);

  // Depth-first walk carrying each player's current sequence and the chance
  // reach probability.
  auto walk = [&](auto&& self, int h, double chance) -> void {
    const Node& node = game.node(h);
    switch (node.kind) {
      case Node::Kind::kTerminal: {
        if (chance == 0.0) return;
        auto [it, inserted] =
            coefficient_index.try_emplace(current, space.coefficients_.size());
        if (inserted) {
          space.coefficients_.push_back({current, std::vector<double>(n, 0.0)});
        }
        auto& payoffs = space.coefficients_[it->second].payoffs;
        for (int i = 0; i < n; ++i) payoffs[i] += chance * node.payoffs[i];
        return;
      }
      case Node::Kind::kChance:
        for (std::size_t a = 0; a < node.children.size(); ++a) {
          self(self, node.children[a], chance * node.chance_probs[a]);
        }
        return;
      case Node::Kind::kDecision: {
        const int i = node.player;
        const int j = node.infoset;
        PlayerSequences& seqs = space.players_[i];
        if (seqs.infoset_parent[j] < 0) {
          seqs.infoset_parent[j] = current[i];
          const auto& labels = game.infoset({i, j}).actions;
          const std::string& parent_label = seqs.sequences[current[i]].label;
          const std::string prefix =
              parent_label.substr(0, parent_label.size() - 1);
          for (std::size_t a = 0; a < labels.size(); ++a) {
            seqs.extension[j].push_back(seqs.size());
            const std::string label =
                prefix + (current[i] == 0 ? "" : ",") + labels[a] + ")";
            seqs.sequences.push_back(
                Sequence{j, static_cast<int>(a), current[i], label});
          }
        }
        const int saved = current[i];
        for (std::size_t a = 0; a < node.children.size(); ++a) {
          current[i] = seqs.extension[j][a];
          self(self, node.children[a], chance);
        }
        current[i] = saved;
        return;
      }
    }
  };
  walk(walk, 0, 1.0);

  for (int i = 0; i < n; ++i) {
    PlayerSequences& seqs = space.players_[i];
    seqs.downstream.assign(seqs.size(), {});
    for (int j = 0; j < seqs.num_infosets(); ++j) {
      seqs.downstream[seqs.infoset_parent[j]].push_back(j);
    }
    std::deque<int> queue = {0};
    while (!queue.empty()) {
      const int seq = queue.front();
      queue.pop_front();
      for (int j : seqs.downstream[seq]) {
        seqs.infoset_order.push_back(j);
        for (int next : seqs.extension[j]) queue.push_back(next);
      }
    }
    space.action_offset_.push_back(space.num_action_slots_);
    space.infoset_offset_.push_back(space.num_infoset_slots_);
    space.num_action_slots_ += seqs.size() - 1;
    space.num_infoset_slots_ += seqs.num_infosets();
  }

  space.has_strategies_ = true;
  for (int i = 0; i < n; ++i) {
    if (CountStrategies(space.players_[i], 0) > static_cast<double>(strategy_cap)) {
      space.has_strategies_ = false;
    }
  }
  if (space.has_strategies_) {
    space.strategies_.resize(n);
    for (int i = 0; i < n; ++i) {
      const PlayerSequences& seqs = space.players_[i];
      for (const ChoiceList& choices : PartialStrategies(seqs, 0)) {
        PureStrategy s;
        s.action.assign(seqs.num_infosets(), -1);
        s.sequences.push_back(0);
        for (auto [j, a] : choices) {
          s.action[j] = a;
          s.sequences.push_back(seqs.extension[j][a]);
        }
        std::sort(s.sequences.begin(), s.sequences.end());
        s.label = "{";
        bool first = true;
        for (int j = 0; j < seqs.num_infosets(); ++j) {
          if (s.action[j] < 0) continue;
          s.label += (first ? "" : ",") + space.action_labels_[i][j][s.action[j]];
          first = false;
        }
        s.label += "}";
        space.strategies_[i].push_back(std::move(s));
      }
    }
  }
  return space;
}

const std::vector<PureStrategy>& SequenceSpace::strategies(int i) const {
  if (!has_strategies_) {
    throw std::length_error("reduced strategies exceed the enumeration cap");
  }
  return strategies_.at(i);
}

RealizationProfile RealizationFromBehavior(const SequenceSpace& space,
                                           const BehaviorProfile& behavior) {
  RealizationProfile gamma;
  gamma.plan.resize(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    std::vector<double>& plan = gamma[i];
    plan.assign(seqs.size(), 0.0);
    plan[0] = 1.0;
    for (int j : seqs.infoset_order) {
      const double mass = plan[seqs.infoset_parent[j]];
      for (int a = 0; a < seqs.num_actions(j); ++a) {
        plan[seqs.extension[j][a]] = mass * behavior.at(i).at(j).at(a);
      }
    }
  }
  return gamma;
}

BehaviorProfile BehaviorFromRealization(const SequenceSpace& space,
                                        const RealizationProfile& gamma) {
  BehaviorProfile behavior(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    behavior[i].resize(seqs.num_infosets());
    for (int j = 0; j < seqs.num_infosets(); ++j) {
      const int k = seqs.num_actions(j);
      double total = 0.0;
      for (int seq : seqs.extension[j]) total += gamma[i][seq];
      auto& probs = behavior[i][j];
      if (total > 0.0) {
        for (int seq : seqs.extension[j]) probs.push_back(gamma[i][seq] / total);
      } else {
        probs.assign(k, 1.0 / k);
      }
    }
  }
  return behavior;
}

BehaviorProfile UniformBehavior(const SequenceSpace& space) {
  BehaviorProfile behavior(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    for (int j = 0; j < seqs.num_infosets(); ++j) {
      const int k = seqs.num_actions(j);
      behavior[i].emplace_back(k, 1.0 / k);
    }
  }
  return behavior;
}

std::vector<double> FlowResiduals(const SequenceSpace& space,
                                  const RealizationProfile& gamma) {
  std::vector<double> residuals(space.num_infoset_slots(), 0.0);
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    for (int j = 0; j < seqs.num_infosets(); ++j) {
      double sum = -gamma[i][seqs.infoset_parent[j]];
      for (int seq : seqs.extension[j]) sum += gamma[i][seq];
      residuals[space.InfosetSlot(i, j)] = sum;
    }
  }
  return residuals;
}

double MaxFlowResidual(const SequenceSpace& space, const RealizationProfile& gamma) {
  double worst = 0.0;
  for (int i = 0; i < space.num_players(); ++i) {
    worst = std::max(worst, std::abs(gamma[i][0] - 1.0));
  }
  for (double r : FlowResiduals(space, gamma)) worst = std::max(worst, std::abs(r));
  return worst;
}

RealizationProfile RealizationOf(const SequenceSpace& space, const MixedProfile& sigma) {
  if (sigma.num_players() != space.num_players()) {
    throw std::invalid_argument("mixed profile has the wrong number of players");
  }
  RealizationProfile gamma;
  gamma.plan.resize(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    const auto& strategies = space.strategies(i);
    if (sigma[i].size() != strategies.size()) {
      throw std::invalid_argument("mixed strategy of player " + std::to_string(i) +
                                  " has " + std::to_string(sigma[i].size()) +
                                  " entries, expected " +
                                  std::to_string(strategies.size()));
    }
    gamma[i].assign(space.player(i).size(), 0.0);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      for (int seq : strategies[s].sequences) gamma[i][seq] += sigma[i][s];
    }
  }
  return gamma;
}

MixedProfile MixedOf(const SequenceSpace& space, const RealizationProfile& gamma,
                     double tolerance) {
  if (gamma.num_players() != space.num_players()) {
    throw std::invalid_argument("realization profile has the wrong number of players");
  }
  for (int i = 0; i < space.num_players(); ++i) {
    if (static_cast<int>(gamma[i].size()) != space.player(i).size()) {
      throw std::invalid_argument("realization plan of player " + std::to_string(i) +
                                  " has the wrong length");
    }
  }
  if (MaxFlowResidual(space, gamma) > tolerance) {
    throw std::invalid_argument("realization plan violates the flow constraints");
  }
  const BehaviorProfile behavior = BehaviorFromRealization(space, gamma);
  MixedProfile sigma;
  sigma.strategy.resize(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    for (const PureStrategy& s : space.strategies(i)) {
      double p = 1.0;
      for (int j = 0; j < static_cast<int>(s.action.size()); ++j) {
        if (s.action[j] >= 0) p *= behavior[i][j][s.action[j]];
      }
      sigma[i].push_back(p);
    }
  }
  return sigma;
}

std::vector<double> SequencePayoffs(const SequenceSpace& space, int player,
                                    const RealizationProfile& gamma) {
  std::vector<double> values(space.player(player).size(), 0.0);
  const int n = space.num_players();
  for (const PayoffCoefficient& c : space.coefficients()) {
    double weight = c.payoffs[player];
    for (int q = 0; q < n && weight != 0.0; ++q) {
      if (q != player) weight *= gamma[q][c.sequences[q]];
    }
    values[c.sequences[player]] += weight;
  }
  return values;
}

std::vector<double> ExpectedPayoffs(const SequenceSpace& space,
                                    const RealizationProfile& gamma) {
  const int n = space.num_players();
  std::vector<double> payoffs(n, 0.0);
  for (const PayoffCoefficient& c : space.coefficients()) {
    double reach = 1.0;
    for (int q = 0; q < n; ++q) reach *= gamma[q][c.sequences[q]];
    for (int i = 0; i < n; ++i) payoffs[i] += reach * c.payoffs[i];
  }
  return payoffs;
}

double BestResponseValue(const SequenceSpace& space, int player,
                         const RealizationProfile& gamma) {
  const PlayerSequences& seqs = space.player(player);
  const std::vector<double> payoff = SequencePayoffs(space, player, gamma);
  std::vector<double> best(seqs.num_infosets(), 0.0);
  auto value = [&](int seq) {
    double v = payoff[seq];
    for (int j : seqs.downstream[seq]) v += best[j];
    return v;
  };
  for (auto it = seqs.infoset_order.rbegin(); it != seqs.infoset_order.rend(); ++it) {
    const int j = *it;
    double top = -std::numeric_limits<double>::infinity();
    for (int seq : seqs.extension[j]) top = std::max(top, value(seq));
    best[j] = top;
  }
  return value(0);
}

double NashGap(const SequenceSpace& space, const RealizationProfile& gamma) {
  const std::vector<double> payoffs = ExpectedPayoffs(space, gamma);
  double gap = 0.0;
  for (int i = 0; i < space.num_players(); ++i) {
    gap = std::max(gap, BestResponseValue(space, i, gamma) - payoffs[i]);
  }
  return gap;
}

}  // namespace qrepath
