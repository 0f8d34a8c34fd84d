#include "qrepath/normal_form.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace qrepath {
namespace {

// Own parent of each infoset: the (infoset, action) the player last chose
// before reaching it, or {-1, -1} at the player's root. Read off the record
// of any member history.
std::vector<std::pair<int, int>> OwnParents(const GameTree& game, int player) {
  std::vector<std::pair<int, int>> parents;
  for (int j = 0; j < game.num_infosets(player); ++j) {
    const auto record = game.Record(player, game.infoset({player, j}).nodes.front());
    if (record.size() < 2) {
      parents.emplace_back(-1, -1);
    } else {
      const RecordEntry& last = record[record.size() - 2];
      parents.emplace_back(last.infoset.index, *last.action);
    }
  }
  return parents;
}

std::vector<std::vector<int>> Enumerate(
    const GameTree& game, int player,
    const std::vector<std::pair<int, int>>& parents, std::pair<int, int> below) {
  const int m = game.num_infosets(player);
  std::vector<std::vector<int>> result = {std::vector<int>(m, -1)};
  for (int j = 0; j < m; ++j) {
    if (parents[j] != below) continue;
    std::vector<std::vector<int>> options;
    const int k = static_cast<int>(game.infoset({player, j}).actions.size());
    for (int a = 0; a < k; ++a) {
      for (auto& partial : Enumerate(game, player, parents, {j, a})) {
        partial[j] = a;
        options.push_back(std::move(partial));
      }
    }
    std::vector<std::vector<int>> product;
    for (const auto& head : result) {
      for (const auto& tail : options) {
        std::vector<int> merged = head;
        for (int q = 0; q < m; ++q) {
          if (tail[q] >= 0) merged[q] = tail[q];
        }
        product.push_back(std::move(merged));
      }
    }
    result = std::move(product);
  }
  return result;
}

double CountPartial(const GameTree& game, int player,
                    const std::vector<std::pair<int, int>>& parents,
                    std::pair<int, int> below) {
  double count = 1.0;
  for (int j = 0; j < game.num_infosets(player); ++j) {
    if (parents[j] != below) continue;
    double options = 0.0;
    const int k = static_cast<int>(game.infoset({player, j}).actions.size());
    for (int a = 0; a < k; ++a) options += CountPartial(game, player, parents, {j, a});
    count *= options;
  }
  return count;
}

// Payoff of a pure profile by walking the tree: chance nodes average over
// their actions, decision nodes follow the owner's assigned action.
void WalkPayoff(const GameTree& game,
                const std::vector<const NormalFormStrategy*>& profile, int h,
                double weight, std::span<double> out) {
  const Node& node = game.node(h);
  switch (node.kind) {
    case Node::Kind::kTerminal:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * node.payoffs[i];
      return;
    case Node::Kind::kChance:
      for (std::size_t a = 0; a < node.children.size(); ++a) {
        if (node.chance_probs[a] > 0.0) {
          WalkPayoff(game, profile, node.children[a], weight * node.chance_probs[a], out);
        }
      }
      return;
    case Node::Kind::kDecision: {
      const int a = profile[node.player]->action[node.infoset];
      if (a < 0) throw std::logic_error("reduced strategy reached an unassigned infoset");
      WalkPayoff(game, profile, node.children[a], weight, out);
      return;
    }
  }
}

// Per player i, strategy s^i, opponent q, strategy s^q:
//   sum over profiles with those two entries of u^i(s) prod_{p != i,q} sigma^p
// Index [i][s][q][r]. Entries with q == i are left zero.
using CrossPayoffs = std::vector<std::vector<std::vector<std::vector<double>>>>;

CrossPayoffs ComputeCrossPayoffs(const NormalForm& nf, const MixedProfile& sigma) {
  const int n = nf.num_players();
  CrossPayoffs d(n);
  for (int i = 0; i < n; ++i) {
    d[i].assign(nf.num_strategies(i), std::vector<std::vector<double>>(n));
    for (int s = 0; s < nf.num_strategies(i); ++s) {
      for (int q = 0; q < n; ++q) d[i][s][q].assign(nf.num_strategies(q), 0.0);
    }
  }
  for (std::size_t index = 0; index < nf.num_profiles(); ++index) {
    const std::vector<int> profile = nf.Profile(index);
    const auto u = nf.PayoffAt(index);
    for (int i = 0; i < n; ++i) {
      for (int q = 0; q < n; ++q) {
        if (q == i) continue;
        double weight = u[i];
        for (int p = 0; p < n && weight != 0.0; ++p) {
          if (p != i && p != q) weight *= sigma[p][profile[p]];
        }
        d[i][profile[i]][q][profile[q]] += weight;
      }
    }
  }
  return d;
}

double MaxDifference(const MixedProfile& a, const MixedProfile& b) {
  double worst = 0.0;
  for (int i = 0; i < a.num_players(); ++i) {
    for (std::size_t s = 0; s < a[i].size(); ++s) {
      worst = std::max(worst, std::abs(a[i][s] - b[i][s]));
    }
  }
  return worst;
}

// Newton on F(sigma) = sigma - LogitResponse(sigma). Returns false when a
// step leaves the simplex interior or the residual stalls.
bool NewtonPolish(const NormalForm& nf, double lambda,
                  const std::optional<MixedProfile>& anchor,
                  const QreSolveOptions& options, MixedProfile& sigma, int& iterations) {
  const int n = nf.num_players();
  std::vector<int> offset(n + 1, 0);
  for (int i = 0; i < n; ++i) offset[i + 1] = offset[i] + nf.num_strategies(i);
  const int dim = offset[n];

  for (int iter = 0; iter < options.max_newton_iterations; ++iter) {
    const MixedProfile response = LogitResponse(nf, sigma, lambda, anchor);
    const double residual = MaxDifference(sigma, response);
    if (residual <= options.tolerance) return true;

    Eigen::VectorXd f(dim);
    for (int i = 0; i < n; ++i) {
      for (int s = 0; s < nf.num_strategies(i); ++s) {
        f(offset[i] + s) = sigma[i][s] - response[i][s];
      }
    }
    const CrossPayoffs d = ComputeCrossPayoffs(nf, sigma);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(dim, dim);
    for (int i = 0; i < n; ++i) {
      for (int q = 0; q < n; ++q) {
        if (q == i) continue;
        for (int r = 0; r < nf.num_strategies(q); ++r) {
          double mean = 0.0;
          for (int s = 0; s < nf.num_strategies(i); ++s) {
            mean += response[i][s] * d[i][s][q][r];
          }
          for (int s = 0; s < nf.num_strategies(i); ++s) {
            jac(offset[i] + s, offset[q] + r) -=
                lambda * response[i][s] * (d[i][s][q][r] - mean);
          }
        }
      }
    }
    const Eigen::VectorXd step = jac.fullPivLu().solve(-f);
    if (!step.allFinite()) return false;
    MixedProfile next = sigma;
    for (int i = 0; i < n; ++i) {
      for (int s = 0; s < nf.num_strategies(i); ++s) {
        next[i][s] += step(offset[i] + s);
        if (next[i][s] < 0.0) return false;
      }
    }
    const double next_residual =
        MaxDifference(next, LogitResponse(nf, next, lambda, anchor));
    if (!(next_residual < residual)) return false;
    sigma = std::move(next);
    ++iterations;
  }
  return QreResidual(nf, sigma, lambda, anchor) <= options.tolerance;
}

bool SolveStage(const NormalForm& nf, double lambda,
                const std::optional<MixedProfile>& anchor,
                const QreSolveOptions& options, MixedProfile& sigma, int& iterations) {
  // Newton straight from the warm start usually suffices along continuation.
  {
    MixedProfile direct = sigma;
    int newton_iterations = 0;
    if (NewtonPolish(nf, lambda, anchor, options, direct, newton_iterations)) {
      sigma = std::move(direct);
      iterations += newton_iterations;
      return true;
    }
  }
  MixedProfile current = sigma;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const MixedProfile response = LogitResponse(nf, current, lambda, anchor);
    const double residual = MaxDifference(current, response);
    if (residual <= options.polish_threshold) {
      MixedProfile polished = current;
      int newton_iterations = 0;
      if (NewtonPolish(nf, lambda, anchor, options, polished, newton_iterations)) {
        sigma = std::move(polished);
        iterations += iter + newton_iterations;
        return true;
      }
      if (residual <= options.tolerance) {
        sigma = std::move(current);
        iterations += iter;
        return true;
      }
    }
    for (int i = 0; i < current.num_players(); ++i) {
      for (std::size_t s = 0; s < current[i].size(); ++s) {
        current[i][s] = (1.0 - options.damping) * current[i][s] +
                        options.damping * response[i][s];
      }
    }
  }
  return false;
}

}  // namespace

NormalForm NormalForm::Build(const GameTree& game, std::size_t cap) {
  const int n = game.num_players();
  std::vector<std::vector<std::pair<int, int>>> parents(n);
  double total = 1.0;
  for (int i = 0; i < n; ++i) {
    parents[i] = OwnParents(game, i);
    total *= CountPartial(game, i, parents[i], {-1, -1});
  }
  if (total > static_cast<double>(cap)) {
    throw std::length_error("normal form has " + std::to_string(total) +
                            " pure profiles, above the cap of " + std::to_string(cap));
  }

  NormalForm nf;
  nf.strategies_.resize(n);
  for (int i = 0; i < n; ++i) {
    for (auto& action : Enumerate(game, i, parents[i], {-1, -1})) {
      NormalFormStrategy s;
      s.label = "{";
      bool first = true;
      for (int j = 0; j < game.num_infosets(i); ++j) {
        if (action[j] < 0) continue;
        s.label += (first ? "" : ",") + game.infoset({i, j}).actions[action[j]];
        first = false;
      }
      s.label += "}";
      s.action = std::move(action);
      nf.strategies_[i].push_back(std::move(s));
    }
  }
  nf.strides_.assign(n, 1);
  for (int i = n - 2; i >= 0; --i) {
    nf.strides_[i] = nf.strides_[i + 1] * nf.strategies_[i + 1].size();
  }
  nf.num_profiles_ = nf.strides_[0] * nf.strategies_[0].size();
  nf.tensor_.assign(nf.num_profiles_ * n, 0.0);
  std::vector<const NormalFormStrategy*> profile(n);
  for (std::size_t index = 0; index < nf.num_profiles_; ++index) {
    const std::vector<int> s = nf.Profile(index);
    for (int i = 0; i < n; ++i) profile[i] = &nf.strategies_[i][s[i]];
    WalkPayoff(game, profile, 0, 1.0,
               std::span<double>(nf.tensor_.data() + index * n, n));
  }
  return nf;
}

std::span<const double> NormalForm::Payoff(const std::vector<int>& profile) const {
  std::size_t index = 0;
  for (int i = 0; i < num_players(); ++i) {
    index += strides_[i] * static_cast<std::size_t>(profile.at(i));
  }
  return PayoffAt(index);
}

std::vector<int> NormalForm::Profile(std::size_t index) const {
  std::vector<int> profile(num_players());
  for (int i = 0; i < num_players(); ++i) {
    profile[i] = static_cast<int>(index / strides_[i]);
    index %= strides_[i];
  }
  return profile;
}

MixedProfile UniformMixed(const NormalForm& nf) {
  MixedProfile sigma;
  for (int i = 0; i < nf.num_players(); ++i) {
    const int k = nf.num_strategies(i);
    sigma.strategy.emplace_back(k, 1.0 / k);
  }
  return sigma;
}

std::vector<std::vector<double>> StrategyPayoffs(const NormalForm& nf,
                                                 const MixedProfile& sigma) {
  const int n = nf.num_players();
  std::vector<std::vector<double>> values(n);
  for (int i = 0; i < n; ++i) values[i].assign(nf.num_strategies(i), 0.0);
  for (std::size_t index = 0; index < nf.num_profiles(); ++index) {
    const std::vector<int> profile = nf.Profile(index);
    const auto u = nf.PayoffAt(index);
    for (int i = 0; i < n; ++i) {
      double weight = u[i];
      for (int q = 0; q < n && weight != 0.0; ++q) {
        if (q != i) weight *= sigma[q][profile[q]];
      }
      values[i][profile[i]] += weight;
    }
  }
  return values;
}

std::vector<double> ExpectedPayoffs(const NormalForm& nf, const MixedProfile& sigma) {
  const auto values = StrategyPayoffs(nf, sigma);
  std::vector<double> payoffs(nf.num_players(), 0.0);
  for (int i = 0; i < nf.num_players(); ++i) {
    for (int s = 0; s < nf.num_strategies(i); ++s) {
      payoffs[i] += sigma[i][s] * values[i][s];
    }
  }
  return payoffs;
}

MixedProfile LogitResponse(const NormalForm& nf, const MixedProfile& sigma,
                           double lambda, const std::optional<MixedProfile>& anchor) {
  const auto values = StrategyPayoffs(nf, sigma);
  MixedProfile response;
  response.strategy.resize(nf.num_players());
  for (int i = 0; i < nf.num_players(); ++i) {
    const int k = nf.num_strategies(i);
    double top = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < k; ++s) top = std::max(top, lambda * values[i][s]);
    std::vector<double>& row = response[i];
    row.resize(k);
    double total = 0.0;
    for (int s = 0; s < k; ++s) {
      const double weight = anchor.has_value() ? (*anchor)[i][s] : 1.0;
      row[s] = weight * std::exp(lambda * values[i][s] - top);
      total += row[s];
    }
    for (double& p : row) p /= total;
  }
  return response;
}

double QreResidual(const NormalForm& nf, const MixedProfile& sigma, double lambda,
                   const std::optional<MixedProfile>& anchor) {
  return MaxDifference(sigma, LogitResponse(nf, sigma, lambda, anchor));
}

QreSolution SolveLogitQre(const NormalForm& nf, double lambda,
                          const std::optional<MixedProfile>& anchor,
                          const QreSolveOptions& options) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("rationality must be finite and nonnegative");
  }
  MixedProfile start = anchor.has_value() ? *anchor : UniformMixed(nf);
  if (anchor.has_value()) {
    for (auto& row : start.strategy) {
      double total = 0.0;
      for (double p : row) total += p;
      for (double& p : row) p /= total;
    }
  }
  QreSolution solution{start, 0.0, 0};
  if (lambda == 0.0) return solution;

  MixedProfile sigma = start;
  int iterations = 0;
  if (NewtonPolish(nf, lambda, anchor, options, sigma, iterations)) {
    return {sigma, QreResidual(nf, sigma, lambda, anchor), iterations};
  }

  // Continuation in the rationality parameter from the known lambda = 0
  // solution.
  sigma = start;
  double reached = 0.0;
  double step = lambda / 8.0;
  while (reached < lambda) {
    const double target = std::min(lambda, reached + step);
    MixedProfile trial = sigma;
    if (SolveStage(nf, target, anchor, options, trial, iterations)) {
      sigma = std::move(trial);
      reached = target;
      step *= 1.5;
    } else {
      step *= 0.5;
      if (step < lambda * 1e-8) {
        const double residual = QreResidual(nf, sigma, lambda, anchor);
        throw QreNonConvergence(
            "logit QRE iteration did not converge (residual " +
                std::to_string(residual) + ")",
            residual);
      }
    }
  }
  return {sigma, QreResidual(nf, sigma, lambda, anchor), iterations};
}

double NashGap(const NormalForm& nf, const MixedProfile& sigma) {
  const auto values = StrategyPayoffs(nf, sigma);
  double gap = 0.0;
  for (int i = 0; i < nf.num_players(); ++i) {
    double payoff = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < nf.num_strategies(i); ++s) {
      payoff += sigma[i][s] * values[i][s];
      best = std::max(best, values[i][s]);
    }
    gap = std::max(gap, best - payoff);
  }
  return gap;
}

}  // namespace qrepath
