#include "qrepath/qre_system.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qrepath {
namespace {

using LogProfile = std::vector<std::vector<double>>;

// t * ln sum_k exp(values_k / t), evaluated stably.
double ScaledLogSumExp(const std::vector<double>& values, double t) {
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp((v - top) / t);
  return top + t * std::log(sum);
}

Eigen::VectorXd Residual(const QreInstance& inst, const RealizationProfile& gamma,
                         const LogProfile& log_gamma, const Eigen::VectorXd& nu) {
  const SequenceSpace& space = inst.space();
  const double t = inst.t();
  const int n0 = space.num_action_slots();
  Eigen::VectorXd r(n0 + space.num_infoset_slots());
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    const std::vector<double> payoff = SequencePayoffs(space, i, gamma);
    for (int seq = 1; seq < seqs.size(); ++seq) {
      const Sequence& s = seqs.sequences[seq];
      r(space.ActionSlot(i, seq)) =
          (1.0 - t) * payoff[seq] -
          t * (log_gamma[i][seq] - log_gamma[i][s.parent] - inst.AnchorLogRatio(i, seq)) -
          nu(space.InfosetSlot(i, s.infoset)) + Zeta(space, nu, i, seq);
    }
  }
  const std::vector<double> flow = FlowResiduals(space, gamma);
  for (int k = 0; k < space.num_infoset_slots(); ++k) r(n0 + k) = flow[k];
  return r;
}

RealizationProfile ExpProfile(const SequenceSpace& space, const LogProfile& log_gamma) {
  RealizationProfile gamma;
  gamma.plan.resize(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    for (double u : log_gamma[i]) gamma[i].push_back(std::exp(u));
  }
  return gamma;
}

// Jacobian of Residual with respect to (ln gamma slots, nu slots).
Eigen::MatrixXd LogJacobian(const QreInstance& inst, const RealizationProfile& gamma) {
  const SequenceSpace& space = inst.space();
  const double t = inst.t();
  const int n0 = space.num_action_slots();
  const int dim = n0 + space.num_infoset_slots();
  const int n = space.num_players();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);

  for (const PayoffCoefficient& c : space.coefficients()) {
    for (int i = 0; i < n; ++i) {
      if (c.sequences[i] == 0 || c.payoffs[i] == 0.0) continue;
      double reach = c.payoffs[i];
      for (int p = 0; p < n; ++p) {
        if (p != i) reach *= gamma[p][c.sequences[p]];
      }
      const int row = space.ActionSlot(i, c.sequences[i]);
      for (int q = 0; q < n; ++q) {
        if (q == i || c.sequences[q] == 0) continue;
        jac(row, space.ActionSlot(q, c.sequences[q])) += (1.0 - t) * reach;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const PlayerSequences& seqs = space.player(i);
    for (int seq = 1; seq < seqs.size(); ++seq) {
      const Sequence& s = seqs.sequences[seq];
      const int row = space.ActionSlot(i, seq);
      jac(row, row) -= t;
      if (s.parent > 0) jac(row, space.ActionSlot(i, s.parent)) += t;
      jac(row, n0 + space.InfosetSlot(i, s.infoset)) -= 1.0;
      for (int j : seqs.downstream[seq]) jac(row, n0 + space.InfosetSlot(i, j)) += 1.0;
    }
    for (int j = 0; j < seqs.num_infosets(); ++j) {
      const int row = n0 + space.InfosetSlot(i, j);
      for (int seq : seqs.extension[j]) jac(row, space.ActionSlot(i, seq)) += gamma[i][seq];
      const int parent = seqs.infoset_parent[j];
      if (parent > 0) jac(row, space.ActionSlot(i, parent)) -= gamma[i][parent];
    }
  }
  return jac;
}

LogProfile LogOf(const RealizationProfile& gamma) {
  LogProfile log_gamma(gamma.num_players());
  for (int i = 0; i < gamma.num_players(); ++i) {
    for (double g : gamma[i]) {
      if (!(g > 0.0)) throw std::invalid_argument("realization plan entry is not positive");
      log_gamma[i].push_back(std::log(g));
    }
  }
  return log_gamma;
}

}  // namespace

QreInstance::QreInstance(const SequenceSpace& space, double t,
                         std::optional<RealizationProfile> anchor)
    : space_(&space), t_(t), anchor_(std::move(anchor)) {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in (0, 1]");
  if (!anchor_.has_value()) return;
  const RealizationProfile& a = *anchor_;
  if (a.num_players() != space.num_players()) {
    throw std::invalid_argument("anchor has the wrong number of players");
  }
  anchor_log_ratio_.resize(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    if (static_cast<int>(a[i].size()) != seqs.size()) {
      throw std::invalid_argument("anchor plan has the wrong length");
    }
    anchor_log_ratio_[i].assign(seqs.size(), 0.0);
    for (int seq = 1; seq < seqs.size(); ++seq) {
      if (!(a[i][seq] > 0.0)) {
        throw std::invalid_argument("anchor must be strictly positive");
      }
      anchor_log_ratio_[i][seq] =
          std::log(a[i][seq]) - std::log(a[i][seqs.sequences[seq].parent]);
    }
  }
  if (MaxFlowResidual(space, a) > 1e-9) {
    throw std::invalid_argument("anchor violates the flow constraints");
  }
}

double Zeta(const SequenceSpace& space, const Eigen::VectorXd& nu, int player, int seq) {
  double zeta = 0.0;
  for (int j : space.player(player).downstream[seq]) {
    zeta += nu(space.InfosetSlot(player, j));
  }
  return zeta;
}

Eigen::VectorXd ResidualGammaSystem(const QreInstance& inst,
                                    const RealizationProfile& gamma,
                                    const Eigen::VectorXd& nu) {
  return Residual(inst, gamma, LogOf(gamma), nu);
}

ScaledLogGe RecursiveGe(const QreInstance& inst, int player,
                        const RealizationProfile& gamma) {
  const SequenceSpace& space = inst.space();
  const PlayerSequences& seqs = space.player(player);
  const double t = inst.t();
  const std::vector<double> payoff = SequencePayoffs(space, player, gamma);
  ScaledLogGe ge;
  ge.sequence.assign(seqs.size(), 0.0);
  ge.infoset.assign(seqs.num_infosets(), 0.0);
  auto sequence_value = [&](int seq) {
    double v = (1.0 - t) * payoff[seq] + t * inst.AnchorLogRatio(player, seq);
    for (int j : seqs.downstream[seq]) v += ge.infoset[j];
    return v;
  };
  std::vector<double> values;
  for (auto it = seqs.infoset_order.rbegin(); it != seqs.infoset_order.rend(); ++it) {
    const int j = *it;
    values.clear();
    for (int seq : seqs.extension[j]) {
      ge.sequence[seq] = sequence_value(seq);
      values.push_back(ge.sequence[seq]);
    }
    ge.infoset[j] = ScaledLogSumExp(values, t);
  }
  ge.sequence[0] = sequence_value(0);
  return ge;
}

Eigen::VectorXd RecoverMultipliers(const QreInstance& inst,
                                   const RealizationProfile& gamma) {
  const SequenceSpace& space = inst.space();
  Eigen::VectorXd nu(space.num_infoset_slots());
  for (int i = 0; i < space.num_players(); ++i) {
    const ScaledLogGe ge = RecursiveGe(inst, i, gamma);
    for (int j = 0; j < space.player(i).num_infosets(); ++j) {
      nu(space.InfosetSlot(i, j)) = ge.infoset[j];
    }
  }
  return nu;
}

RealizationProfile PerturbedResponse(const QreInstance& inst,
                                     const RealizationProfile& gamma) {
  const SequenceSpace& space = inst.space();
  const double t = inst.t();
  RealizationProfile response;
  response.plan.resize(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    const ScaledLogGe ge = RecursiveGe(inst, i, gamma);
    std::vector<double>& plan = response[i];
    plan.assign(seqs.size(), 0.0);
    plan[0] = 1.0;
    for (int j : seqs.infoset_order) {
      const double mass = plan[seqs.infoset_parent[j]];
      for (int seq : seqs.extension[j]) {
        plan[seq] = mass * std::exp((ge.sequence[seq] - ge.infoset[j]) / t);
      }
    }
  }
  return response;
}

MixedProfile SigmaE(const QreInstance& inst, const NormalForm& nf,
                    const RealizationProfile& gamma) {
  const SequenceSpace& space = inst.space();
  for (int i = 0; i < space.num_players(); ++i) {
    const auto& mine = space.strategies(i);
    if (static_cast<int>(mine.size()) != nf.num_strategies(i)) {
      throw std::invalid_argument("normal form does not match the sequence space");
    }
    for (int s = 0; s < nf.num_strategies(i); ++s) {
      if (mine[s].label != nf.strategies(i)[s].label) {
        throw std::invalid_argument("normal form does not match the sequence space");
      }
    }
  }
  const MixedProfile sigma = MixedOf(space, gamma);
  std::optional<MixedProfile> anchor;
  if (inst.anchored()) anchor = MixedOf(space, inst.anchor());
  return LogitResponse(nf, sigma, inst.rationality(), anchor);
}

FixedTSolution SolveFixedT(const QreInstance& inst, const RealizationProfile& guess,
                           const FixedTOptions& options) {
  const SequenceSpace& space = inst.space();
  const int n0 = space.num_action_slots();
  LogProfile log_gamma = LogOf(guess);
  RealizationProfile gamma = ExpProfile(space, log_gamma);
  Eigen::VectorXd nu = RecoverMultipliers(inst, gamma);
  Eigen::VectorXd r = Residual(inst, gamma, log_gamma, nu);

  FixedTSolution solution;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (r.lpNorm<Eigen::Infinity>() <= options.tolerance) break;
    const Eigen::MatrixXd jac = LogJacobian(inst, gamma);
    Eigen::VectorXd step = jac.partialPivLu().solve(-r);
    if (!step.allFinite()) {
      step = jac.completeOrthogonalDecomposition().solve(-r);
      if (!step.allFinite()) break;
    }
    const double biggest = step.head(n0).lpNorm<Eigen::Infinity>();
    if (biggest > options.max_log_step) step *= options.max_log_step / biggest;

    const double merit = r.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, alpha *= 0.5) {
      LogProfile trial_log = log_gamma;
      for (int i = 0; i < space.num_players(); ++i) {
        for (int seq = 1; seq < space.player(i).size(); ++seq) {
          trial_log[i][seq] += alpha * step(space.ActionSlot(i, seq));
        }
      }
      const Eigen::VectorXd trial_nu = nu + alpha * step.tail(space.num_infoset_slots());
      const RealizationProfile trial_gamma = ExpProfile(space, trial_log);
      const Eigen::VectorXd trial_r = Residual(inst, trial_gamma, trial_log, trial_nu);
      if (trial_r.allFinite() && trial_r.squaredNorm() < (1.0 - 1e-4 * alpha) * merit) {
        log_gamma = std::move(trial_log);
        gamma = trial_gamma;
        nu = trial_nu;
        r = trial_r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  solution.gamma = std::move(gamma);
  solution.nu = std::move(nu);
  solution.residual = r.lpNorm<Eigen::Infinity>();
  solution.iterations = iter;
  solution.converged = solution.residual <= options.tolerance;
  return solution;
}

FixedTSolution SolveFixedTByContinuation(const QreInstance& inst,
                                         const FixedTOptions& options) {
  const double target = inst.t();
  // At t = 1 the perturbed response ignores its argument and is the exact
  // solution.
  const QreInstance start = inst.WithT(1.0);
  RealizationProfile uniform = RealizationFromBehavior(inst.space(),
                                                       UniformBehavior(inst.space()));
  RealizationProfile gamma = PerturbedResponse(start, uniform);
  if (target == 1.0) return SolveFixedT(start, gamma, options);

  double t = 1.0;
  double step = 0.1;
  int total_iterations = 0;
  FixedTSolution last;
  while (t > target) {
    const double next_t = std::max(target, t - step);
    FixedTSolution trial = SolveFixedT(inst.WithT(next_t), gamma, options);
    total_iterations += trial.iterations;
    if (trial.converged) {
      t = next_t;
      gamma = trial.gamma;
      last = std::move(trial);
      if (last.iterations <= 4) step = std::min(0.25, step * 1.5);
    } else {
      step *= 0.5;
      if (step < 1e-8) {
        trial.iterations = total_iterations;
        return trial;
      }
    }
  }
  last.iterations = total_iterations;
  return last;
}

}  // namespace qrepath
