#include "qrepath/homotopy.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace qrepath {

double Phi(double v) { return v > 0.0 ? std::exp(1.0 - 1.0 / v) : 0.0; }

double PhiPrime(double v) {
  if (v <= 0.0) return 0.0;
  const double phi = std::exp(1.0 - 1.0 / v);
  return phi == 0.0 ? 0.0 : phi / (v * v);
}

PsiValue Psi(double v, double r, double tau0, double kappa0) {
  PsiValue out;
  const double c = tau0 * r;
  const double s = std::sqrt(v * v + 4.0 * c);
  if (s == 0.0) return out;  // v = 0, r = 0: both bases vanish.
  double w1;
  double w2;
  if (v >= 0.0) {
    w1 = 0.5 * (v + s);
    w2 = c / w1;
  } else {
    w2 = 0.5 * (s - v);
    w1 = c / w2;
  }
  out.psi1 = std::pow(w1, kappa0);
  out.psi2 = std::pow(w2, kappa0);
  out.dpsi1_dv = kappa0 * out.psi1 / s;
  out.dpsi2_dv = -kappa0 * out.psi2 / s;
  out.dpsi1_dr = kappa0 * std::pow(w1, kappa0 - 1.0) * tau0 / s;
  out.dpsi2_dr = kappa0 * std::pow(w2, kappa0 - 1.0) * tau0 / s;
  return out;
}

Eigen::VectorXd SampleAlpha(int n, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Eigen::VectorXd alpha(n);
  for (int k = 0; k < n; ++k) alpha(k) = scale > 0.0 ? dist(rng) : 0.0;
  return alpha;
}

namespace {

struct SlotState {
  double y = 0.0;
  double slack = 0.0;
  double gamma = 0.0;
  double dgamma_dx = 0.0;
  double dslack_dx = 0.0;
  double dgamma_dt = 0.0;
  double dslack_dt = 0.0;
};

}  // namespace

Homotopy::Homotopy(const SequenceSpace& space, RealizationProfile anchor,
                   TransformParams params)
    : space_(&space), anchor_(std::move(anchor)), params_(std::move(params)) {
  if (!(params_.kappa0 > 2.0)) throw std::invalid_argument("kappa0 must exceed 2");
  const int n0 = space.num_action_slots();
  if (params_.alpha.size() == 0) params_.alpha = Eigen::VectorXd::Zero(n0);
  if (params_.alpha.size() != n0) {
    throw std::invalid_argument("alpha must have one entry per non-empty sequence");
  }
  if (anchor_.num_players() != space.num_players()) {
    throw std::invalid_argument("anchor has the wrong number of players");
  }
  anchor_log_ratio_.assign(n0, 0.0);
  slot_player_.assign(n0, 0);
  slot_sequence_.assign(n0, 0);
  for (int i = 0; i < space.num_players(); ++i) {
    const PlayerSequences& seqs = space.player(i);
    if (static_cast<int>(anchor_[i].size()) != seqs.size()) {
      throw std::invalid_argument("anchor plan has the wrong length");
    }
    for (int seq = 1; seq < seqs.size(); ++seq) {
      if (!(anchor_[i][seq] > 0.0)) {
        throw std::invalid_argument("anchor must be strictly positive");
      }
      const int k = space.ActionSlot(i, seq);
      slot_player_[k] = i;
      slot_sequence_[k] = seq;
      anchor_log_ratio_[k] = std::log(anchor_[i][seq]) -
                             std::log(anchor_[i][seqs.sequences[seq].parent]);
    }
  }
  if (MaxFlowResidual(space, anchor_) > 1e-9) {
    throw std::invalid_argument("anchor violates the flow constraints");
  }
}

PathPoint Homotopy::StartPoint() const {
  const int n0 = space_->num_action_slots();
  PathPoint point;
  point.x.resize(n0);
  point.nu = Eigen::VectorXd::Zero(space_->num_infoset_slots());
  point.t = 1.0;
  const double kappa = params_.kappa0;
  for (int k = 0; k < n0; ++k) {
    const double c = 1.0 - std::log(anchor_[slot_player_[k]][slot_sequence_[k]]);
    point.x(k) = std::pow(c, -1.0 / kappa) - std::pow(c, 1.0 / kappa);
  }
  return point;
}

Eigen::VectorXd Homotopy::Y(const PathPoint& point) const {
  const double r = std::pow(point.t, 1.0 / params_.kappa0);
  Eigen::VectorXd y(point.x.size());
  for (int k = 0; k < point.x.size(); ++k) {
    y(k) = Psi(point.x(k), r, TransformParams::kTau0, params_.kappa0).psi1;
  }
  return y;
}

Eigen::VectorXd Homotopy::Slack(const PathPoint& point) const {
  const double r = std::pow(point.t, 1.0 / params_.kappa0);
  Eigen::VectorXd slack(point.x.size());
  for (int k = 0; k < point.x.size(); ++k) {
    slack(k) = Psi(point.x(k), r, TransformParams::kTau0, params_.kappa0).psi2;
  }
  return slack;
}

RealizationProfile Homotopy::Gamma(const PathPoint& point) const {
  const Eigen::VectorXd y = Y(point);
  RealizationProfile gamma;
  gamma.plan.resize(space_->num_players());
  for (int i = 0; i < space_->num_players(); ++i) {
    gamma[i].assign(space_->player(i).size(), 1.0);
    for (int seq = 1; seq < space_->player(i).size(); ++seq) {
      gamma[i][seq] = Phi(y(space_->ActionSlot(i, seq)));
    }
  }
  return gamma;
}

Eigen::VectorXd Homotopy::Pack(const PathPoint& point) const {
  const int n0 = space_->num_action_slots();
  const int m0 = space_->num_infoset_slots();
  Eigen::VectorXd z(n0 + m0 + 1);
  z << point.x, point.nu, point.t;
  return z;
}

PathPoint Homotopy::Unpack(const Eigen::VectorXd& z) const {
  const int n0 = space_->num_action_slots();
  const int m0 = space_->num_infoset_slots();
  return {z.head(n0), z.segment(n0, m0), z(n0 + m0)};
}

namespace {

std::vector<SlotState> EvaluateSlots(const PathPoint& point, double kappa) {
  const double t = point.t;
  const double r = std::pow(t, 1.0 / kappa);
  const double dr_dt = t > 0.0 ? r / (kappa * t) : 0.0;
  std::vector<SlotState> slots(point.x.size());
  for (int k = 0; k < point.x.size(); ++k) {
    const PsiValue psi = Psi(point.x(k), r, TransformParams::kTau0, kappa);
    SlotState& s = slots[k];
    s.y = psi.psi1;
    s.slack = psi.psi2;
    s.gamma = Phi(s.y);
    const double dphi = PhiPrime(s.y);
    s.dgamma_dx = dphi * psi.dpsi1_dv;
    s.dslack_dx = psi.dpsi2_dv;
    s.dgamma_dt = dphi * psi.dpsi1_dr * dr_dt;
    s.dslack_dt = psi.dpsi2_dr * dr_dt;
  }
  return slots;
}

}  // namespace

void Homotopy::Assemble(const PathPoint& point, bool balanced, Eigen::VectorXd* residual,
                        Eigen::MatrixXd* jacobian) const {
  const SequenceSpace& space = *space_;
  const int n = space.num_players();
  const int n0 = space.num_action_slots();
  const int dim = dimension();
  const int tcol = dim;
  const double t = point.t;
  const std::vector<SlotState> slots = EvaluateSlots(point, params_.kappa0);

  RealizationProfile gamma;
  gamma.plan.resize(n);
  for (int i = 0; i < n; ++i) {
    gamma[i].assign(space.player(i).size(), 1.0);
    for (int seq = 1; seq < space.player(i).size(); ++seq) {
      gamma[i][seq] = slots[space.ActionSlot(i, seq)].gamma;
    }
  }

  if (residual != nullptr) residual->setZero(dim);
  if (jacobian != nullptr) jacobian->setZero(dim, dim + 1);
  Eigen::VectorXd* r = residual;
  Eigen::MatrixXd* jac = jacobian;

  // Payoff terms (1-t) g^i(seq, gamma^{-i}), one coefficient at a time.
  for (const PayoffCoefficient& c : space.coefficients()) {
    for (int i = 0; i < n; ++i) {
      if (c.sequences[i] == 0 || c.payoffs[i] == 0.0) continue;
      const int row = space.ActionSlot(i, c.sequences[i]);
      double reach = c.payoffs[i];
      for (int p = 0; p < n; ++p) {
        if (p != i) reach *= gamma[p][c.sequences[p]];
      }
      if (r) (*r)(row) += (1.0 - t) * reach;
      if (!jac) continue;
      (*jac)(row, tcol) -= reach;
      for (int q = 0; q < n; ++q) {
        if (q == i || c.sequences[q] == 0) continue;
        double partial = c.payoffs[i];
        for (int p = 0; p < n; ++p) {
          if (p != i && p != q) partial *= gamma[p][c.sequences[p]];
        }
        const int col = space.ActionSlot(q, c.sequences[q]);
        (*jac)(row, col) += (1.0 - t) * partial * slots[col].dgamma_dx;
        (*jac)(row, tcol) += (1.0 - t) * partial * slots[col].dgamma_dt;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    const PlayerSequences& seqs = space.player(i);
    for (int seq = 1; seq < seqs.size(); ++seq) {
      const Sequence& s = seqs.sequences[seq];
      const int k = space.ActionSlot(i, seq);
      const int p = s.parent == 0 ? -1 : space.ActionSlot(i, s.parent);
      const int own = n0 + space.InfosetSlot(i, s.infoset);
      if (r) {
        double zeta = 0.0;
        for (int j : seqs.downstream[seq]) zeta += point.nu(space.InfosetSlot(i, j));
        (*r)(k) += t * anchor_log_ratio_[k] + slots[k].slack -
                   (p < 0 ? 1.0 : slots[p].slack) - point.nu(own - n0) + zeta -
                   t * (1.0 - t) * params_.alpha(k);
      }
      if (jac) {
        (*jac)(k, k) += slots[k].dslack_dx;
        (*jac)(k, tcol) += slots[k].dslack_dt + anchor_log_ratio_[k] -
                           (1.0 - 2.0 * t) * params_.alpha(k);
        if (p >= 0) {
          (*jac)(k, p) -= slots[p].dslack_dx;
          (*jac)(k, tcol) -= slots[p].dslack_dt;
        }
        (*jac)(k, own) -= 1.0;
        for (int j : seqs.downstream[seq]) (*jac)(k, n0 + space.InfosetSlot(i, j)) += 1.0;
      }
    }

    for (int j = 0; j < seqs.num_infosets(); ++j) {
      const int row = n0 + space.InfosetSlot(i, j);
      const int parent = seqs.infoset_parent[j];
      const int p = parent == 0 ? -1 : space.ActionSlot(i, parent);
      if (!balanced || p < 0) {
        // sum_a gamma(parent a) - gamma(parent)
        for (int seq : seqs.extension[j]) {
          const int k = space.ActionSlot(i, seq);
          if (r) (*r)(row) += slots[k].gamma;
          if (jac) {
            (*jac)(row, k) += slots[k].dgamma_dx;
            (*jac)(row, tcol) += slots[k].dgamma_dt;
          }
        }
        if (r) (*r)(row) -= p < 0 ? 1.0 : slots[p].gamma;
        if (jac && p >= 0) {
          (*jac)(row, p) -= slots[p].dgamma_dx;
          (*jac)(row, tcol) -= slots[p].dgamma_dt;
        }
        continue;
      }
      // Divided by gamma(parent): sum_a exp((slack(parent) - slack(parent a)) / t) - 1.
      if (r) (*r)(row) -= 1.0;
      for (int seq : seqs.extension[j]) {
        const int k = space.ActionSlot(i, seq);
        const double gap = slots[p].slack - slots[k].slack;
        const double ratio = std::exp(gap / t);
        if (r) (*r)(row) += ratio;
        if (jac) {
          (*jac)(row, k) -= ratio * slots[k].dslack_dx / t;
          (*jac)(row, p) += ratio * slots[p].dslack_dx / t;
          (*jac)(row, tcol) +=
              ratio * ((slots[p].dslack_dt - slots[k].dslack_dt) / t - gap / (t * t));
        }
      }
    }
  }
}

Eigen::VectorXd Homotopy::Residual(const PathPoint& point) const {
  Eigen::VectorXd r;
  Assemble(point, false, &r, nullptr);
  return r;
}

Eigen::MatrixXd Homotopy::Jacobian(const PathPoint& point) const {
  Eigen::MatrixXd jac;
  Assemble(point, false, nullptr, &jac);
  return jac;
}

Eigen::VectorXd Homotopy::BalancedResidual(const PathPoint& point) const {
  Eigen::VectorXd r;
  Assemble(point, true, &r, nullptr);
  return r;
}

Eigen::MatrixXd Homotopy::BalancedJacobian(const PathPoint& point) const {
  Eigen::MatrixXd jac;
  Assemble(point, true, nullptr, &jac);
  return jac;
}

std::string ToString(TraceStatus status) {
  switch (status) {
    case TraceStatus::kConverged:
      return "converged";
    case TraceStatus::kStalled:
      return "stalled";
    case TraceStatus::kDiverged:
      return "diverged";
  }
  return "unknown";
}

RealizationProfile RoundSupport(const SequenceSpace& space,
                                const RealizationProfile& gamma, double threshold) {
  RealizationProfile clamped = gamma;
  for (auto& plan : clamped.plan) {
    for (std::size_t k = 1; k < plan.size(); ++k) {
      if (plan[k] < threshold) plan[k] = 0.0;
    }
  }
  return RealizationFromBehavior(space, BehaviorFromRealization(space, clamped));
}

namespace {

// Unit vector spanning the null space of the N x (N+1) Jacobian.
Eigen::VectorXd NullDirection(const Eigen::MatrixXd& jac) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(jac.transpose());
  const Eigen::MatrixXd q = qr.householderQ();
  return q.col(jac.cols() - 1);
}

// Tangent continuing `previous`: solves [J; previous^T] v = e_last.
std::optional<Eigen::VectorXd> Tangent(const Eigen::MatrixXd& jac,
                                       const Eigen::VectorXd& previous) {
  const int dim = static_cast<int>(jac.cols());
  Eigen::MatrixXd augmented(dim, dim);
  augmented << jac, previous.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  rhs(dim - 1) = 1.0;
  Eigen::VectorXd v = augmented.partialPivLu().solve(rhs);
  if (!v.allFinite() || v.norm() == 0.0) return std::nullopt;
  return v / v.norm();
}

struct Correction {
  bool ok = false;
  Eigen::VectorXd z;
  int iterations = 0;
};

// Newton on [H(z); tangent . (z - predicted)] = 0.
Correction Correct(const Homotopy& h, const Eigen::VectorXd& predicted,
                   const Eigen::VectorXd& tangent, const TraceOptions& options) {
  const int dim = h.dimension();
  Correction out;
  out.z = predicted;
  for (int it = 0; it <= options.max_corrector; ++it) {
    const double t = out.z(dim);
    if (!(t > 0.0 && t <= 1.0 + 1e-9)) return out;
    const PathPoint point = h.Unpack(out.z);
    const Eigen::VectorXd r = h.BalancedResidual(point);
    if (!r.allFinite()) return out;
    if (r.lpNorm<Eigen::Infinity>() <= options.corrector_tol) {
      out.ok = true;
      out.iterations = it;
      return out;
    }
    if (it == options.max_corrector) break;
    Eigen::MatrixXd augmented(dim + 1, dim + 1);
    augmented << h.BalancedJacobian(point), tangent.transpose();
    Eigen::VectorXd rhs(dim + 1);
    rhs << -r, -tangent.dot(out.z - predicted);
    const Eigen::VectorXd dz = augmented.partialPivLu().solve(rhs);
    if (!dz.allFinite()) return out;
    out.z += dz;
  }
  return out;
}

// Newton in (x, nu) at fixed t.
Correction CorrectFixedT(const Homotopy& h, Eigen::VectorXd z, double t,
                         const TraceOptions& options) {
  const int dim = h.dimension();
  Correction out;
  z(dim) = t;
  for (int it = 0; it <= 2 * options.max_corrector; ++it) {
    const PathPoint point = h.Unpack(z);
    const Eigen::VectorXd r = h.BalancedResidual(point);
    if (!r.allFinite()) break;
    if (r.lpNorm<Eigen::Infinity>() <= options.corrector_tol) {
      out.ok = true;
      out.iterations = it;
      break;
    }
    const Eigen::MatrixXd jac = h.BalancedJacobian(point).leftCols(dim);
    const Eigen::VectorXd dz = jac.partialPivLu().solve(-r);
    if (!dz.allFinite()) break;
    z.head(dim) += dz;
  }
  out.z = std::move(z);
  return out;
}

// Newton on the system at t = 0 from the landing point, with minimum-norm
// steps since the limit system is singular on equilibrium components.
std::optional<PathPoint> PolishAtZero(const Homotopy& h, PathPoint point,
                                      const TraceOptions& options) {
  const int dim = h.dimension();
  point.t = 0.0;
  Eigen::VectorXd z = h.Pack(point);
  for (int it = 0; it < options.max_corrector; ++it) {
    const PathPoint current = h.Unpack(z);
    const Eigen::VectorXd r = h.Residual(current);
    if (!r.allFinite()) return std::nullopt;
    if (r.lpNorm<Eigen::Infinity>() <= options.corrector_tol) return current;
    const Eigen::MatrixXd jac = h.Jacobian(current).leftCols(dim);
    const Eigen::VectorXd dz = jac.completeOrthogonalDecomposition().solve(-r);
    if (!dz.allFinite()) return std::nullopt;
    z.head(dim) += dz;
  }
  return std::nullopt;
}

void Finish(const Homotopy& h, const TraceOptions& options, TraceResult& result) {
  const SequenceSpace& space = h.space();
  result.final_point = result.path.back();
  result.final_gamma =
      RoundSupport(space, h.Gamma(result.final_point), options.support_threshold);
  result.nash_gap = NashGap(space, result.final_gamma);
  if (result.status == TraceStatus::kConverged && result.nash_gap > 0.0) {
    if (const auto limit = PolishAtZero(h, result.final_point, options)) {
      RealizationProfile polished =
          RoundSupport(space, h.Gamma(*limit), options.support_threshold);
      const double gap = NashGap(space, polished);
      if (gap < result.nash_gap) {
        result.final_gamma = std::move(polished);
        result.nash_gap = gap;
        result.polished = true;
      }
    }
  }
  if (space.has_strategies()) result.final_sigma = MixedOf(space, result.final_gamma);
  result.final_payoffs = ExpectedPayoffs(space, result.final_gamma);
}

}  // namespace

TraceResult Trace(const Homotopy& h, const TraceOptions& options) {
  if (!(options.t_end > 0.0 && options.t_end <= 0.01)) {
    throw std::invalid_argument("t_end must lie in (0, 0.01]");
  }
  if (!(options.min_step > 0.0 && options.min_step <= options.initial_step &&
        options.initial_step <= options.max_step)) {
    throw std::invalid_argument("step bounds must satisfy 0 < min <= initial <= max");
  }
  const int dim = h.dimension();
  TraceResult result;
  const PathPoint start = h.StartPoint();
  result.path.push_back(start);

  Eigen::VectorXd z = h.Pack(start);
  Eigen::VectorXd tangent = NullDirection(h.BalancedJacobian(start));
  if (tangent(dim) > 0.0) tangent = -tangent;
  double step = options.initial_step;

  auto reject = [&](const char* why) {
    ++result.rejected_steps;
    step *= options.shrink;
    if (step < options.min_step) {
      result.status = TraceStatus::kStalled;
      result.message = std::string("step size fell below the minimum (") + why +
                       ") at t = " + std::to_string(z(dim));
      return true;
    }
    return false;
  };

  while (true) {
    if (static_cast<int>(result.path.size()) >= options.max_points) {
      result.status = TraceStatus::kStalled;
      result.message = "point budget exhausted at t = " + std::to_string(z(dim));
      break;
    }
    const Eigen::VectorXd predicted = z + step * tangent;

    if (predicted(dim) <= options.t_end && tangent(dim) < 0.0) {
      // The step crosses t_end: land on t = t_end along the tangent and
      // correct there.
      const double reach = (z(dim) - options.t_end) / -tangent(dim);
      const Correction landing =
          CorrectFixedT(h, z + reach * tangent, options.t_end, options);
      if (landing.ok) {
        result.path.push_back(h.Unpack(landing.z));
        result.status = TraceStatus::kConverged;
        break;
      }
      if (reject("landing at t_end failed")) break;
      continue;
    }

    const Correction corrected = Correct(h, predicted, tangent, options);
    if (!corrected.ok) {
      if (reject("corrector failed")) break;
      continue;
    }
    if ((corrected.z - predicted).norm() > 0.5 * step + 1e-12) {
      if (reject("corrector drifted")) break;
      continue;
    }
    const auto next_tangent =
        Tangent(h.BalancedJacobian(h.Unpack(corrected.z)), tangent);
    if (!next_tangent || next_tangent->dot(tangent) < options.min_tangent_cosine) {
      if (reject("tangent turned too sharply")) break;
      continue;
    }

    z = corrected.z;
    tangent = *next_tangent;
    result.path.push_back(h.Unpack(z));
    if (z.head(dim).lpNorm<Eigen::Infinity>() > options.divergence_bound) {
      result.status = TraceStatus::kDiverged;
      result.message = "path left the bounded region at t = " + std::to_string(z(dim));
      break;
    }
    if (corrected.iterations <= options.fast_corrector) {
      step = std::min(options.max_step, step * options.grow);
    } else if (corrected.iterations > options.slow_corrector) {
      step = std::max(options.min_step, step * options.shrink);
    }
  }
  Finish(h, options, result);
  return result;
}

AnchoredRun TraceWithRestarts(const SequenceSpace& space, const RealizationProfile& anchor,
                              TransformParams params, std::mt19937_64& rng,
                              const TraceOptions& options, int max_restarts) {
  params.alpha = SampleAlpha(space.num_action_slots(), params.alpha_scale, rng);
  AnchoredRun run;
  while (true) {
    const Homotopy homotopy(space, anchor, params);
    run.params = params;
    run.trace = Trace(homotopy, options);
    if (run.trace.status == TraceStatus::kConverged || run.restarts >= max_restarts) break;
    ++run.restarts;
    params.alpha *= 0.5;
    params.alpha_scale *= 0.5;
  }
  return run;
}

RealizationProfile RandomInteriorPlan(const SequenceSpace& space, std::mt19937_64& rng) {
  std::exponential_distribution<double> draw(1.0);
  BehaviorProfile behavior = UniformBehavior(space);
  for (auto& player : behavior) {
    for (auto& probs : player) {
      double total = 0.0;
      for (double& p : probs) {
        // Guard against the (measure-zero) zero draw.
        p = std::max(draw(rng), 1e-300);
        total += p;
      }
      for (double& p : probs) p /= total;
    }
  }
  return RealizationFromBehavior(space, behavior);
}

// Export --------------------------------------------------------------------

std::vector<std::string> PathColumns(const SequenceSpace& space) {
  std::vector<std::string> columns = {"t", "lambda_r"};
  for (int i = 0; i < space.num_players(); ++i) {
    for (int seq = 0; seq < space.player(i).size(); ++seq) {
      columns.push_back(space.player_names()[i] + "." + space.SequenceLabel(i, seq));
    }
  }
  if (space.has_strategies()) {
    for (int i = 0; i < space.num_players(); ++i) {
      for (const PureStrategy& s : space.strategies(i)) {
        columns.push_back(space.player_names()[i] + "." + s.label);
      }
    }
  }
  return columns;
}

namespace {

// RFC 4180 quoting; sequence labels such as "(L,r)" contain commas.
std::string QuoteCsv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string FormatDouble(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

void WritePathCsv(const Homotopy& h, const std::vector<PathPoint>& path,
                  std::ostream& out) {
  if (path.empty()) throw std::invalid_argument("cannot export an empty path");
  const SequenceSpace& space = h.space();
  const auto columns = PathColumns(space);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << (c == 0 ? "" : ",") << QuoteCsv(columns[c]);
  }
  out << '\n';
  for (const PathPoint& point : path) {
    const RealizationProfile gamma = h.Gamma(point);
    out << FormatDouble(point.t) << ',' << FormatDouble((1.0 - point.t) / point.t);
    for (const auto& plan : gamma.plan) {
      for (double g : plan) out << ',' << FormatDouble(g);
    }
    if (space.has_strategies()) {
      const MixedProfile sigma = MixedOf(space, gamma, 1e-6);
      for (const auto& row : sigma.strategy) {
        for (double p : row) out << ',' << FormatDouble(p);
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed to write path CSV");
}

PathDocument MakePathDocument(const Homotopy& h, const TraceResult& result,
                              std::optional<std::uint64_t> seed) {
  PathDocument doc;
  doc.players = h.space().player_names();
  doc.kappa0 = h.params().kappa0;
  doc.alpha_scale = h.params().alpha_scale;
  doc.alpha.assign(h.params().alpha.data(),
                   h.params().alpha.data() + h.params().alpha.size());
  doc.points = result.path;
  doc.seed = seed;
  doc.status = ToString(result.status);
  doc.nash_gap = result.nash_gap;
  return doc;
}

namespace {

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd ToEigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void WritePathJson(const PathDocument& doc, std::ostream& out) {
  if (doc.points.empty()) throw std::invalid_argument("cannot export an empty path");
  nlohmann::ordered_json json;
  json["format"] = "qrepath-path v1";
  json["players"] = doc.players;
  nlohmann::ordered_json config;
  config["kappa0"] = doc.kappa0;
  config["tau0"] = doc.tau0;
  config["alpha_scale"] = doc.alpha_scale;
  config["alpha"] = doc.alpha;
  if (doc.seed.has_value()) config["seed"] = *doc.seed;
  json["config"] = std::move(config);
  json["status"] = doc.status;
  json["nash_gap"] = doc.nash_gap;
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const PathPoint& p : doc.points) {
    nlohmann::ordered_json entry;
    entry["t"] = p.t;
    entry["x"] = ToStd(p.x);
    entry["nu"] = ToStd(p.nu);
    points.push_back(std::move(entry));
  }
  json["points"] = std::move(points);
  out << json.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed to write path JSON");
}

PathDocument ReadPathJson(std::istream& in) {
  const nlohmann::json json = nlohmann::json::parse(in);
  if (json.value("format", "") != "qrepath-path v1") {
    throw std::runtime_error("not a qrepath-path v1 document");
  }
  PathDocument doc;
  doc.players = json.at("players").get<std::vector<std::string>>();
  const auto& config = json.at("config");
  doc.kappa0 = config.at("kappa0").get<double>();
  doc.tau0 = config.at("tau0").get<double>();
  doc.alpha_scale = config.at("alpha_scale").get<double>();
  doc.alpha = config.at("alpha").get<std::vector<double>>();
  if (config.contains("seed")) doc.seed = config["seed"].get<std::uint64_t>();
  doc.status = json.at("status").get<std::string>();
  doc.nash_gap = json.at("nash_gap").get<double>();
  for (const auto& entry : json.at("points")) {
    PathPoint p;
    p.t = entry.at("t").get<double>();
    p.x = ToEigen(entry.at("x").get<std::vector<double>>());
    p.nu = ToEigen(entry.at("nu").get<std::vector<double>>());
    doc.points.push_back(std::move(p));
  }
  return doc;
}

}  // namespace qrepath
