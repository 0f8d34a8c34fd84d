#ifndef QREPATH_QRE_SYSTEM_H_
#define QREPATH_QRE_SYSTEM_H_

// Sequence-form equilibrium systems of the entropy-perturbed game at a
// homotopy parameter t in (0, 1]. A solution gamma of the system is the
// realization plan of a logit QRE at rationality (1 - t) / t; with an anchor
// gamma0 the logit weights are the anchor's behavioral probabilities.
//
// Residual layout (length n0 + m0, see SequenceSpace):
//   rows [0, n0):       one stationarity row per non-empty sequence seq = (I, a)
//       (1-t) g^i(seq, gamma^{-i}) - t (ln gamma(seq) - ln gamma(parent))
//       [+ t (ln gamma0(seq) - ln gamma0(parent))] - nu_I + zeta(seq)
//     where zeta(seq) is the sum of nu over the infosets directly below seq.
//   rows [n0, n0 + m0): one flow row per infoset,
//       sum_a gamma(parent a) - gamma(parent).

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrepath/normal_form.h"
#include "qrepath/sequence_form.h"

namespace qrepath {

class QreInstance {
 public:
  // Throws std::invalid_argument unless t in (0, 1] and the anchor (if any)
  // is a strictly positive, flow-feasible realization profile.
  QreInstance(const SequenceSpace& space, double t,
              std::optional<RealizationProfile> anchor = std::nullopt);

  const SequenceSpace& space() const { return *space_; }
  double t() const { return t_; }
  double rationality() const { return (1.0 - t_) / t_; }
  bool anchored() const { return anchor_.has_value(); }
  const RealizationProfile& anchor() const { return *anchor_; }
  // ln gamma0(seq) - ln gamma0(parent): log of the anchor's behavioral
  // probability. Zero for every sequence when unanchored.
  double AnchorLogRatio(int player, int seq) const {
    return anchored() ? anchor_log_ratio_[player][seq] : 0.0;
  }

  QreInstance WithT(double t) const { return QreInstance(*space_, t, anchor_); }

 private:
  const SequenceSpace* space_;
  double t_;
  std::optional<RealizationProfile> anchor_;
  std::vector<std::vector<double>> anchor_log_ratio_;
};

// zeta(seq) = sum of nu over the infosets directly below `seq`.
double Zeta(const SequenceSpace& space, const Eigen::VectorXd& nu, int player, int seq);

// Throws std::invalid_argument on a nonpositive gamma entry.
Eigen::VectorXd ResidualGammaSystem(const QreInstance& inst,
                                    const RealizationProfile& gamma,
                                    const Eigen::VectorXd& nu);

// t * ln g_e for every sequence and infoset of one player, evaluated against
// gamma^{-i}. g_e(seq) = w(seq) exp(((1-t)/t) g(seq)) prod_{I below seq} g_e(I)
// and g_e(I) = sum_a g_e(seq_I a), where w is the anchor's behavioral
// probability (1 when unanchored, and for the empty sequence). Stored scaled
// by t so values stay finite as t -> 0.
struct ScaledLogGe {
  std::vector<double> sequence;
  std::vector<double> infoset;
};
ScaledLogGe RecursiveGe(const QreInstance& inst, int player,
                        const RealizationProfile& gamma);

// nu_I = t ln g_e(I).
Eigen::VectorXd RecoverMultipliers(const QreInstance& inst,
                                   const RealizationProfile& gamma);

// The realization plan each player would choose against gamma^{-i} in the
// perturbed game: gamma'(seq a) = gamma'(seq) g_e(seq a) / g_e(I). Its
// fixed points are the system's solutions; at t = 1 it ignores gamma.
RealizationProfile PerturbedResponse(const QreInstance& inst,
                                     const RealizationProfile& gamma);

// sigma_e(gamma): normal-form logit response to sigma(gamma), weighted by the
// anchor's mixed strategy when anchored. Requires the reduced strategies of
// `space` and `nf` to coincide (same game).
MixedProfile SigmaE(const QreInstance& inst, const NormalForm& nf,
                    const RealizationProfile& gamma);

struct FixedTOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
  double max_log_step = 5.0;
};

struct FixedTSolution {
  RealizationProfile gamma;
  Eigen::VectorXd nu;
  double residual = 0.0;  // ||ResidualGammaSystem||_inf
  int iterations = 0;
  bool converged = false;
};

// Newton on (ln gamma, nu) with a backtracking line search; log variables
// keep gamma strictly positive. `guess` must be strictly positive; nu starts
// at RecoverMultipliers(guess).
FixedTSolution SolveFixedT(const QreInstance& inst, const RealizationProfile& guess,
                           const FixedTOptions& options = {});

// Solves at inst.t() by stepping t down from 1, warm-starting each stage.
FixedTSolution SolveFixedTByContinuation(const QreInstance& inst,
                                         const FixedTOptions& options = {});

}  // namespace qrepath

#endif  // QREPATH_QRE_SYSTEM_H_
