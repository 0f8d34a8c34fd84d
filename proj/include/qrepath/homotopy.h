#ifndef QREPATH_HOMOTOPY_H_
#define QREPATH_HOMOTOPY_H_

// Smooth homotopy from an interior realization plan gamma0 (t = 1) to a Nash
// equilibrium (t -> 0) through anchored logit QRE.
//
// Each non-empty sequence carries a free variable x. With r = t^{1/kappa0},
//   y = psi1(x, r),  slack = psi2(x, r),  gamma = phi(y),
// so slack * y = t and ln gamma = 1 - slack / t for t > 0: the logarithms of
// the equilibrium system turn into slack differences. The system in
// (x, nu, t) is
//   (1-t) g^i(seq, gamma^{-i}) + t ln(gamma0(seq) / gamma0(parent))
//     + slack(seq) - slack(parent) - nu_I + zeta(seq) - t(1-t) alpha(seq) = 0
//   sum_a gamma(parent a) - gamma(parent) = 0
// with slack(empty) = 1 and gamma(empty) = 1. It has a closed-form solution
// at t = 1 and stays smooth down to t = 0.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrepath/sequence_form.h"

namespace qrepath {

// phi(v) = exp(1 - 1/v) for v > 0, else 0. C^1 on the real line.
double Phi(double v);
double PhiPrime(double v);

struct PsiValue {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double dpsi1_dv = 0.0;
  double dpsi2_dv = 0.0;
  double dpsi1_dr = 0.0;
  double dpsi2_dr = 0.0;
};

// psi1 = ((v + sqrt(v^2 + 4 tau0 r)) / 2)^kappa0,
// psi2 = ((-v + sqrt(v^2 + 4 tau0 r)) / 2)^kappa0, so psi1 psi2 = (tau0 r)^kappa0.
// The smaller base is formed without cancellation, keeping the product
// identity accurate to rounding for any v.
PsiValue Psi(double v, double r, double tau0, double kappa0);

struct TransformParams {
  static constexpr double kTau0 = 1.0;
  double kappa0 = 3.0;
  double alpha_scale = 1e-2;
  Eigen::VectorXd alpha;  // One entry per non-empty sequence; empty = zero.
};

// Uniform on [-scale, scale]^n.
Eigen::VectorXd SampleAlpha(int n, double scale, std::mt19937_64& rng);

struct PathPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd nu;
  double t = 1.0;
};

class Homotopy {
 public:
  // Throws std::invalid_argument if kappa0 <= 2, the anchor is not strictly
  // positive and flow-feasible, or alpha has the wrong length.
  Homotopy(const SequenceSpace& space, RealizationProfile anchor,
           TransformParams params);

  const SequenceSpace& space() const { return *space_; }
  const RealizationProfile& anchor() const { return anchor_; }
  const TransformParams& params() const { return params_; }
  int dimension() const { return space_->num_action_slots() + space_->num_infoset_slots(); }

  // Closed-form solution at t = 1: x = c^{-1/kappa0} - c^{1/kappa0} with
  // c = 1 - ln gamma0(seq), nu = 0.
  PathPoint StartPoint() const;

  Eigen::VectorXd Residual(const PathPoint& point) const;
  // Columns: x (n0), nu (m0), t.
  Eigen::MatrixXd Jacobian(const PathPoint& point) const;

  // Same zero set for t > 0, but each flow row below a non-empty sequence is
  // divided by gamma(parent) and evaluated through behavioral ratios
  // exp((slack(parent) - slack(seq)) / t). Stays well scaled when realization
  // probabilities underflow; the tracer works with this form.
  Eigen::VectorXd BalancedResidual(const PathPoint& point) const;
  Eigen::MatrixXd BalancedJacobian(const PathPoint& point) const;

  // Per slot.
  Eigen::VectorXd Y(const PathPoint& point) const;
  Eigen::VectorXd Slack(const PathPoint& point) const;
  RealizationProfile Gamma(const PathPoint& point) const;

  // Packs/unpacks (x, nu, t) as one vector of length dimension() + 1.
  Eigen::VectorXd Pack(const PathPoint& point) const;
  PathPoint Unpack(const Eigen::VectorXd& z) const;

 private:
  void Assemble(const PathPoint& point, bool balanced, Eigen::VectorXd* residual,
                Eigen::MatrixXd* jacobian) const;

  const SequenceSpace* space_;
  RealizationProfile anchor_;
  TransformParams params_;
  std::vector<double> anchor_log_ratio_;  // Per slot.
  std::vector<int> slot_player_;
  std::vector<int> slot_sequence_;
};

struct TraceOptions {
  double t_end = 1e-6;
  double corrector_tol = 1e-10;
  double eps_nash = 1e-6;
  double initial_step = 1e-2;
  double min_step = 1e-9;
  double max_step = 0.1;
  double grow = 1.5;
  double shrink = 0.5;
  int fast_corrector = 3;   // Grow the step at or below this many iterations.
  int slow_corrector = 8;   // Shrink above this many.
  int max_corrector = 12;
  double min_tangent_cosine = 0.9;
  double divergence_bound = 1e8;
  int max_points = 200000;
  // Endpoint rounding: gamma entries below this are treated as zero.
  double support_threshold = 1e-8;
};

enum class TraceStatus { kConverged, kStalled, kDiverged };
std::string ToString(TraceStatus status);

struct TraceResult {
  std::vector<PathPoint> path;  // Accepted points, starting at t = 1.
  PathPoint final_point;
  // After support rounding. When the rounded landing point is not an exact
  // equilibrium, a Newton polish of the t = 0 system is tried and kept if it
  // lowers the Nash gap.
  RealizationProfile final_gamma;
  MixedProfile final_sigma;        // Empty when strategies are unavailable.
  std::vector<double> final_payoffs;
  double nash_gap = 0.0;
  TraceStatus status = TraceStatus::kStalled;
  std::string message;
  int rejected_steps = 0;
  bool polished = false;
};

// Pseudo-arclength predictor-corrector from StartPoint() to t = t_end.
TraceResult Trace(const Homotopy& homotopy, const TraceOptions& options = {});

// Traces with alpha drawn from `rng` at params.alpha_scale (params.alpha is
// ignored). A stalled or diverged trace is retried with alpha halved, up to
// `max_restarts` times.
struct AnchoredRun {
  TransformParams params;  // As used by the returned trace.
  TraceResult trace;
  int restarts = 0;
};
AnchoredRun TraceWithRestarts(const SequenceSpace& space, const RealizationProfile& anchor,
                              TransformParams params, std::mt19937_64& rng,
                              const TraceOptions& options = {}, int max_restarts = 4);

// Interior realization plan whose behavioral probabilities are
// Dirichlet(1, ..., 1) at every infoset.
RealizationProfile RandomInteriorPlan(const SequenceSpace& space, std::mt19937_64& rng);

// Zeroes entries below `threshold` and restores the flow constraints top-down
// through the remaining behavioral ratios.
RealizationProfile RoundSupport(const SequenceSpace& space,
                                const RealizationProfile& gamma, double threshold);

// Path export ---------------------------------------------------------------

// Column names: "t", "lambda_r", one "<player>.<sequence>" per realization
// coordinate (e.g. "1.()", "1.(L,r)"), then one "<player>.<strategy>" per
// reduced pure strategy (e.g. "1.{L,r}") when strategies are available.
std::vector<std::string> PathColumns(const SequenceSpace& space);

// Throws std::invalid_argument on an empty path and std::runtime_error on a
// stream failure.
void WritePathCsv(const Homotopy& homotopy, const std::vector<PathPoint>& path,
                  std::ostream& out);

struct PathDocument {
  std::vector<std::string> players;
  double kappa0 = 3.0;
  double tau0 = TransformParams::kTau0;
  double alpha_scale = 0.0;
  std::vector<double> alpha;
  std::vector<PathPoint> points;
  std::optional<std::uint64_t> seed;
  std::string status;
  double nash_gap = 0.0;
};

PathDocument MakePathDocument(const Homotopy& homotopy, const TraceResult& result,
                              std::optional<std::uint64_t> seed = std::nullopt);
void WritePathJson(const PathDocument& document, std::ostream& out);
PathDocument ReadPathJson(std::istream& in);

}  // namespace qrepath

#endif  // QREPATH_HOMOTOPY_H_
