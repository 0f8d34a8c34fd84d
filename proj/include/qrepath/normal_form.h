#ifndef QREPATH_NORMAL_FORM_H_
#define QREPATH_NORMAL_FORM_H_

// Brute-force reduced normal form. Strategies are enumerated from the tree
// and payoffs evaluated by walking the tree for every pure profile, so this
// module shares no code path with the sequence form it is used to check.
// Desk scale only: construction refuses games whose profile count exceeds a
// cap.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrepath/game.h"
#include "qrepath/sequence_form.h"

namespace qrepath {

struct NormalFormStrategy {
  std::vector<int> action;  // Per infoset of the owner; -1 where unassigned.
  std::string label;
};

class NormalForm {
 public:
  static constexpr std::size_t kDefaultProfileCap = 1000000;

  // Throws std::length_error if the number of pure profiles exceeds `cap`.
  static NormalForm Build(const GameTree& game,
                          std::size_t cap = kDefaultProfileCap);

  int num_players() const { return static_cast<int>(strategies_.size()); }
  int num_strategies(int i) const {
    return static_cast<int>(strategies_.at(i).size());
  }
  const std::vector<NormalFormStrategy>& strategies(int i) const {
    return strategies_.at(i);
  }
  std::size_t num_profiles() const { return num_profiles_; }

  // Payoff vector u(s) of a pure profile (one strategy index per player).
  std::span<const double> Payoff(const std::vector<int>& profile) const;
  // Same, addressed by flat profile index (player 0 varies slowest).
  std::span<const double> PayoffAt(std::size_t index) const {
    return {tensor_.data() + index * num_players(),
            static_cast<std::size_t>(num_players())};
  }
  // Decodes a flat profile index into per-player strategy indices.
  std::vector<int> Profile(std::size_t index) const;

 private:
  std::vector<std::vector<NormalFormStrategy>> strategies_;
  std::vector<std::size_t> strides_;
  std::size_t num_profiles_ = 0;
  std::vector<double> tensor_;
};

MixedProfile UniformMixed(const NormalForm& nf);

// u^i(s^i, sigma^{-i}) for every player and strategy.
std::vector<std::vector<double>> StrategyPayoffs(const NormalForm& nf,
                                                 const MixedProfile& sigma);
std::vector<double> ExpectedPayoffs(const NormalForm& nf, const MixedProfile& sigma);

// Logit response to sigma at rationality `lambda`:
//   sigma'^i(s) ∝ anchor^i(s) exp(lambda u^i(s, sigma^{-i}))
// with a uniform anchor when none is given.
MixedProfile LogitResponse(const NormalForm& nf, const MixedProfile& sigma,
                           double lambda,
                           const std::optional<MixedProfile>& anchor = std::nullopt);

struct QreSolveOptions {
  double damping = 0.5;
  double tolerance = 1e-10;
  double polish_threshold = 1e-4;
  int max_iterations = 5000;  // Damped iterations per continuation stage.
  int max_newton_iterations = 50;
};

struct QreSolution {
  MixedProfile sigma;
  double residual = 0.0;  // ||sigma - LogitResponse(sigma)||_inf
  int iterations = 0;
};

class QreNonConvergence : public std::runtime_error {
 public:
  QreNonConvergence(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Fixed point of LogitResponse. Newton from the anchor (or uniform profile);
// if that fails, continuation in the rationality from zero, each stage
// trying Newton and then damped iteration with a Newton polish once the
// residual drops below `polish_threshold`.
QreSolution SolveLogitQre(const NormalForm& nf, double lambda,
                          const std::optional<MixedProfile>& anchor = std::nullopt,
                          const QreSolveOptions& options = {});

double QreResidual(const NormalForm& nf, const MixedProfile& sigma, double lambda,
                   const std::optional<MixedProfile>& anchor = std::nullopt);

// max_i (max_s u^i(s, sigma^{-i}) - u^i(sigma)).
double NashGap(const NormalForm& nf, const MixedProfile& sigma);

}  // namespace qrepath

#endif  // QREPATH_NORMAL_FORM_H_
