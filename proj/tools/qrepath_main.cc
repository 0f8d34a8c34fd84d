// qrepath command-line tool: solve, verify, convert.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "qrepath/game_io.h"
#include "qrepath/homotopy.h"
#include "qrepath/normal_form.h"
#include "qrepath/profile_io.h"
#include "qrepath/qre_system.h"
#include "qrepath/sequence_form.h"

namespace fs = std::filesystem;
using namespace qrepath;

namespace {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kParse = 2,
  kRecall = 3,
  kNonConvergence = 4,
};

void ConfigureLogging() {
  auto logger = spdlog::stderr_color_mt("qrepath");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::err);
  if (const char* env = std::getenv("QREPATH_LOG")) {
    const std::string level = env;
    if (level == "info") {
      spdlog::set_level(spdlog::level::info);
    } else if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else if (level != "error") {
      spdlog::warn("unknown QREPATH_LOG value '{}', using 'error'", level);
    }
  }
}

std::string Num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.10g", v);
  return buffer;
}

std::string Vec(const std::vector<double>& v) {
  std::string out = "(";
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + Num(v[k]);
  return out + ")";
}

struct LoadedGame {
  GameTree game;
  SequenceSpace space;
};

LoadedGame Load(const std::string& path) {
  GameTree game = LoadGame(path);
  std::optional<SequenceSpace> compiled;
  try {
    compiled = SequenceSpace::Compile(game);
  } catch (const RecallError& e) {
    for (const RecallViolation& v : e.violations()) {
      std::cerr << "note: player " << game.players()[v.infoset.player] << ", infoset '"
                << game.infoset(v.infoset).name << "': histories " << v.history_a << " and "
                << v.history_b << " have different records\n";
    }
    throw;
  }
  SequenceSpace space = std::move(*compiled);
  spdlog::info("loaded '{}': {} players, {} sequences, {} infosets, {} coefficients", path,
               space.num_players(), space.num_action_slots() + space.num_players(),
               space.num_infoset_slots(), space.coefficients().size());
  return {std::move(game), std::move(space)};
}

// solve ----------------------------------------------------------------------

struct SolveConfig {
  std::string game;
  std::uint64_t seed = 0;
  double kappa0 = 3.0;
  double alpha_scale = 1e-2;
  int runs = 1;
  std::string start = "uniform";
  std::optional<double> fixed_t;
  std::string out;
  std::string format = "csv";
  TraceOptions trace;
};

RealizationProfile StartPlan(const SequenceSpace& space, const SolveConfig& config,
                             std::mt19937_64& rng) {
  if (config.start == "uniform") return RealizationFromBehavior(space, UniformBehavior(space));
  if (config.start == "random") return RandomInteriorPlan(space, rng);
  ProfileFile file = LoadProfile(space, config.start);
  for (const auto& plan : file.gamma.plan) {
    for (double v : plan) {
      if (!(v > 0.0)) throw ProfileError("start profile must be strictly positive");
    }
  }
  return file.gamma;
}

struct RunOutcome {
  std::uint64_t seed = 0;
  RealizationProfile anchor;
  AnchoredRun run;
  double seconds = 0.0;
};

RunOutcome SolveOne(const SequenceSpace& space, const SolveConfig& config,
                    std::uint64_t seed) {
  const auto begin = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  RunOutcome outcome;
  outcome.anchor = StartPlan(space, config, rng);
  TransformParams params;
  params.kappa0 = config.kappa0;
  params.alpha_scale = config.alpha_scale;
  outcome.seed = seed;
  outcome.run = TraceWithRestarts(space, outcome.anchor, params, rng, config.trace);
  outcome.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return outcome;
}

bool Succeeded(const RunOutcome& o, double eps_nash) {
  return o.run.trace.status == TraceStatus::kConverged && o.run.trace.nash_gap <= eps_nash;
}

nlohmann::ordered_json RunSummary(const SequenceSpace& space, const RunOutcome& o,
                                  double eps_nash) {
  const TraceResult& r = o.run.trace;
  nlohmann::ordered_json j;
  j["seed"] = o.seed;
  j["status"] = ToString(r.status);
  j["success"] = Succeeded(o, eps_nash);
  if (!r.message.empty()) j["message"] = r.message;
  j["nash_gap"] = r.nash_gap;
  j["t_final"] = r.final_point.t;
  j["lambda_r_final"] = (1.0 - r.final_point.t) / r.final_point.t;
  j["points"] = r.path.size();
  j["rejected_steps"] = r.rejected_steps;
  j["alpha_restarts"] = o.run.restarts;
  j["wall_seconds"] = o.seconds;
  j["payoffs"] = r.final_payoffs;
  nlohmann::ordered_json gamma, sigma;
  for (int i = 0; i < space.num_players(); ++i) {
    const std::string& name = space.player_names()[i];
    nlohmann::ordered_json g;
    for (int seq = 0; seq < space.player(i).size(); ++seq) {
      g[space.SequenceLabel(i, seq)] = r.final_gamma[i][seq];
    }
    gamma[name] = std::move(g);
    if (space.has_strategies()) {
      nlohmann::ordered_json s;
      const auto& strategies = space.strategies(i);
      for (std::size_t k = 0; k < strategies.size(); ++k) {
        s[strategies[k].label] = r.final_sigma[i][k];
      }
      sigma[name] = std::move(s);
    }
  }
  j["gamma"] = std::move(gamma);
  if (space.has_strategies()) j["sigma"] = std::move(sigma);
  return j;
}

void PrintRun(const SequenceSpace& space, const RunOutcome& o, int index) {
  const TraceResult& r = o.run.trace;
  std::cout << "run " << index << " (seed " << o.seed << "): " << ToString(r.status);
  if (!r.message.empty()) std::cout << " - " << r.message;
  std::cout << "\n  nash gap     " << Num(r.nash_gap) << "\n  t final      "
            << Num(r.final_point.t) << "  (lambda_r " << Num((1.0 - r.final_point.t) / r.final_point.t)
            << ")\n  points       " << r.path.size() << " accepted, " << r.rejected_steps
            << " rejected\n  wall time    " << Num(o.seconds) << " s\n  payoffs      "
            << Vec(r.final_payoffs) << "\n";
  for (int i = 0; i < space.num_players(); ++i) {
    std::cout << "  player " << space.player_names()[i] << "\n    gamma";
    for (int seq = 0; seq < space.player(i).size(); ++seq) {
      std::cout << "  " << space.SequenceLabel(i, seq) << "=" << Num(r.final_gamma[i][seq]);
    }
    std::cout << "\n";
    if (space.has_strategies()) {
      std::cout << "    sigma";
      const auto& strategies = space.strategies(i);
      for (std::size_t k = 0; k < strategies.size(); ++k) {
        std::cout << "  " << strategies[k].label << "=" << Num(r.final_sigma[i][k]);
      }
      std::cout << "\n";
    }
  }
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

int SolveFixedT(const LoadedGame& loaded, const SolveConfig& config) {
  const SequenceSpace& space = loaded.space;
  const double t = *config.fixed_t;
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("--fixed-t must lie in (0, 1]");
  std::mt19937_64 rng(config.seed);
  const RealizationProfile anchor = StartPlan(space, config, rng);
  const QreInstance inst(space, t, anchor);
  const FixedTSolution sol = SolveFixedTByContinuation(inst);
  std::cout << "fixed t = " << Num(t) << " (lambda_r " << Num(inst.rationality()) << "): "
            << (sol.converged ? "converged" : "not converged") << ", residual "
            << Num(sol.residual) << "\n";
  for (int i = 0; i < space.num_players(); ++i) {
    std::cout << "  player " << space.player_names()[i] << " gamma";
    for (int seq = 0; seq < space.player(i).size(); ++seq) {
      std::cout << "  " << space.SequenceLabel(i, seq) << "=" << Num(sol.gamma[i][seq]);
    }
    std::cout << "\n";
  }
  if (!config.out.empty()) {
    fs::create_directories(config.out);
    ProfileFile file{sol.gamma, t, sol.nu, anchor};
    WriteFile(fs::path(config.out) / "profile.json", SerializeProfile(space, file));
  }
  return sol.converged ? kOk : kNonConvergence;
}

int Solve(const SolveConfig& config) {
  const LoadedGame loaded = Load(config.game);
  const SequenceSpace& space = loaded.space;
  if (!(config.kappa0 > 2.0)) throw std::invalid_argument("--kappa0 must exceed 2");
  if (!(config.alpha_scale >= 0.0)) throw std::invalid_argument("--alpha-scale must be >= 0");
  if (config.runs < 1) throw std::invalid_argument("--runs must be at least 1");
  if (config.fixed_t) return SolveFixedT(loaded, config);

  std::vector<std::future<RunOutcome>> futures;
  for (int k = 0; k < config.runs; ++k) {
    futures.push_back(std::async(std::launch::async, SolveOne, std::cref(space),
                                 std::cref(config), config.seed + static_cast<std::uint64_t>(k)));
  }
  std::vector<RunOutcome> outcomes;
  for (auto& f : futures) outcomes.push_back(f.get());

  bool all_ok = true;
  nlohmann::ordered_json summary;
  summary["game"] = config.game;
  summary["kappa0"] = config.kappa0;
  summary["alpha_scale"] = config.alpha_scale;
  summary["t_end"] = config.trace.t_end;
  summary["eps_nash"] = config.trace.eps_nash;
  summary["start"] = config.start;
  summary["runs"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const RunOutcome& o = outcomes[k];
    PrintRun(space, o, static_cast<int>(k));
    all_ok = all_ok && Succeeded(o, config.trace.eps_nash);
    summary["runs"].push_back(RunSummary(space, o, config.trace.eps_nash));
    spdlog::debug("run {}: alpha restarts {}", k, o.run.restarts);
  }

  if (!config.out.empty()) {
    fs::create_directories(config.out);
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      const RunOutcome& o = outcomes[k];
      const std::string stem =
          config.runs == 1 ? "path" : "path_run" + std::to_string(k);
      const Homotopy homotopy(space, o.anchor, o.run.params);
      if (config.format == "csv") {
        std::ostringstream csv;
        WritePathCsv(homotopy, o.run.trace.path, csv);
        WriteFile(fs::path(config.out) / (stem + ".csv"), csv.str());
      } else {
        std::ostringstream json;
        WritePathJson(MakePathDocument(homotopy, o.run.trace, o.seed), json);
        WriteFile(fs::path(config.out) / (stem + ".json"), json.str());
      }
    }
    WriteFile(fs::path(config.out) / "summary.json", summary.dump(2) + "\n");
  }
  return all_ok ? kOk : kNonConvergence;
}

// verify ---------------------------------------------------------------------

int Verify(const std::string& game_path, const std::string& profile_path,
           const std::string& mode, std::optional<double> t_flag, double tolerance) {
  const LoadedGame loaded = Load(game_path);
  const SequenceSpace& space = loaded.space;
  const ProfileFile file = LoadProfile(space, profile_path);
  const RealizationProfile& gamma = file.gamma;
  bool pass = true;

  if (mode == "nash") {
    const std::vector<double> payoffs = ExpectedPayoffs(space, gamma);
    double worst = 0.0;
    for (int i = 0; i < space.num_players(); ++i) {
      const double gap = BestResponseValue(space, i, gamma) - payoffs[i];
      worst = std::max(worst, gap);
      std::cout << "player " << space.player_names()[i] << ": payoff " << Num(payoffs[i])
                << ", best-response gap " << Num(gap) << "\n";
    }
    pass = worst <= tolerance;
    std::cout << "nash gap " << Num(worst) << " (tolerance " << Num(tolerance) << "): "
              << (pass ? "pass" : "fail") << "\n";
    return pass ? kOk : kOther;
  }

  const std::optional<double> t = t_flag ? t_flag : file.t;
  if (!t) throw ProfileError("qre mode needs t (--t or a 't' field in the profile)");
  const QreInstance inst(space, *t, file.anchor);
  for (const auto& plan : gamma.plan) {
    for (double v : plan) {
      if (!(v > 0.0)) throw ProfileError("qre mode needs a strictly positive profile");
    }
  }
  const Eigen::VectorXd nu = RecoverMultipliers(inst, gamma);
  const double seq_residual = ResidualGammaSystem(inst, gamma, nu).lpNorm<Eigen::Infinity>();
  pass = seq_residual <= tolerance;
  std::cout << "t = " << Num(*t) << " (lambda_r " << Num(inst.rationality()) << ")"
            << (inst.anchored() ? ", anchored" : "") << "\n";
  std::cout << "sequence-form residual (recovered multipliers): " << Num(seq_residual) << "\n";
  try {
    const NormalForm nf = NormalForm::Build(loaded.game);
    std::optional<MixedProfile> anchor;
    if (inst.anchored()) anchor = MixedOf(space, inst.anchor());
    const MixedProfile sigma = SigmaE(inst, nf, gamma);
    const double nf_residual = QreResidual(nf, sigma, inst.rationality(), anchor);
    double t_gap = 0.0;
    const RealizationProfile back = RealizationOf(space, sigma);
    for (int i = 0; i < space.num_players(); ++i) {
      for (std::size_t k = 0; k < back[i].size(); ++k) {
        t_gap = std::max(t_gap, std::abs(back[i][k] - gamma[i][k]));
      }
    }
    std::cout << "normal-form logit residual: " << Num(nf_residual) << "\n";
    std::cout << "realization mismatch of the normal-form profile: " << Num(t_gap) << "\n";
    pass = pass && nf_residual <= tolerance && t_gap <= tolerance;
  } catch (const std::length_error& e) {
    std::cout << "normal-form check skipped: " << e.what() << "\n";
  }
  std::cout << (pass ? "pass" : "fail") << " (tolerance " << Num(tolerance) << ")\n";
  return pass ? kOk : kOther;
}

// convert --------------------------------------------------------------------

std::string TupleLabel(const SequenceSpace& space, const std::vector<int>& seqs) {
  std::string out;
  for (int i = 0; i < space.num_players(); ++i) {
    out += (i ? " " : "") + space.player_names()[i] + ":" + space.SequenceLabel(i, seqs[i]);
  }
  return out;
}

int Convert(const std::string& game_path, bool canonical) {
  const LoadedGame loaded = Load(game_path);
  if (canonical) {
    std::cout << SerializeGame(loaded.game);
    return kOk;
  }
  const SequenceSpace& space = loaded.space;
  std::cout << "sequences\n";
  for (int i = 0; i < space.num_players(); ++i) {
    std::cout << "  player " << space.player_names()[i] << " (" << space.player(i).size()
              << "):";
    for (int seq = 0; seq < space.player(i).size(); ++seq) {
      std::cout << " " << space.SequenceLabel(i, seq);
    }
    std::cout << "\n";
  }
  std::cout << "payoff coefficients (" << space.coefficients().size() << ")\n";
  for (const PayoffCoefficient& c : space.coefficients()) {
    std::cout << "  " << TupleLabel(space, c.sequences) << "  ->  " << Vec(c.payoffs) << "\n";
  }

  // Grid: rows are player 1's sequences, columns the remaining players'
  // sequence tuples (first remaining player slowest).
  const int n = space.num_players();
  std::size_t columns = 1;
  for (int i = 1; i < n; ++i) columns *= space.player(i).size();
  if (n < 2 || columns > 64) return kOk;
  std::vector<std::vector<int>> tuples(columns, std::vector<int>(n, 0));
  for (std::size_t col = 0; col < columns; ++col) {
    std::size_t rest = col;
    for (int i = n - 1; i >= 1; --i) {
      tuples[col][i] = static_cast<int>(rest % space.player(i).size());
      rest /= space.player(i).size();
    }
  }
  std::cout << "table (rows: player " << space.player_names()[0] << "; '.' = no terminal)\n";
  for (std::size_t col = 0; col < columns; ++col) {
    std::cout << "  c" << col << " =";
    for (int i = 1; i < n; ++i) std::cout << " " << space.SequenceLabel(i, tuples[col][i]);
    std::cout << "\n";
  }
  for (int row = 0; row < space.player(0).size(); ++row) {
    std::cout << "  " << space.SequenceLabel(0, row) << ":";
    for (std::size_t col = 0; col < columns; ++col) {
      std::vector<int> key = tuples[col];
      key[0] = row;
      std::string cell = ".";
      for (const PayoffCoefficient& c : space.coefficients()) {
        if (c.sequences == key) cell = Vec(c.payoffs);
      }
      std::cout << " " << cell;
    }
    std::cout << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  ConfigureLogging();
  CLI::App app{"qrepath: Nash equilibria of extensive-form games by tracing the "
               "sequence-form logit QRE path"};
  app.require_subcommand(1);

  SolveConfig solve;
  auto* solve_cmd = app.add_subcommand("solve", "trace the path from a start plan to t_end");
  solve_cmd->add_option("--game", solve.game, "game file (qrepath-game v1)")->required();
  solve_cmd->add_option("--seed", solve.seed, "seed for alpha and random starts");
  solve_cmd->add_option("--kappa0", solve.kappa0, "transform exponent (> 2)");
  solve_cmd->add_option("--alpha-scale", solve.alpha_scale, "perturbation bound");
  solve_cmd->add_option("--t-end", solve.trace.t_end, "final t, in (0, 0.01]");
  solve_cmd->add_option("--corrector-tol", solve.trace.corrector_tol, "residual tolerance");
  solve_cmd->add_option("--eps-nash", solve.trace.eps_nash, "Nash gap for success");
  solve_cmd->add_option("--initial-step", solve.trace.initial_step, "initial arclength step");
  solve_cmd->add_option("--min-step", solve.trace.min_step, "stall threshold");
  solve_cmd->add_option("--max-step", solve.trace.max_step, "largest arclength step");
  solve_cmd->add_option("--runs", solve.runs, "concurrent runs with seeds seed..seed+K-1");
  solve_cmd->add_option("--start", solve.start, "uniform | random | profile FILE");
  solve_cmd->add_option("--fixed-t", solve.fixed_t, "solve at one t in (0, 1] and exit");
  solve_cmd->add_option("--out", solve.out, "output directory");
  solve_cmd->add_option("--format", solve.format, "path format")
      ->check(CLI::IsMember({"csv", "json"}));

  std::string verify_game, verify_profile, verify_mode = "nash";
  std::optional<double> verify_t;
  double verify_tol = 1e-8;
  auto* verify_cmd = app.add_subcommand("verify", "check a profile for Nash or QRE conditions");
  verify_cmd->add_option("--game", verify_game, "game file")->required();
  verify_cmd->add_option("--profile", verify_profile, "profile file")->required();
  verify_cmd->add_option("--mode", verify_mode, "nash | qre")
      ->check(CLI::IsMember({"nash", "qre"}));
  verify_cmd->add_option("--t", verify_t, "t for qre mode (overrides the profile)");
  verify_cmd->add_option("--tol", verify_tol, "pass threshold");

  std::string convert_game;
  bool convert_canonical = false;
  auto* convert_cmd = app.add_subcommand("convert", "print the sequence form");
  convert_cmd->add_option("--game", convert_game, "game file")->required();
  convert_cmd->add_flag("--canonical", convert_canonical, "print the canonical game file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kOther;
  }

  try {
    if (*solve_cmd) return Solve(solve);
    if (*verify_cmd) {
      return Verify(verify_game, verify_profile, verify_mode, verify_t, verify_tol);
    }
    if (*convert_cmd) return Convert(convert_game, convert_canonical);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const GameError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const ProfileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const RecallError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRecall;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
