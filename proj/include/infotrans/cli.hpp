#pragma once

/// \file cli.hpp
/// Orchestration behind the `infotrans` command-line tool: run configuration,
/// the five commands, report files and the exit-status contract.
///
/// Exit status: 0 success, 2 usage, 3 parse error, 4 validation error,
/// 5 numerical error, 6 output I/O failure, 1 anything else.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infotrans/baltrunc.hpp"
#include "infotrans/itransfer.hpp"
#include "infotrans/klmetrics.hpp"
#include "infotrans/model_io.hpp"
#include "infotrans/report.hpp"

namespace infotrans::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitStatus : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitParse = 3,
  kExitValidation = 4,
  kExitNumerical = 5,
  kExitIo = 6,
};

inline int exit_status(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kParse: return kExitParse;
    case ErrorCategory::kValidation: return kExitValidation;
    case ErrorCategory::kNumerical: return kExitNumerical;
  }
  return kExitInternal;
}

/// Single-line diagnostic: `infotrans: error kind=<Kind> status=<n> reason="..."`.
inline std::string diagnostic(const std::string& kind, int status, const std::string& reason) {
  std::string clean;
  for (char c : reason) {
    if (c == '\n' || c == '\r') {
      clean += ' ';
    } else if (c == '"') {
      clean += '\'';
    } else {
      clean += c;
    }
  }
  return "infotrans: error kind=" + kind + " status=" + std::to_string(status) + " reason=\"" +
         clean + "\"";
}

enum class Command { kAnalyze, kHankel, kReduce, kCrossing, kCompare };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::kAnalyze: return "analyze";
    case Command::kHankel: return "hankel";
    case Command::kReduce: return "reduce";
    case Command::kCrossing: return "crossing";
    case Command::kCompare: return "compare";
  }
  return "?";
}

struct RunConfig {
  Command command = Command::kAnalyze;
  std::string model_path;
  /// analyze: frozen subset (may be empty). crossing: the two competing
  /// freezes (default the first and second state).
  std::vector<StateSubset> subsets;
  /// analyze: optional state-to-state target instead of the output.
  std::optional<StateSubset> target;
  std::optional<std::vector<double>> frozen_value;
  std::size_t order = 1;
  std::size_t horizon = 50;
  /// Extra horizons for reduce (the main horizon is always included).
  std::vector<std::size_t> horizons;
  bool asymptotic = false;
  GramianForm gramian_form = GramianForm::kDiscrete;
  KlOptions kl{};
  std::size_t jobs = 1;
  std::string output_path;
  std::string json_path;
  bool timestamp = false;
};

/// Parses "3,4" or "3 4" as one-based state labels. An empty string is the
/// empty subset.
inline StateSubset parse_subset(const std::string& text, std::size_t state_dim) {
  std::vector<std::size_t> idx;
  std::string token;
  std::istringstream in(text);
  auto flush = [&] {
    if (token.empty()) return;
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size()) fail(ErrorKind::kInvalidSubset, "bad state label '" + token + "'");
    if (v < 1 || static_cast<std::size_t>(v) > state_dim) {
      fail(ErrorKind::kIndexOutOfRange, "state label " + token + " outside 1.." +
                                            std::to_string(state_dim));
    }
    idx.push_back(static_cast<std::size_t>(v - 1));
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '(' || c == ')' || c == '{' || c == '}') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  return StateSubset::from_unordered(std::move(idx));
}

namespace detail {

inline std::string mode_name(KlMode m) {
  return m == KlMode::kFilter ? "filter" : "exact-observation";
}

inline std::string innovation_name(InnovationNoise n) {
  return n == InnovationNoise::kOutputNoise ? "output-noise" : "paper-bbt";
}

inline std::string indexing_name(IndexConvention i) {
  return i == IndexConvention::kCurrent ? "current" : "lagged";
}

inline Report base_report(const RunConfig& cfg, const LinearGaussianModel& model) {
  Report r;
  r.set("tool", "infotrans");
  r.set("version", kVersion);
  r.set("command", to_string(cfg.command));
  r.set("model", model.name());
  r.set("model_file", std::filesystem::path(cfg.model_path).filename().string());
  r.set("states", std::to_string(model.state_dim()));
  if (cfg.timestamp) {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    r.set("timestamp", buf);
  }
  return r;
}

inline void echo_kl_options(Report& r, const KlOptions& kl) {
  r.set("mode", mode_name(kl.mode));
  r.set("innovation", innovation_name(kl.filter.innovation));
  r.set("correlated_noise", kl.filter.correlated_noise ? "true" : "false");
  r.set("indexing", indexing_name(kl.indexing));
  r.set("tolerance", format_double(kl.steady.tolerance));
  r.set("max_iterations", std::to_string(kl.steady.max_iterations));
}

inline Cell count(std::size_t n) { return static_cast<long long>(n); }

inline std::vector<std::size_t> ranks_of(const std::vector<std::size_t>& order) {
  std::vector<std::size_t> rank(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

inline void analyze(const RunConfig& cfg, const LinearGaussianModel& model, Report& r) {
  const StateSubset source = cfg.subsets.empty() ? StateSubset{} : cfg.subsets.front();
  r.set("frozen", source.label());
  ItTrajectory traj;
  if (cfg.target) {
    r.set("target", cfg.target->label());
    traj = it_state_to_state(model, source, *cfg.target, cfg.horizon);
  } else {
    r.set("target", "output");
    echo_kl_options(r, cfg.kl);
    std::optional<Vector> value;
    if (cfg.frozen_value) {
      value = Eigen::Map<const Vector>(cfg.frozen_value->data(),
                                       static_cast<Eigen::Index>(cfg.frozen_value->size()));
    }
    traj = it_state_to_output(model, source, cfg.horizon, cfg.kl, value);
  }
  Table& t = r.add_table("trajectory", {"step", "value"});
  for (std::size_t n = 0; n < traj.values.size(); ++n) {
    t.add_row({count(n), traj.values[n]});
  }
  if (cfg.asymptotic && !cfg.target) {
    Table& s = r.add_table("summary", {"quantity", "value"});
    s.add_row({std::string("asymptotic"), it_state_to_output_asymptotic(model, source, cfg.kl)});
  }
}

inline void hankel_table(const LinearGaussianModel& model, GramianForm form, Report& r) {
  const GramianPair g = gramians(model, form);
  const HankelSpectrum hsv = hankel_singular_values(g);
  Table& t = r.add_table("hankel", {"index", "value"});
  for (std::size_t i = 0; i < hsv.size(); ++i) t.add_row({count(i + 1), hsv[i]});
  Table& res = r.add_table("gramian_residuals", {"gramian", "residual"});
  res.add_row({std::string("controllability"), g.controllability_residual});
  res.add_row({std::string("observability"), g.observability_residual});
}

inline ReductionRanking ranking_for(const RunConfig& cfg, const LinearGaussianModel& model) {
  std::vector<std::size_t> horizons = cfg.horizons;
  horizons.push_back(cfg.horizon);
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  return rank_reductions(model, cfg.order, horizons, RankingOptions{cfg.kl, cfg.jobs});
}

inline void reduce(const RunConfig& cfg, const LinearGaussianModel& model, Report& r) {
  r.set("order", std::to_string(cfg.order));
  r.set("horizon", std::to_string(cfg.horizon));
  echo_kl_options(r, cfg.kl);
  const ReductionRanking ranking = ranking_for(cfg, model);
  const auto& cands = ranking.candidates;

  Table& asym = r.add_table("asymptotic", {"subset", "value"});
  for (const auto& c : cands) asym.add_row({c.subset.label(), c.asymptotic});

  std::vector<std::string> cols{"step"};
  for (const auto& c : cands) cols.push_back(c.subset.label());
  Table& traj = r.add_table("trajectories", cols);
  for (std::size_t n = 0; n <= ranking.horizon(); ++n) {
    std::vector<Cell> row{count(n)};
    for (const auto& c : cands) row.emplace_back(c.transfer.values[n]);
    traj.add_row(std::move(row));
  }

  const std::vector<std::size_t> order = ranking.order_asymptotic();
  Table& rank = r.add_table("ranking", {"rank", "subset", "asymptotic", "at_horizon"});
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& c = cands[order[pos]];
    rank.add_row({count(pos + 1), c.subset.label(), c.asymptotic, c.transfer.values[cfg.horizon]});
  }

  Table& best = r.add_table("best_at_horizon", {"horizon", "subset", "value"});
  for (std::size_t i = 0; i < ranking.horizons.size(); ++i) {
    const std::size_t h = ranking.horizons[i];
    const auto& c = cands[ranking.order_at(h).front()];
    best.add_row({count(h), ranking.best_at_horizon[i].label(), c.transfer.values[h]});
  }
}

inline void crossing(const RunConfig& cfg, const LinearGaussianModel& model, Report& r) {
  std::vector<StateSubset> pair = cfg.subsets;
  if (pair.empty()) pair = {StateSubset{0}, StateSubset{1}};
  if (pair.size() != 2) {
    fail(ErrorKind::kInvalidArgument, "crossing compares exactly two frozen subsets");
  }
  r.set("alpha", pair[0].label());
  r.set("beta", pair[1].label());
  r.set("horizon", std::to_string(cfg.horizon));

  const bool decoupled_pair = pair[0] == StateSubset{0} && pair[1] == StateSubset{1};
  std::optional<DecoupledParams> params;
  if (decoupled_pair) {
    try {
      params = DecoupledParams::from_model(model);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInvalidArgument) throw;
    }
  }

  std::optional<KlTrajectory> alpha, beta;
  CrossingResult result;
  if (params) {
    r.set("method", "decoupled");
    r.set("indexing", indexing_name(cfg.kl.indexing));
    alpha = nstep_kl_decoupled(*params, FrozenState::kFirst, cfg.horizon, cfg.kl.indexing);
    beta = nstep_kl_decoupled(*params, FrozenState::kSecond, cfg.horizon, cfg.kl.indexing);
    result = crossing_analysis(*alpha, *beta, *params, cfg.kl.indexing);
  } else {
    r.set("method", "general");
    echo_kl_options(r, cfg.kl);
    alpha = it_state_to_output(model, pair[0], cfg.horizon, cfg.kl).values;
    beta = it_state_to_output(model, pair[1], cfg.horizon, cfg.kl).values;
    CrossingAsymptotes asym{it_state_to_output_asymptotic(model, pair[0], cfg.kl),
                            it_state_to_output_asymptotic(model, pair[1], cfg.kl), 0.0};
    if (pair[0].size() == 1) {
      const auto i = static_cast<Eigen::Index>(pair[0][0]);
      asym.a11 = model.A()(i, i);
    }
    result = crossing_analysis(*alpha, *beta, asym);
  }

  Table& t = r.add_table("trajectories", {"step", "alpha", "beta", "difference"});
  for (std::size_t n = 0; n < alpha->size(); ++n) {
    t.add_row({count(n), (*alpha)[n], (*beta)[n], (*alpha)[n] - (*beta)[n]});
  }

  Table& s = r.add_table("crossing", {"quantity", "value"});
  auto opt = [](const auto& v) -> Cell {
    if (!v) return std::monostate{};
    return Cell(*v);
  };
  s.add_row({std::string("crossing_step"),
             result.crossing_step ? Cell(static_cast<long long>(*result.crossing_step))
                                  : Cell(std::monostate{})});
  s.add_row({std::string("crossing_time"), opt(result.crossing_time)});
  s.add_row({std::string("alpha0"), result.alpha0});
  s.add_row({std::string("beta0"), result.beta0});
  s.add_row({std::string("alpha_inf"), result.alpha_inf});
  s.add_row({std::string("beta_inf"), result.beta_inf});
  s.add_row({std::string("lower_bound"), opt(result.lower_bound)});
  s.add_row({std::string("upper_bound"), opt(result.upper_bound)});
  s.add_row({std::string("assumption1_holds"), count(result.assumption1_holds ? 1 : 0)});
  s.add_row({std::string("bounds_consistent"), count(result.bounds_consistent() ? 1 : 0)});
}

inline void compare(const RunConfig& cfg, const LinearGaussianModel& model, Report& r) {
  r.set("order", std::to_string(cfg.order));
  r.set("horizon", std::to_string(cfg.horizon));
  echo_kl_options(r, cfg.kl);
  RunConfig single = cfg;
  single.horizons.clear();
  const ReductionRanking ranking = ranking_for(single, model);
  const auto asym_rank = ranks_of(ranking.order_asymptotic());
  const auto step_rank = ranks_of(ranking.order_at(cfg.horizon));
  Table& t = r.add_table("comparison", {"subset", "asymptotic", "asymptotic_rank", "at_horizon",
                                        "horizon_rank"});
  for (std::size_t i = 0; i < ranking.candidates.size(); ++i) {
    const auto& c = ranking.candidates[i];
    t.add_row({c.subset.label(), c.asymptotic, count(asym_rank[i]),
               c.transfer.values[cfg.horizon], count(step_rank[i])});
  }
  hankel_table(model, GramianForm::kDiscrete, r);
}

}  // namespace detail

/// Loads the model, runs the command and returns the report. Every command
/// treats the model as the truth, so it must be Schur stable.
inline Report run(const RunConfig& cfg) {
  if (cfg.model_path.empty()) fail(ErrorKind::kInvalidArgument, "model path is empty");
  const LinearGaussianModel model = load_model(cfg.model_path);
  require_schur_stable(model);
  Report r = detail::base_report(cfg, model);
  switch (cfg.command) {
    case Command::kAnalyze: detail::analyze(cfg, model, r); break;
    case Command::kHankel:
      r.set("gramians", cfg.gramian_form == GramianForm::kDiscrete ? "discrete" : "continuous");
      detail::hankel_table(model, cfg.gramian_form, r);
      break;
    case Command::kReduce: detail::reduce(cfg, model, r); break;
    case Command::kCrossing: detail::crossing(cfg, model, r); break;
    case Command::kCompare: detail::compare(cfg, model, r); break;
  }
  return r;
}

/// Relative paths land under INFOTRANS_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("INFOTRANS_OUTPUT_DIR"); dir && *dir) {
      return std::filesystem::path(dir) / p;
    }
  }
  return p;
}

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

/// Writes the CSV to output_path (stdout when empty) and the JSON mirror to
/// json_path when set.
inline void emit(const Report& report, const RunConfig& cfg, std::ostream& stdout_stream) {
  const std::string csv = to_csv(report);
  if (cfg.output_path.empty()) {
    stdout_stream << csv;
  } else {
    write_file(resolve_output(cfg.output_path), csv);
  }
  if (!cfg.json_path.empty()) {
    write_file(resolve_output(cfg.json_path), to_json(report).dump(2) + "\n");
  }
}

}  // namespace infotrans::cli
