// infotrans: finite-horizon comparison and reduction of linear Gaussian
// state-space models.
//
//   infotrans analyze  --model m.json --freeze 3,4 --horizon 100
//   infotrans hankel   --model m.json
//   infotrans reduce   --model m.json --order 2 --horizon 200 --jobs 4
//   infotrans crossing --model table2.json --horizon 200
//   infotrans compare  --model m.json --order 2 --horizon 5

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "infotrans/cli.hpp"

namespace {

using namespace infotrans;
using namespace infotrans::cli;

struct RawOptions {
  std::string model;
  std::string freeze;
  std::string target;
  std::vector<std::string> pair;
  std::vector<double> frozen_value;
  std::size_t order = 1;
  std::size_t horizon = 50;
  std::vector<std::size_t> horizons;
  bool asymptotic = false;
  std::string gramians = "discrete";
  KlMode mode = KlMode::kFilter;
  InnovationNoise innovation = InnovationNoise::kOutputNoise;
  IndexConvention indexing = IndexConvention::kCurrent;
  bool correlated = false;
  double tolerance = 1e-12;
  std::size_t max_iterations = 1000000;
  std::size_t jobs = 1;
  std::string output;
  std::string json;
  bool timestamp = false;
};

void add_common(CLI::App* sub, RawOptions& o) {
  sub->add_option("-m,--model", o.model, "model file (JSON)")->required();
  sub->add_option("-o,--output", o.output, "CSV report path (default: stdout)");
  sub->add_option("--json", o.json, "also write a JSON mirror of the report");
  sub->add_flag("--timestamp", o.timestamp, "add a wall-clock timestamp to the metadata");
}

void add_kl(CLI::App* sub, RawOptions& o) {
  const std::map<std::string, KlMode> modes{{"filter", KlMode::kFilter},
                                            {"exact", KlMode::kExactObservation}};
  const std::map<std::string, InnovationNoise> noises{
      {"output-noise", InnovationNoise::kOutputNoise}, {"paper-bbt", InnovationNoise::kPaperBbt}};
  sub->add_option("--mode", o.mode, "KL evaluation: filter or exact")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
  sub->add_option("--innovation", o.innovation, "innovation noise: output-noise or paper-bbt")
      ->transform(CLI::CheckedTransformer(noises, CLI::ignore_case));
  sub->add_flag("--correlated-noise", o.correlated, "include the B D^T cross term in the gain");
  sub->add_option("--tolerance", o.tolerance, "steady-state tolerance")
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-iterations", o.max_iterations, "steady-state iteration cap")
      ->check(CLI::PositiveNumber);
}

void add_indexing(CLI::App* sub, RawOptions& o) {
  const std::map<std::string, IndexConvention> conventions{
      {"current", IndexConvention::kCurrent}, {"lagged", IndexConvention::kLagged}};
  sub->add_option("--indexing", o.indexing, "covariance index: current or lagged")
      ->transform(CLI::CheckedTransformer(conventions, CLI::ignore_case));
}

RunConfig to_config(const std::string& command, const RawOptions& o,
                    const LinearGaussianModel* model) {
  RunConfig cfg;
  static const std::map<std::string, Command> commands{
      {"analyze", Command::kAnalyze}, {"hankel", Command::kHankel},
      {"reduce", Command::kReduce},   {"crossing", Command::kCrossing},
      {"compare", Command::kCompare}};
  cfg.command = commands.at(command);
  cfg.model_path = o.model;
  cfg.order = o.order;
  cfg.horizon = o.horizon;
  cfg.horizons = o.horizons;
  cfg.asymptotic = o.asymptotic;
  cfg.gramian_form = o.gramians == "continuous" ? GramianForm::kContinuous : GramianForm::kDiscrete;
  cfg.kl.mode = o.mode;
  cfg.kl.filter.innovation = o.innovation;
  cfg.kl.filter.correlated_noise = o.correlated;
  cfg.kl.indexing = o.indexing;
  cfg.kl.steady.tolerance = o.tolerance;
  cfg.kl.steady.max_iterations = o.max_iterations;
  cfg.jobs = o.jobs;
  cfg.output_path = o.output;
  cfg.json_path = o.json;
  cfg.timestamp = o.timestamp;
  if (!o.frozen_value.empty()) cfg.frozen_value = o.frozen_value;
  if (model) {
    const std::size_t m = model->state_dim();
    if (command == "analyze") {
      cfg.subsets.push_back(parse_subset(o.freeze, m));
      if (!o.target.empty()) cfg.target = parse_subset(o.target, m);
    } else if (command == "crossing") {
      for (const auto& s : o.pair) cfg.subsets.push_back(parse_subset(s, m));
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon KL rate and information transfer for linear Gaussian models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  RawOptions o;

  auto* analyze = app.add_subcommand("analyze", "IT trajectory of one frozen subset");
  add_common(analyze, o);
  add_kl(analyze, o);
  add_indexing(analyze, o);
  analyze->add_option("--freeze", o.freeze, "frozen states, one-based, e.g. 3,4 (empty: none)");
  analyze->add_option("--target", o.target, "target states for state-to-state IT");
  analyze->add_option("--frozen-value", o.frozen_value, "values the frozen states hold");
  analyze->add_option("-n,--horizon", o.horizon, "last step")->check(CLI::NonNegativeNumber);
  analyze->add_flag("--asymptotic", o.asymptotic, "append the asymptotic KL rate");

  auto* hankel = app.add_subcommand("hankel", "Hankel singular values");
  add_common(hankel, o);
  hankel->add_option("--gramians", o.gramians, "discrete or continuous Lyapunov equations")
      ->check(CLI::IsMember({"discrete", "continuous"}));

  auto* reduce = app.add_subcommand("reduce", "IT of every k-state freeze, ranked");
  add_common(reduce, o);
  add_kl(reduce, o);
  add_indexing(reduce, o);
  reduce->add_option("-k,--order", o.order, "number of frozen states")->check(CLI::PositiveNumber);
  reduce->add_option("-n,--horizon", o.horizon, "last step")->check(CLI::NonNegativeNumber);
  reduce->add_option("--horizons", o.horizons, "extra horizons for best-at-horizon rows");
  reduce->add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* crossing = app.add_subcommand("crossing", "crossing of two single-freeze trajectories");
  add_common(crossing, o);
  add_kl(crossing, o);
  add_indexing(crossing, o);
  crossing->add_option("-n,--horizon", o.horizon, "last step")->check(CLI::NonNegativeNumber);
  crossing->add_option("--pair", o.pair, "the two frozen subsets (default 1 and 2)")
      ->expected(2);

  auto* compare = app.add_subcommand("compare", "asymptotic versus horizon-n rankings");
  add_common(compare, o);
  add_kl(compare, o);
  add_indexing(compare, o);
  compare->add_option("-k,--order", o.order, "number of frozen states")->check(CLI::PositiveNumber);
  compare->add_option("-n,--horizon", o.horizon, "ranking step")->check(CLI::NonNegativeNumber);
  compare->add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << diagnostic("Usage", kExitUsage, e.what()) << '\n';
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    // Subset labels are validated against the model's state count.
    const LinearGaussianModel model = load_model(o.model);
    const RunConfig cfg = to_config(command, o, &model);
    const Report report = run(cfg);
    emit(report, cfg, std::cout);
  } catch (const Error& e) {
    const int status = exit_status(e.category());
    std::cerr << diagnostic(to_string(e.kind()), status, e.what()) << '\n';
    return status;
  } catch (const IoError& e) {
    std::cerr << diagnostic("IoError", kExitIo, e.what()) << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << diagnostic("Internal", kExitInternal, e.what()) << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
