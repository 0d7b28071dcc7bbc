#include "cli.h"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "surplus/errors.h"

namespace surplus::cli {

std::string_view command_name(Command c) {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kAnalyze: return "analyze";
    case Command::kEvaluate: return "evaluate";
    case Command::kConsistency: return "consistency";
    case Command::kCompare: return "compare";
  }
  return "?";
}

namespace {

struct RawOptions {
  std::string dataset;
  std::string csv;
  std::string target = "y";
  std::string method = "smssm";
  std::size_t k = 200;
  double top_fraction = 0.25;
  std::string aggregation = "stratified";
  bool resample_splits = false;
  std::size_t repeats = 20;
  double alpha = 0.05;
  double delta = 0.05;
  std::size_t n_perms = 20;
  std::size_t k_models = 10;
  std::string constant = "mean";
  std::string learner = "gbt";
  int rounds = 100;
  int depth = 3;
  double lr = 0.1;
  double subsample = 1.0;
  std::size_t folds = 5;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
  bool no_clip = false;
  std::string external_cmd;
  double timeout_s = 300.0;
  std::size_t n = 1000;
  double noise = 1.0;
  double collinearity = 0.05;
  std::size_t trials = 5;
  std::size_t seeds = 10;
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::size_t truth_n = 20000;
};

void add_options(CLI::App* sub, RawOptions& o) {
  sub->add_option("--dataset", o.dataset, "Simulated dataset DS1..DS6");
  sub->add_option("--csv", o.csv, "CSV file with a header row");
  sub->add_option("--target", o.target, "Target column of --csv")
      ->capture_default_str();
  sub->add_option("--n", o.n, "Rows to simulate")->capture_default_str();
  sub->add_option("--noise", o.noise, "Target noise sd")->capture_default_str();
  sub->add_option("--collinearity", o.collinearity,
                  "Near-duplicate perturbation sd")
      ->capture_default_str();
  sub->add_option("--method", o.method,
                  "smssm | loco | mcr | replacement | gain")
      ->capture_default_str();
  sub->add_option("--k", o.k, "SMSSM sampled subsets")->capture_default_str();
  sub->add_option("--top-fraction", o.top_fraction,
                  "SMSSM share of best subsets retained")
      ->capture_default_str();
  sub->add_option("--aggregation", o.aggregation, "stratified | mean")
      ->capture_default_str();
  sub->add_flag("--resample-splits", o.resample_splits,
                "SMSSM: fresh CV split per sampled subset");
  sub->add_option("--repeats", o.repeats, "LOCO repeats")->capture_default_str();
  sub->add_option("--alpha", o.alpha, "LOCO interval level")
      ->capture_default_str();
  sub->add_option("--delta", o.delta, "MCR Rashomon tolerance")
      ->capture_default_str();
  sub->add_option("--n-perms", o.n_perms, "MCR permutations per feature")
      ->capture_default_str();
  sub->add_option("--k-models", o.k_models, "MCR candidate models")
      ->capture_default_str();
  sub->add_option("--constant", o.constant, "Replacement constant: mean | zero")
      ->capture_default_str();
  sub->add_option("--learner", o.learner, "gbt | ols | external")
      ->capture_default_str();
  sub->add_option("--rounds", o.rounds, "GBT boosting rounds")
      ->capture_default_str();
  sub->add_option("--depth", o.depth, "GBT tree depth")->capture_default_str();
  sub->add_option("--lr", o.lr, "GBT learning rate")->capture_default_str();
  sub->add_option("--subsample", o.subsample, "GBT row subsample")
      ->capture_default_str();
  sub->add_option("--folds", o.folds, "Cross-validation folds")
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "Run seed")->envname("SURPLUS_SEED");
  sub->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();
  sub->add_option("--out", o.out, "Output file")->required();
  sub->add_flag("--no-clip", o.no_clip,
                "Score raw weights instead of clipping negatives to zero");
  sub->add_option("--external-cmd", o.external_cmd,
                  "Shell command launching an external learner");
  sub->add_option("--timeout", o.timeout_s,
                  "External learner timeout per call, seconds")
      ->capture_default_str();
  sub->add_option("--trials", o.trials, "Consistency trials")
      ->capture_default_str();
  sub->add_option("--seeds", o.seeds, "Replicates per dataset (compare)")
      ->capture_default_str();
  sub->add_option("--methods", o.methods, "Methods to compare")->delimiter(',');
  sub->add_option("--datasets", o.datasets, "Datasets to compare")
      ->delimiter(',');
  sub->add_option("--truth-n", o.truth_n, "Rows used to derive ground truth")
      ->capture_default_str();
}

RunConfig resolve(Command command, const RawOptions& o) {
  RunConfig cfg;
  cfg.command = command;
  cfg.seed = o.seed.value_or(0);
  cfg.jobs = o.jobs;
  cfg.out = o.out;
  cfg.clip = !o.no_clip;
  cfg.target = o.target;
  cfg.trials = o.trials;
  cfg.seeds = o.seeds;
  cfg.truth_n = o.truth_n;

  if (!o.dataset.empty()) {
    cfg.dgp = DgpSpec{parse_dgp(o.dataset), o.n, cfg.seed, o.noise,
                      o.collinearity};
  }
  if (!o.csv.empty()) cfg.csv = o.csv;

  MethodConfig& m = cfg.method;
  m.method = parse_method(o.method);
  LearnerKind kind = parse_learner(o.learner);
  if (!o.external_cmd.empty()) kind = LearnerKind::kExternal;
  m.learner.kind = kind;
  m.learner.gbt.n_rounds = o.rounds;
  m.learner.gbt.max_depth = o.depth;
  m.learner.gbt.learning_rate = o.lr;
  m.learner.gbt.subsample = o.subsample;
  m.learner.seed = cfg.seed;
  m.learner.external.command = o.external_cmd;
  m.learner.external.timeout =
      std::chrono::milliseconds(static_cast<long long>(o.timeout_s * 1000.0));
  m.folds = o.folds;
  m.seed = cfg.seed;
  m.k = o.k;
  m.top_fraction = o.top_fraction;
  if (o.aggregation == "stratified") {
    m.aggregation = Aggregation::kSizeStratified;
  } else if (o.aggregation == "mean") {
    m.aggregation = Aggregation::kPlainMean;
  } else {
    throw ValidationError("--aggregation must be 'stratified' or 'mean'");
  }
  m.resample_splits = o.resample_splits;
  m.repeats = o.repeats;
  m.alpha = o.alpha;
  m.delta = o.delta;
  m.n_perms = o.n_perms;
  m.k_models = o.k_models;
  if (o.constant == "mean") {
    m.constant = ReplacementConstant::kMean;
  } else if (o.constant == "zero") {
    m.constant = ReplacementConstant::kZero;
  } else {
    throw ValidationError("--constant must be 'mean' or 'zero'");
  }
  m.jobs = o.jobs;

  for (const auto& name : o.datasets) cfg.datasets.push_back(parse_dgp(name));
  for (const auto& name : o.methods) cfg.methods.push_back(parse_method(name));
  if (command == Command::kCompare) {
    if (cfg.datasets.empty() && cfg.dgp) cfg.datasets.push_back(cfg.dgp->id);
    if (cfg.datasets.empty()) cfg.datasets.assign(std::begin(kAllDgps), std::end(kAllDgps));
    if (cfg.methods.empty()) cfg.methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
    cfg.dgp.reset();
  }
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::filesystem::path manifest_path(const std::filesystem::path& out) {
  return out.string() + ".manifest.json";
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.dgp) return generate(*cfg.dgp);
  return load_csv(*cfg.csv, cfg.target);
}

nlohmann::json dgp_to_json(const DgpSpec& s) {
  return {{"id", dgp_name(s.id)},
          {"n", s.n},
          {"seed", s.seed},
          {"noise_scale", s.noise_scale},
          {"collinearity_noise", s.collinearity_noise}};
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (cfg.jobs < 1) throw ValidationError("--jobs must be >= 1");
  if (cfg.out.empty()) throw ValidationError("--out is required");
  const bool needs_source = cfg.command != Command::kCompare;
  if (needs_source) {
    if (cfg.dgp.has_value() == cfg.csv.has_value()) {
      throw ValidationError("give exactly one of --dataset or --csv");
    }
  }
  if ((cfg.command == Command::kSimulate || cfg.command == Command::kEvaluate) &&
      !cfg.dgp) {
    throw ValidationError(std::string(command_name(cfg.command)) +
                          " needs a simulated --dataset");
  }
  if (cfg.dgp) surplus::validate(*cfg.dgp);
  if (cfg.command != Command::kSimulate) {
    surplus::validate(cfg.method.learner);
    if (cfg.method.folds < 2) throw ValidationError("--folds must be >= 2");
  }
  if (cfg.command == Command::kConsistency && cfg.trials < 1) {
    throw ValidationError("--trials must be >= 1");
  }
  if (cfg.command == Command::kCompare && cfg.seeds < 1) {
    throw ValidationError("--seeds must be >= 1");
  }
  const auto dir = cfg.out.has_parent_path() ? cfg.out.parent_path()
                                             : std::filesystem::path(".");
  if (std::filesystem::exists(dir) && !std::filesystem::is_directory(dir)) {
    throw ValidationError("output directory " + dir.string() +
                          " is not a directory");
  }
}

nlohmann::json manifest(const RunConfig& cfg) {
  nlohmann::json m = {{"schema_version", kReportSchemaVersion},
                      {"tool", "surplus"},
                      {"version", "0.1.0"},
                      {"command", command_name(cfg.command)},
                      {"seed", cfg.seed},
                      {"jobs", cfg.jobs},
                      {"clip", cfg.clip},
                      {"out", cfg.out.string()}};
  if (cfg.dgp && cfg.command != Command::kCompare) {
    m["dataset"] = dgp_to_json(*cfg.dgp);
  }
  if (cfg.csv) m["csv"] = {{"path", cfg.csv->string()}, {"target", cfg.target}};
  if (cfg.command != Command::kSimulate) {
    m["method"] = method_config_to_json(cfg.method);
  }
  if (cfg.command == Command::kConsistency) m["trials"] = cfg.trials;
  if (cfg.command == Command::kEvaluate || cfg.command == Command::kCompare) {
    m["truth_n"] = cfg.truth_n;
  }
  if (cfg.command == Command::kCompare) {
    nlohmann::json ds = nlohmann::json::array(), ms = nlohmann::json::array();
    for (DgpId id : cfg.datasets) ds.push_back(dgp_name(id));
    for (Method x : cfg.methods) ms.push_back(method_name(x));
    m["datasets"] = ds;
    m["methods"] = ms;
    m["seeds"] = cfg.seeds;
    if (cfg.dgp) {
      m["n"] = cfg.dgp->n;
      m["noise_scale"] = cfg.dgp->noise_scale;
      m["collinearity_noise"] = cfg.dgp->collinearity_noise;
    }
  }
  return m;
}

std::optional<RunConfig> parse_command_line(int argc, const char* const* argv,
                                            std::ostream& out) {
  CLI::App app{"Feature importance by refit-based Shapley marginal surplus"};
  app.require_subcommand(1);
  RawOptions raw;
  struct Entry {
    Command command;
    const char* help;
  };
  const Entry entries[] = {
      {Command::kSimulate, "Write a simulated dataset as CSV"},
      {Command::kAnalyze, "Run one importance method and write its report"},
      {Command::kEvaluate, "Score a method against simulated ground truth"},
      {Command::kConsistency, "Random-half split consistency of a method"},
      {Command::kCompare, "Method x dataset comparison table"}};
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(std::string(command_name(e.command)), e.help);
    add_options(sub, raw);
    subs.emplace_back(sub, e.command);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ValidationError(e.what());
  }
  for (auto& [sub, command] : subs) {
    if (sub->parsed()) {
      // compare carries --n and the noise settings in a placeholder spec.
      RunConfig cfg = resolve(command, raw);
      if (command == Command::kCompare) {
        cfg.dgp = DgpSpec{DgpId::kDS1, raw.n, cfg.seed, raw.noise, raw.collinearity};
      }
      return cfg;
    }
  }
  throw ValidationError("no subcommand given");
}

void run(const RunConfig& cfg, std::ostream& out) {
  const nlohmann::json man = manifest(cfg);
  write_json(manifest_path(cfg.out), man);

  switch (cfg.command) {
    case Command::kSimulate: {
      const Dataset ds = generate(*cfg.dgp);
      write_csv(ds, cfg.out);
      out << "wrote " << ds.n() << " rows x " << ds.p() << " features to "
          << cfg.out.string() << "\n";
      return;
    }
    case Command::kAnalyze: {
      const Dataset ds = load_dataset(cfg);
      const ImportanceReport report = run_method(ds, cfg.method);
      nlohmann::json j = report_to_json(report);
      j["manifest"] = man;
      write_json(cfg.out, j);
      for (std::size_t l = 0; l < ds.p(); ++l) {
        out << ds.feature_names()[l] << "\t" << report.phi[l] << "\n";
      }
      return;
    }
    case Command::kEvaluate: {
      const Dataset ds = load_dataset(cfg);
      const ImportanceReport report = run_method(ds, cfg.method);
      GroundTruthOptions opts;
      opts.n = cfg.truth_n;
      opts.folds = cfg.method.folds;
      opts.jobs = cfg.jobs;
      const GroundTruthOracle oracle = derive_ground_truth_oracle(*cfg.dgp, opts);
      const MetricScore angle =
          angle_score(report.phi, oracle.weights.weights, cfg.clip);
      const MetricScore ratio =
          selective_ratio(report.phi, oracle.true_set.true_set, cfg.clip);
      nlohmann::json j = {
          {"schema_version", kReportSchemaVersion},
          {"report", report_to_json(report)},
          {"ground_truth", {{"weights", oracle.weights.weights},
                            {"true_set", oracle.true_set.true_set},
                            {"cutoff_loss", oracle.cutoff},
                            {"baseline_loss", oracle.baseline_loss}}},
          {"angle", angle.score},
          {"angle_degenerate", angle.degenerate},
          {"selective_ratio", ratio.score},
          {"selective_ratio_degenerate", ratio.degenerate},
          {"primary_metric", metric_name(metric_for(cfg.dgp->id))},
          {"manifest", man}};
      write_json(cfg.out, j);
      out << "angle " << angle.score << "  selective_ratio " << ratio.score
          << "\n";
      return;
    }
    case Command::kConsistency: {
      const Dataset ds = load_dataset(cfg);
      const ConsistencyResult r =
          split_consistency(ds, cfg.method, cfg.trials, cfg.seed, cfg.clip);
      nlohmann::json j = {{"schema_version", kReportSchemaVersion},
                          {"method", method_name(cfg.method.method)},
                          {"mean_angle", r.mean_angle},
                          {"trial_angles", r.trial_angles},
                          {"skipped", r.skipped},
                          {"manifest", man}};
      write_json(cfg.out, j);
      out << "mean angle " << r.mean_angle << " over " << r.trial_angles.size()
          << " trials\n";
      return;
    }
    case Command::kCompare: {
      CompareConfig cc;
      cc.datasets = cfg.datasets;
      cc.methods = cfg.methods;
      cc.n = cfg.dgp ? cfg.dgp->n : 2000;
      cc.noise_scale = cfg.dgp ? cfg.dgp->noise_scale : 1.0;
      cc.collinearity_noise = cfg.dgp ? cfg.dgp->collinearity_noise : 0.05;
      cc.seeds = cfg.seeds;
      cc.seed = cfg.seed;
      cc.method = cfg.method;
      cc.truth.n = cfg.truth_n;
      cc.truth.folds = cfg.method.folds;
      cc.clip = cfg.clip;
      cc.jobs = cfg.jobs;
      const ComparisonRun r = run_comparison(cc);
      nlohmann::json ranks = nlohmann::json::array();
      for (const RankSummary& s : rank_summary(r.table)) {
        ranks.push_back({{"method", s.method},
                         {"mean_rank", s.mean_rank},
                         {"best", s.best},
                         {"worst", s.worst}});
      }
      const std::string text = format_table(r.table);
      nlohmann::json j = {{"schema_version", kReportSchemaVersion},
                          {"table", table_to_json(r.table)},
                          {"scores", r.scores},
                          {"rank_summary", ranks},
                          {"text", text},
                          {"manifest", man}};
      write_json(cfg.out, j);
      out << text;
      return;
    }
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  auto fail = [&](int code, const char* kind, const std::string& message) {
    nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}}},
                        {"exit_code", code}};
    err << j.dump() << "\n";
    return code;
  };
  std::optional<RunConfig> cfg;
  try {
    cfg = parse_command_line(argc, argv, out);
    if (!cfg) return 0;
    validate(*cfg);
  } catch (const Error& e) {
    return fail(2, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(2, "validation", e.what());
  }
  try {
    run(*cfg, out);
  } catch (const ValidationError& e) {
    return fail(2, e.kind(), e.what());
  } catch (const Error& e) {
    return fail(1, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(1, "runtime", e.what());
  }
  return 0;
}

}  // namespace surplus::cli
