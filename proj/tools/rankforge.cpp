// Copyright 2026 The RankForge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// rankforge command-line tool.
//
// Exit codes: 0 success, 1 failure (including failed checks), 2 usage or
// configuration error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rankforge/rankforge.hpp"

namespace rf = rankforge;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Reads `key = value` lines ('#' starts a comment) and applies each value to
// the matching option unless that option was given on the command line.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rf::ConfigError("cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw rf::ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config" || key == "help") {
      throw rf::ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                            "' for command '" + cmd->get_name() + "'");
    }
    if (opt->count() > 0) continue;  // the command line wins
    opt->clear();
    if (opt->get_items_expected_max() > 1) {
      opt->add_result(split_list(value));
    } else {
      opt->add_result(value);
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw rf::ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void print_resolved(CLI::App* cmd) {
  std::cerr << "# rankforge " << cmd->get_name() << '\n';
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt == cmd->get_help_ptr()) continue;
    const std::string name = opt->get_name(false, true);
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    std::string key = name.substr(name.find_first_not_of('-'));
    std::replace(key.begin(), key.end(), '-', '_');
    std::cerr << "# " << key << " = " << value << '\n';
  }
}

// Training options shared by train and experiment.
struct TrainOptions {
  std::string preset = "web30k";
  std::string objective = "xe_ndcg";
  std::string newton_mode = "diagonal";
  std::uint64_t seed = 0;
  // Unset overrides keep the preset value.
  std::optional<double> learning_rate;
  std::optional<std::size_t> num_leaves;
  std::optional<std::size_t> min_data_in_leaf;
  std::optional<double> min_sum_hessian;
  std::optional<double> lambda_l2;
  std::optional<std::size_t> max_bin;
  std::optional<std::size_t> max_trees;
  std::optional<std::size_t> early_stopping_rounds;
  double sigma = 1.0;
  double epsilon = rf::kDefaultEpsilon;
  std::size_t eval_cutoff = 5;
  bool frozen_gamma = false;

  void add(CLI::App* cmd, bool with_objective) {
    cmd->add_option("--preset", preset, "Hyperparameter preset")
        ->check(CLI::IsMember({"web30k", "yahoo"}))
        ->capture_default_str();
    if (with_objective) {
      cmd->add_option("--objective", objective, "xe_ndcg, listnet or lambdamart")
          ->check(CLI::IsMember({"xe_ndcg", "listnet", "lambdamart"}))
          ->capture_default_str();
    }
    cmd->add_option("--newton-mode", newton_mode, "diagonal or full")
        ->check(CLI::IsMember({"diagonal", "full"}))
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--learning-rate", learning_rate, "Overrides the preset")
        ->default_str("preset");
    cmd->add_option("--num-leaves", num_leaves, "Overrides the preset")->default_str("preset");
    cmd->add_option("--min-data-in-leaf", min_data_in_leaf, "Overrides the preset")
        ->default_str("preset");
    cmd->add_option("--min-sum-hessian-in-leaf", min_sum_hessian, "Overrides the preset")
        ->default_str("preset");
    cmd->add_option("--lambda-l2", lambda_l2, "Overrides the preset")->default_str("preset");
    cmd->add_option("--max-bin", max_bin, "Overrides the preset")->default_str("preset");
    cmd->add_option("--max-trees", max_trees, "Overrides the preset")->default_str("preset");
    cmd->add_option("--early-stopping-rounds", early_stopping_rounds,
                    "Rounds without validation gain; 0 disables")
        ->default_str("preset");
    cmd->add_option("--sigma", sigma, "LambdaMART sigma")->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "Softmax regularizer")->capture_default_str();
    cmd->add_option("--eval-cutoff", eval_cutoff, "NDCG cutoff for early stopping")
        ->capture_default_str();
    cmd->add_flag("--frozen-gamma", frozen_gamma, "Keep the first gamma draw for every iteration");
  }

  rf::TrainConfig resolve() const {
    rf::TrainConfig c = preset == "yahoo" ? rf::TrainConfig::yahoo() : rf::TrainConfig::web30k();
    c.objective = rf::parse_objective(objective);
    c.newton_mode = rf::parse_newton_mode(newton_mode);
    c.seed = seed;
    c.learning_rate = learning_rate.value_or(c.learning_rate);
    c.tree.num_leaves = num_leaves.value_or(c.tree.num_leaves);
    c.tree.min_data_in_leaf = min_data_in_leaf.value_or(c.tree.min_data_in_leaf);
    c.tree.min_sum_hessian_in_leaf = min_sum_hessian.value_or(c.tree.min_sum_hessian_in_leaf);
    c.tree.lambda_l2 = lambda_l2.value_or(c.tree.lambda_l2);
    c.max_bin = max_bin.value_or(c.max_bin);
    c.max_trees = max_trees.value_or(c.max_trees);
    c.early_stopping_rounds = early_stopping_rounds.value_or(c.early_stopping_rounds);
    c.sigma = sigma;
    c.epsilon = epsilon;
    c.eval_cutoff = eval_cutoff;
    c.resample_gamma = !frozen_gamma;
    c.validate();
    return c;
  }
};

rf::Dataset filtered(const rf::Dataset& data, const char* what) {
  auto result = rf::filter_no_relevant(data);
  if (result.removed > 0) {
    std::cerr << "# removed " << result.removed << " " << what
              << " groups without relevant documents\n";
  }
  return std::move(result.dataset);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rf::Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw rf::Error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------

struct TrainCommand {
  std::string train_path, valid_path, out_path, log_path;
  TrainOptions options;

  void add(CLI::App* cmd) {
    cmd->add_option("--train", train_path, "Training set (LETOR)")->required();
    cmd->add_option("--valid", valid_path, "Validation set (LETOR)")->required();
    cmd->add_option("--out", out_path, "Model file to write")->required();
    cmd->add_option("--log", log_path, "Training log (TSV)")->default_str("<out>.log.tsv");
    options.add(cmd, true);
  }

  int run() {
    const auto config = options.resolve();
    const auto train_set = rf::load_letor(train_path);
    const auto valid_set = filtered(rf::load_letor(valid_path), "validation");
    const auto result = rf::train(train_set, valid_set, config);
    rf::save_model(out_path, result.ensemble);
    std::ostringstream log;
    log << "iteration\ttrain_loss\tvalid_ndcg@" << config.eval_cutoff << '\n';
    for (const auto& rec : result.log) {
      log << rec.iteration << '\t' << rf::detail::format_real(rec.train_loss) << '\t'
          << rf::detail::format_real(rec.valid_ndcg) << '\n';
    }
    write_file(log_path.empty() ? out_path + ".log.tsv" : log_path, log.str());
    std::cout << "trees\t" << result.ensemble.trees.size() << '\n';
    std::cout << "best_iteration\t" << result.best_iteration << '\n';
    if (!result.log.empty()) {
      std::cout << "valid_ndcg@" << config.eval_cutoff << '\t'
                << rf::detail::format_real(result.log[result.best_iteration].valid_ndcg) << '\n';
    }
    return 0;
  }
};

struct EvalCommand {
  std::string model_path, test_path;
  std::vector<std::size_t> cutoffs = {5, 10};
  std::uint64_t seed = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "Model file")->required();
    cmd->add_option("--test", test_path, "Test set (LETOR)")->required();
    cmd->add_option("--cutoffs", cutoffs, "Comma-separated NDCG cutoffs")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Tie-breaking seed")->capture_default_str();
  }

  int run() {
    const auto model = rf::load_model(model_path);
    auto test = filtered(rf::load_letor(test_path), "test");
    if (test.empty()) throw rf::EmptyDatasetError("test set has no groups with relevant documents");
    if (test.num_features() < model.num_features) test = test.with_num_features(model.num_features);
    const auto scores = rf::predict(model, test);
    for (std::size_t k : cutoffs) {
      if (k == 0) throw rf::ConfigError("cutoffs must be >= 1");
      const double v = rf::mean_ndcg(test, scores, k, seed);
      std::printf("ndcg@%zu\t%.2f\n", k, 100.0 * v);
    }
    return 0;
  }
};

struct VerifyCommand {
  std::string suite = "all";
  std::size_t trials = 1000;
  std::size_t first_trial = 0;
  std::uint64_t seed = 0;
  bool inject_failure = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--suite", suite, "Which checks to run")
        ->check(CLI::IsMember(
            {"bound", "lipschitz", "hessian", "spectral", "gradients", "neumann", "all"}))
        ->capture_default_str();
    cmd->add_option("--trials", trials, "Random instances per check")->capture_default_str();
    cmd->add_option("--first-trial", first_trial, "Index of the first instance (for replay)")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_flag("--inject-failure", inject_failure,
                  "Tighten every tolerance so checks fail (harness self-test)");
  }

  int run() {
    if (trials < 1) throw rf::ConfigError("--trials must be >= 1");
    rf::SuiteOptions opt;
    opt.trials = trials;
    opt.first_trial = first_trial;
    opt.seed = seed;
    opt.tolerance_shift = inject_failure ? -1e6 : 0.0;
    std::vector<rf::CheckRecord> records;
    auto append = [&](std::vector<rf::CheckRecord> r) {
      records.insert(records.end(), r.begin(), r.end());
    };
    const bool all = suite == "all";
    if (all || suite == "gradients") append(rf::certify_gradients(opt));
    if (all || suite == "bound") append(rf::certify_bound(opt));
    if (all || suite == "lipschitz") append(rf::certify_lipschitz(opt));
    if (all || suite == "hessian") append(rf::certify_hessian(opt));
    if (all || suite == "spectral") append(rf::certify_spectral(opt));
    if (all || suite == "neumann") append(rf::certify_neumann(opt));

    std::cout << "check\tinstances\tmax_violation\tstatus\n";
    const rf::CheckRecord* first_failure = nullptr;
    for (const auto& r : records) {
      std::cout << r.name << '\t' << r.instances << '\t' << rf::detail::format_real(r.max_violation)
                << '\t' << (r.passed ? "pass" : "FAIL") << '\n';
      if (!r.passed && first_failure == nullptr) first_failure = &r;
    }
    if (first_failure != nullptr) {
      std::cout << "witness\t" << first_failure->witness << '\n';
      return kExitFailure;
    }
    return 0;
  }
};

struct ExperimentCommand {
  std::string protocol = "perturb";
  std::vector<double> sweep;
  std::size_t trials = 20;
  std::string data_path;
  std::vector<std::size_t> synth;
  std::uint64_t synth_seed = 1;
  std::string out_dir = ".";
  std::vector<double> grade_dist = {0.5, 0.2, 0.15, 0.1, 0.05};
  std::vector<double> click_probs = {0.05, 0.3, 0.5, 0.7, 0.95};
  std::size_t impressions = 10;
  TrainOptions options;

  void add(CLI::App* cmd) {
    cmd->add_option("--protocol", protocol, "augment, perturb or clicks")
        ->check(CLI::IsMember({"augment", "perturb", "clicks"}))
        ->capture_default_str();
    cmd->add_option("--sweep", sweep,
                    "Comma-separated noise levels (percent for augment, fraction for perturb, "
                    "grade-0 click probability for clicks)")
        ->delimiter(',')
        ->required();
    cmd->add_option("--trials", trials, "Trials per sweep value")->capture_default_str();
    cmd->add_option("--data", data_path, "Dataset to split per trial (LETOR)");
    cmd->add_option("--synth", synth, "Use synth_dataset with groups,docs,features instead")
        ->delimiter(',')
        ->expected(3);
    cmd->add_option("--synth-seed", synth_seed, "Seed for --synth")->capture_default_str();
    cmd->add_option("--out-dir", out_dir, "Directory for results, summary and plot files")
        ->capture_default_str();
    cmd->add_option("--grade-dist", grade_dist, "Perturbation grade distribution")
        ->delimiter(',')
        ->expected(5)
        ->capture_default_str();
    cmd->add_option("--click-probs", click_probs, "Click probability per grade")
        ->delimiter(',')
        ->expected(5)
        ->capture_default_str();
    cmd->add_option("--impressions", impressions, "Impressions per query")->capture_default_str();
    options.add(cmd, false);
  }

  int run() {
    if (data_path.empty() == synth.empty()) {
      throw rf::ConfigError("give exactly one of --data and --synth");
    }
    const rf::Dataset data = synth.empty()
                                 ? rf::load_letor(data_path)
                                 : rf::synth_dataset(synth[0], synth[1], synth[2], synth_seed);
    rf::ExperimentConfig config;
    config.protocol = rf::parse_protocol(protocol);
    config.sweep = sweep;
    if (config.protocol == rf::Protocol::kAugment) {
      for (double& v : config.sweep) v /= 100.0;
    }
    config.trials = trials;
    config.base = options.resolve();
    config.seed = options.seed;
    std::copy(grade_dist.begin(), grade_dist.end(), config.perturb.grade_dist.begin());
    std::copy(click_probs.begin(), click_probs.end(), config.clicks.click_prob.begin());
    config.clicks.impressions_per_query = impressions;
    config.eval_cutoff = options.eval_cutoff;

    auto result = rf::run_experiment(data, config);
    if (config.protocol == rf::Protocol::kAugment) {
      // Report augmentation levels in percent, as given.
      for (auto& row : result.rows) row.sweep_value *= 100.0;
      for (auto& s : result.summary) s.sweep_value *= 100.0;
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    std::ostringstream results, summary, plot;
    rf::write_results_tsv(results, result);
    rf::write_summary_tsv(summary, result);
    rf::write_plot_tsv(plot, result);
    write_file((dir / "results.tsv").string(), results.str());
    write_file((dir / "summary.tsv").string(), summary.str());
    write_file((dir / "plot.tsv").string(), plot.str());
    std::cout << summary.str();
    return 0;
  }
};

struct TransformCommand {
  std::string in_path, out_path;
  std::uint64_t seed = 0;

  void add_io(CLI::App* cmd) {
    cmd->add_option("--in", in_path, "Input dataset (LETOR)")->required();
    cmd->add_option("--out", out_path, "Output dataset (LETOR)")->required();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  }
};

struct ClickSimCommand : TransformCommand {
  std::vector<double> click_probs = {0.05, 0.3, 0.5, 0.7, 0.95};
  std::size_t impressions = 10;

  void add(CLI::App* cmd) {
    add_io(cmd);
    cmd->add_option("--click-probs", click_probs, "Click probability per grade")
        ->delimiter(',')
        ->expected(5)
        ->capture_default_str();
    cmd->add_option("--impressions", impressions, "Impressions per query")->capture_default_str();
  }

  int run() {
    rf::ClickModel model;
    std::copy(click_probs.begin(), click_probs.end(), model.click_prob.begin());
    model.impressions_per_query = impressions;
    rf::Rng rng(seed);
    const auto sim = rf::cascade_clicks(rf::load_letor(in_path), model, rng);
    rf::save_letor(out_path, sim.dataset);
    std::cout << "impressions\t" << sim.impressions << '\n'
              << "dropped\t" << sim.dropped << '\n'
              << "drop_rate\t" << rf::detail::format_real(sim.drop_rate()) << '\n';
    return 0;
  }
};

struct PerturbCommand : TransformCommand {
  double fraction = 0.0;
  std::vector<double> grade_dist = {0.5, 0.2, 0.15, 0.1, 0.05};

  void add(CLI::App* cmd) {
    add_io(cmd);
    cmd->add_option("--fraction", fraction, "Probability that a label is redrawn")->required();
    cmd->add_option("--grade-dist", grade_dist, "Redraw distribution over grades 0..4")
        ->delimiter(',')
        ->expected(5)
        ->capture_default_str();
  }

  int run() {
    rf::PerturbSpec spec;
    spec.fraction = fraction;
    std::copy(grade_dist.begin(), grade_dist.end(), spec.grade_dist.begin());
    rf::Rng rng(seed);
    rf::save_letor(out_path, rf::perturb_labels(rf::load_letor(in_path), spec, rng));
    return 0;
  }
};

struct AugmentCommand : TransformCommand {
  double percent = 0.0;

  void add(CLI::App* cmd) {
    add_io(cmd);
    cmd->add_option("--percent", percent, "Extra non-relevant documents, percent of group size")
        ->required();
  }

  int run() {
    rf::Rng rng(seed);
    rf::save_letor(out_path, rf::augment_negatives(rf::load_letor(in_path), percent / 100.0, rng));
    return 0;
  }
};

struct SynthCommand {
  std::size_t groups = 200, docs = 20, features = 10;
  std::uint64_t seed = 0;
  double noise = 0.25;
  std::string out_path;

  void add(CLI::App* cmd) {
    cmd->add_option("--groups", groups, "Number of queries")->capture_default_str();
    cmd->add_option("--docs", docs, "Documents per query")->capture_default_str();
    cmd->add_option("--features", features, "Feature dimension")->capture_default_str();
    cmd->add_option("--noise", noise, "Utility noise scale")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out_path, "Output dataset (LETOR)")->required();
  }

  int run() {
    rf::save_letor(out_path, rf::synth_dataset(groups, docs, features, seed, noise));
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankforge: gradient-boosted learning to rank"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rankforge 1.0");

  TrainCommand train_cmd;
  EvalCommand eval_cmd;
  VerifyCommand verify_cmd;
  ExperimentCommand experiment_cmd;
  ClickSimCommand clicksim_cmd;
  PerturbCommand perturb_cmd;
  AugmentCommand augment_cmd;
  SynthCommand synth_cmd;

  std::map<CLI::App*, std::function<int()>> runners;
  std::map<CLI::App*, std::string> config_paths;
  auto add = [&](const char* name, const char* help, auto& command) {
    CLI::App* cmd = app.add_subcommand(name, help);
    command.add(cmd);
    cmd->add_option("--config", config_paths[cmd], "File of 'key = value' lines; flags override it");
    runners[cmd] = [&command] { return command.run(); };
  };
  add("train", "Train a model", train_cmd);
  add("eval", "Report NDCG of a model on a test set", eval_cmd);
  add("verify", "Run numerical certification suites", verify_cmd);
  add("experiment", "Run a label-noise robustness experiment", experiment_cmd);
  add("clicksim", "Turn a dataset into cascade-model click impressions", clicksim_cmd);
  add("perturb", "Redraw a fraction of labels", perturb_cmd);
  add("augment", "Append non-relevant documents from other queries", augment_cmd);
  add("synth", "Write a synthetic dataset", synth_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; everything else is a usage error.
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    if (!config_paths[cmd].empty()) apply_config_file(cmd, config_paths[cmd]);
    print_resolved(cmd);
    return runners[cmd]();
  } catch (const rf::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
