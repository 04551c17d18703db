// Command-line front end: synthetic data generation, training, evaluation,
// criterion comparison, and group-count sweeps. Artifacts are deterministic
// for a given command line, so manifests carry no timestamps.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "groupdir/checkpoint.hpp"
#include "groupdir/datagen.hpp"
#include "groupdir/errors.hpp"
#include "groupdir/eval.hpp"
#include "groupdir/grouping.hpp"
#include "groupdir/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw groupdir::IoError("cannot-open: " + path.string());
  out << text;
  out.flush();
  if (!out.good()) throw groupdir::IoError("write-failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw groupdir::IoError("cannot-open: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

constexpr char kVersion[] = "v0.1.0";

void write_manifest(const fs::path& dir, const std::string& command,
                    const ordered_json& config, const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& outputs) {
  ordered_json doc;
  doc["command"] = command;
  doc["version"] = kVersion;
  doc["config"] = config;
  doc["seeds"] = seeds;
  doc["output_dir"] = dir.string();
  doc["outputs"] = outputs;
  write_text(dir / "manifest.json", doc.dump(2) + "\n");
}

int threads_from_env() {
  const char* raw = std::getenv("GROUPDIR_THREADS");
  if (raw == nullptr) return 1;
  const int value = std::atoi(raw);
  return value < 1 ? 1 : value;
}

// Runs fn(0..count-1) on up to GROUPDIR_THREADS workers. Slot-indexed result
// storage keeps aggregation order independent of scheduling.
void run_parallel(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const auto threads =
      std::min<std::size_t>(static_cast<std::size_t>(threads_from_env()), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

double median(std::vector<double> values) {
  if (values.empty()) throw groupdir::DataError("empty-input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// Train-command state shared with compare and sweep-groups.
struct TrainCli {
  groupdir::TrainConfig config;
  std::string criterion = "soft";
  double y_min = 0.0;
  double y_max = 100.0;
  CLI::Option* y_min_opt = nullptr;
  CLI::Option* y_max_opt = nullptr;
};

void add_train_flags(CLI::App* cmd, TrainCli& cli, bool with_criterion_and_seed) {
  auto& config = cli.config;
  cmd->add_option("--groups", config.num_groups, "Number of ordinal label groups")
      ->capture_default_str();
  if (with_criterion_and_seed) {
    cmd->add_option("--criterion", cli.criterion,
                    "Classification criterion: soft, ce, or la")
        ->check(CLI::IsMember({"soft", "ce", "la"}))
        ->capture_default_str();
    cmd->add_option("--seed", config.seed, "Master seed")->capture_default_str();
  }
  cmd->add_option("--lambda1", config.lambda1, "Weight of the regression loss")
      ->capture_default_str();
  cmd->add_option("--lambda2", config.lambda2, "Weight of the classification loss")
      ->capture_default_str();
  cmd->add_option("--temperature", config.temperature, "Contrastive temperature")
      ->capture_default_str();
  cmd->add_option("--beta", config.beta, "Soft-label descent step")
      ->capture_default_str();
  cmd->add_option("--lr", config.learning_rate, "Adam learning rate")
      ->capture_default_str();
  cmd->add_option("--epochs", config.epochs, "Stage-1 epochs")->capture_default_str();
  cmd->add_option("--stage2-epochs", config.stage2_epochs,
                  "Encoder-frozen fine-tuning epochs")
      ->capture_default_str();
  cmd->add_option("--batch-size", config.batch_size, "Mini-batch size")
      ->capture_default_str();
  cmd->add_option("--hidden", config.hidden_dims,
                  "Encoder hidden layer widths (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--embed", config.embed_dim, "Embedding dimension")
      ->capture_default_str();
  cmd->add_option("--weight-decay", config.adam.weight_decay, "L2-coupled weight decay")
      ->capture_default_str();
  cmd->add_flag("--vanilla", config.vanilla,
                "Single-expert MSE baseline (no contrastive or classification terms)");
  cmd->add_flag("--lds", config.use_lds, "Weight samples by smoothed inverse density");
  cmd->add_option("--lds-radius", config.lds_kernel_radius, "LDS kernel radius in bins")
      ->capture_default_str();
  cmd->add_option("--lds-sigma", config.lds_sigma, "LDS kernel sigma in bins")
      ->capture_default_str();
  cmd->add_option("--lds-bins", config.lds_intra_bins, "LDS label bins per group")
      ->capture_default_str();
  cmd->add_option("--la-tau", config.la_tau, "Logit-adjustment strength")
      ->capture_default_str();
  cli.y_min_opt = cmd->add_option("--y-min", cli.y_min, "Label range lower bound")
                      ->capture_default_str();
  cli.y_max_opt = cmd->add_option("--y-max", cli.y_max, "Label range upper bound")
                      ->capture_default_str();
}

struct LoadedData {
  groupdir::SynthSplits splits;
  bool have_range = false;
  double y_min = 0.0;
  double y_max = 0.0;
};

// Loads train.csv/val.csv (and test.csv when asked) plus the generator
// config, whose label range seeds the grouping scheme unless overridden.
LoadedData load_data_dir(const fs::path& dir, bool need_test) {
  LoadedData data;
  data.splits.train = groupdir::load_csv(dir / "train.csv");
  data.splits.val = groupdir::load_csv(dir / "val.csv");
  if (need_test) data.splits.test = groupdir::load_csv(dir / "test.csv");
  const auto config_path = dir / "config.json";
  if (fs::exists(config_path)) {
    const auto config = groupdir::synth_config_from_json(read_text(config_path));
    data.y_min = config.y_min;
    data.y_max = config.y_max;
    data.have_range = true;
  }
  return data;
}

void resolve_range(TrainCli& cli, const LoadedData& data) {
  if (data.have_range) {
    if (cli.y_min_opt->count() == 0) cli.y_min = data.y_min;
    if (cli.y_max_opt->count() == 0) cli.y_max = data.y_max;
  }
}

ordered_json train_manifest_config(const groupdir::TrainConfig& config,
                                   const groupdir::GroupingScheme& scheme) {
  ordered_json node = ordered_json::parse(groupdir::train_config_to_json(config));
  node["scheme"] = {{"y_min", scheme.y_min},
                    {"y_max", scheme.y_max},
                    {"num_groups", scheme.num_groups}};
  return node;
}

// Test-set metrics for one trained model, on both prediction paths.
struct RunMetrics {
  double group_acc = 0.0;
  double mean_absdiff = 0.0;
  double mae_cls = 0.0;
  double mae_gt = 0.0;
  double gm_cls = 0.0;
  double gm_gt = 0.0;
};

RunMetrics evaluate_run(const groupdir::ModelParams& params,
                        const groupdir::GroupingScheme& scheme,
                        const groupdir::Dataset& test,
                        const groupdir::GroupHistogram& train_counts) {
  const auto report =
      groupdir::full_report(params, scheme, test, groupdir::ShotThresholds{}, train_counts);
  RunMetrics metrics;
  metrics.group_acc = report.group_accuracy;
  metrics.mean_absdiff = report.mean_absdiff();
  metrics.mae_cls = report.mae;
  metrics.gm_cls = report.gm;
  std::vector<int> true_groups(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    true_groups[i] = groupdir::group_of(scheme, test.labels[i]);
  }
  const auto gt_preds =
      groupdir::predict_gt_guided_batch(params, test.features, true_groups);
  metrics.mae_gt = groupdir::mae(gt_preds, test.labels);
  metrics.gm_gt = groupdir::gm(gt_preds, test.labels);
  return metrics;
}

void append_metric_fields(std::ostringstream& out, const RunMetrics& metrics) {
  out << ',' << format_double(metrics.group_acc) << ','
      << format_double(metrics.mean_absdiff) << ',' << format_double(metrics.mae_cls)
      << ',' << format_double(metrics.mae_gt) << ',' << format_double(metrics.gm_cls)
      << ',' << format_double(metrics.gm_gt);
}

RunMetrics median_metrics(const std::vector<RunMetrics>& runs) {
  const auto collect = [&runs](double RunMetrics::* field) {
    std::vector<double> values;
    values.reserve(runs.size());
    for (const auto& run : runs) values.push_back(run.*field);
    return median(std::move(values));
  };
  RunMetrics result;
  result.group_acc = collect(&RunMetrics::group_acc);
  result.mean_absdiff = collect(&RunMetrics::mean_absdiff);
  result.mae_cls = collect(&RunMetrics::mae_cls);
  result.mae_gt = collect(&RunMetrics::mae_gt);
  result.gm_cls = collect(&RunMetrics::gm_cls);
  result.gm_gt = collect(&RunMetrics::gm_gt);
  return result;
}

constexpr char kMetricColumns[] = "group_acc,mean_absdiff,mae_cls,mae_gt,gm_cls,gm_gt";

int run_generate(const groupdir::SynthConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto splits = groupdir::generate(config);
  groupdir::save_csv(splits.train, out_dir / "train.csv");
  groupdir::save_csv(splits.val, out_dir / "val.csv");
  groupdir::save_csv(splits.test, out_dir / "test.csv");
  const auto config_json = groupdir::synth_config_to_json(config);
  write_text(out_dir / "config.json", config_json);
  write_manifest(out_dir, "generate", ordered_json::parse(config_json), {config.seed},
                 {"train.csv", "val.csv", "test.csv", "config.json"});
  std::cout << "generated " << splits.train.size() << " train / " << splits.val.size()
            << " val / " << splits.test.size() << " test samples in "
            << out_dir.string() << "\n";
  return 0;
}

int run_train(TrainCli& cli, const fs::path& data_dir, const fs::path& out_dir) {
  auto data = load_data_dir(data_dir, /*need_test=*/false);
  resolve_range(cli, data);
  cli.config.criterion = groupdir::criterion_from_name(cli.criterion);
  const auto scheme =
      groupdir::make_grouping(cli.y_min, cli.y_max, cli.config.num_groups);
  const auto result = groupdir::train(cli.config, scheme, data.splits.train,
                                      data.splits.val);

  fs::create_directories(out_dir);
  groupdir::save_checkpoint({result.params, cli.config, scheme},
                            (out_dir / "checkpoint.json").string());
  write_text(out_dir / "history.csv", groupdir::history_to_csv(result.history));
  write_manifest(out_dir, "train", train_manifest_config(cli.config, scheme),
                 {cli.config.seed}, {"checkpoint.json", "history.csv"});

  if (result.history.empty()) {
    std::cout << "trained 0 epochs (untrained checkpoint written)\n";
  } else {
    const auto& last = result.history.back();
    std::cout << "epoch " << last.epoch << ": train_mae=" << last.train_mae
              << " val_mae_cls=" << last.val_mae_cls
              << " val_mae_gt=" << last.val_mae_gt << "\n";
  }
  return 0;
}

int run_eval(const fs::path& checkpoint_path, const fs::path& test_path,
             const fs::path& train_path, const groupdir::ShotThresholds& thresholds,
             const fs::path& out_dir) {
  const auto checkpoint = groupdir::load_checkpoint(checkpoint_path.string());
  const auto test = groupdir::load_csv(test_path);
  const auto train_set = groupdir::load_csv(train_path);
  const auto counts = groupdir::group_counts(train_set.labels, checkpoint.scheme);
  const auto report = groupdir::full_report(checkpoint.params, checkpoint.scheme, test,
                                            thresholds, counts);
  fs::create_directories(out_dir);
  write_text(out_dir / "report.json", groupdir::report_to_json(report));
  const auto text = groupdir::report_to_text(report);
  write_text(out_dir / "report.txt", text);
  ordered_json config;
  config["checkpoint"] = checkpoint_path.string();
  config["data"] = test_path.string();
  config["train"] = train_path.string();
  config["many_min"] = thresholds.many_min;
  config["few_max"] = thresholds.few_max;
  write_manifest(out_dir, "eval", config, {}, {"report.json", "report.txt"});
  std::cout << text;
  return 0;
}

int run_compare(TrainCli& cli, const fs::path& data_dir, const fs::path& out_dir,
                const std::vector<std::string>& criteria,
                const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw groupdir::ConfigError("invalid-seeds");
  if (criteria.empty()) throw groupdir::ConfigError("invalid-criteria");
  auto data = load_data_dir(data_dir, /*need_test=*/true);
  resolve_range(cli, data);
  const auto scheme =
      groupdir::make_grouping(cli.y_min, cli.y_max, cli.config.num_groups);
  const auto train_counts = groupdir::group_counts(data.splits.train.labels, scheme);

  const auto total = criteria.size() * seeds.size();
  std::vector<RunMetrics> runs(total);
  std::mutex log_mutex;
  std::atomic<std::size_t> done{0};
  run_parallel(total, [&](std::size_t i) {
    const std::size_t ci = i / seeds.size();
    const std::size_t si = i % seeds.size();
    auto config = cli.config;
    config.criterion = groupdir::criterion_from_name(criteria[ci]);
    config.seed = seeds[si];
    const auto result = groupdir::train(config, scheme, data.splits.train,
                                        data.splits.val);
    runs[i] = evaluate_run(result.params, scheme, data.splits.test, train_counts);
    const std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << "done criterion=" << criteria[ci] << " seed=" << seeds[si] << " ("
              << ++done << "/" << total << ")\n";
  });

  std::ostringstream csv;
  csv << "criterion,seed," << kMetricColumns << '\n';
  for (std::size_t ci = 0; ci < criteria.size(); ++ci) {
    std::vector<RunMetrics> block;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& run = runs[ci * seeds.size() + si];
      block.push_back(run);
      csv << criteria[ci] << ',' << seeds[si];
      append_metric_fields(csv, run);
      csv << '\n';
    }
    const auto med = median_metrics(block);
    csv << criteria[ci] << ",median";
    append_metric_fields(csv, med);
    csv << '\n';
    std::cout << "criterion " << criteria[ci] << " (median of " << seeds.size()
              << "): group_acc=" << med.group_acc
              << " mean_absdiff=" << med.mean_absdiff << " mae_cls=" << med.mae_cls
              << " mae_gt=" << med.mae_gt << "\n";
  }

  fs::create_directories(out_dir);
  write_text(out_dir / "compare.csv", csv.str());
  auto config = train_manifest_config(cli.config, scheme);
  config.erase("criterion");
  config["criteria"] = criteria;
  write_manifest(out_dir, "compare", config, seeds, {"compare.csv"});
  return 0;
}

int run_sweep(TrainCli& cli, const fs::path& data_dir, const fs::path& out_dir,
              const std::vector<int>& group_counts_list,
              const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw groupdir::ConfigError("invalid-seeds");
  if (group_counts_list.empty()) throw groupdir::ConfigError("invalid-group-list");
  auto data = load_data_dir(data_dir, /*need_test=*/true);
  resolve_range(cli, data);
  cli.config.criterion = groupdir::criterion_from_name(cli.criterion);

  struct Cell {
    groupdir::GroupingScheme scheme;
    groupdir::GroupHistogram counts;
  };
  std::vector<Cell> cells;
  cells.reserve(group_counts_list.size());
  for (const int g : group_counts_list) {
    Cell cell;
    cell.scheme = groupdir::make_grouping(cli.y_min, cli.y_max, g);
    cell.counts = groupdir::group_counts(data.splits.train.labels, cell.scheme);
    cells.push_back(std::move(cell));
  }

  const auto total = group_counts_list.size() * seeds.size();
  std::vector<RunMetrics> runs(total);
  std::mutex log_mutex;
  std::atomic<std::size_t> done{0};
  run_parallel(total, [&](std::size_t i) {
    const std::size_t gi = i / seeds.size();
    const std::size_t si = i % seeds.size();
    auto config = cli.config;
    config.num_groups = group_counts_list[gi];
    config.seed = seeds[si];
    const auto result = groupdir::train(config, cells[gi].scheme, data.splits.train,
                                        data.splits.val);
    runs[i] =
        evaluate_run(result.params, cells[gi].scheme, data.splits.test, cells[gi].counts);
    const std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << "done groups=" << group_counts_list[gi] << " seed=" << seeds[si] << " ("
              << ++done << "/" << total << ")\n";
  });

  std::ostringstream csv;
  csv << "groups,seed," << kMetricColumns << '\n';
  for (std::size_t gi = 0; gi < group_counts_list.size(); ++gi) {
    std::vector<RunMetrics> block;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& run = runs[gi * seeds.size() + si];
      block.push_back(run);
      csv << group_counts_list[gi] << ',' << seeds[si];
      append_metric_fields(csv, run);
      csv << '\n';
    }
    const auto med = median_metrics(block);
    csv << group_counts_list[gi] << ",median";
    append_metric_fields(csv, med);
    csv << '\n';
    std::cout << "groups " << group_counts_list[gi] << " (median of " << seeds.size()
              << "): mae_cls=" << med.mae_cls << " mae_gt=" << med.mae_gt
              << " group_acc=" << med.group_acc << "\n";
  }

  fs::create_directories(out_dir);
  write_text(out_dir / "sweep.csv", csv.str());
  auto config = train_manifest_config(cli.config, cells.front().scheme);
  config.erase("num_groups");
  config.erase("scheme");
  config["group_list"] = group_counts_list;
  write_manifest(out_dir, "sweep-groups", config, seeds, {"sweep.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divide-and-conquer toolkit for imbalanced regression"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Create a synthetic skewed dataset");
  groupdir::SynthConfig synth;
  std::string synth_config_path;
  std::string gen_out = "data";
  auto* cfg_opt = gen->add_option("--config", synth_config_path,
                                  "Generator config JSON (overrides field flags)")
                      ->check(CLI::ExistingFile);
  std::vector<CLI::Option*> synth_field_opts = {
      gen->add_option("--y-min", synth.y_min, "Label range lower bound")
          ->capture_default_str(),
      gen->add_option("--y-max", synth.y_max, "Label range upper bound")
          ->capture_default_str(),
      gen->add_option("--skew-rate", synth.skew_rate, "Exponential tilt of train labels")
          ->capture_default_str(),
      gen->add_option("--dim", synth.feature_dim, "Feature dimension")
          ->capture_default_str(),
      gen->add_option("--fourier", synth.num_fourier, "Distinct sine components")
          ->capture_default_str(),
      gen->add_option("--noise", synth.noise_sigma, "Feature noise sigma")
          ->capture_default_str(),
      gen->add_option("--n-train", synth.n_train, "Training samples")
          ->capture_default_str(),
      gen->add_option("--n-val", synth.n_val, "Validation samples")
          ->capture_default_str(),
      gen->add_option("--n-test", synth.n_test, "Test samples")->capture_default_str(),
      gen->add_option("--seed", synth.seed, "Generator seed")->capture_default_str(),
  };
  for (auto* opt : synth_field_opts) cfg_opt->excludes(opt);
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a generated dataset");
  TrainCli train_cli;
  std::string train_data;
  std::string train_out = "run";
  train_cmd->add_option("--data", train_data, "Dataset directory (train.csv, val.csv)")
      ->required();
  train_cmd->add_option("--out", train_out, "Output directory")->capture_default_str();
  add_train_flags(train_cmd, train_cli, /*with_criterion_and_seed=*/true);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test set");
  std::string eval_checkpoint;
  std::string eval_data;
  std::string eval_train;
  std::string eval_out = "eval";
  groupdir::ShotThresholds thresholds;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint JSON")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "Test CSV")->required()->check(
      CLI::ExistingFile);
  eval_cmd
      ->add_option("--train", eval_train,
                   "Training CSV (defines many/median/few-shot categories)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--many-min", thresholds.many_min,
                       "Train count above which a group is many-shot")
      ->capture_default_str();
  eval_cmd->add_option("--few-max", thresholds.few_max,
                       "Train count below which a group is few-shot")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Output directory")->capture_default_str();

  // compare
  auto* compare_cmd =
      app.add_subcommand("compare", "Train each criterion across seeds and tabulate");
  TrainCli compare_cli;
  std::string compare_data;
  std::string compare_out = "compare";
  std::vector<std::string> compare_criteria = {"soft", "ce", "la"};
  std::vector<std::uint64_t> compare_seeds = {1, 2, 3, 4, 5};
  compare_cmd->add_option("--data", compare_data, "Dataset directory")->required();
  compare_cmd->add_option("--out", compare_out, "Output directory")
      ->capture_default_str();
  compare_cmd
      ->add_option("--criteria", compare_criteria, "Criteria to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"soft", "ce", "la"}))
      ->capture_default_str();
  compare_cmd->add_option("--seeds", compare_seeds, "Seed list (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  add_train_flags(compare_cmd, compare_cli, /*with_criterion_and_seed=*/false);

  // sweep-groups
  auto* sweep_cmd =
      app.add_subcommand("sweep-groups", "Train across group counts and tabulate");
  TrainCli sweep_cli;
  std::string sweep_data;
  std::string sweep_out = "sweep";
  std::vector<int> sweep_groups = {2, 5, 10, 20};
  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3, 4, 5};
  sweep_cmd->add_option("--data", sweep_data, "Dataset directory")->required();
  sweep_cmd->add_option("--out", sweep_out, "Output directory")->capture_default_str();
  sweep_cmd->add_option("--group-list", sweep_groups, "Group counts to sweep")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Seed list (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd
      ->add_option("--criterion", sweep_cli.criterion,
                   "Classification criterion: soft, ce, or la")
      ->check(CLI::IsMember({"soft", "ce", "la"}))
      ->capture_default_str();
  add_train_flags(sweep_cmd, sweep_cli, /*with_criterion_and_seed=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      if (!synth_config_path.empty()) {
        synth = groupdir::synth_config_from_json(read_text(synth_config_path));
      }
      return run_generate(synth, gen_out);
    }
    if (*train_cmd) return run_train(train_cli, train_data, train_out);
    if (*eval_cmd) {
      return run_eval(eval_checkpoint, eval_data, eval_train, thresholds, eval_out);
    }
    if (*compare_cmd) {
      return run_compare(compare_cli, compare_data, compare_out, compare_criteria,
                         compare_seeds);
    }
    if (*sweep_cmd) {
      return run_sweep(sweep_cli, sweep_data, sweep_out, sweep_groups, sweep_seeds);
    }
  } catch (const groupdir::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
