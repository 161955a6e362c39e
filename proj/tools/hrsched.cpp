// hrsched: dataset generation, training, evaluation and reporting.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrsched/bench/evaluate.hpp"
#include "hrsched/bench/report.hpp"
#include "hrsched/probgen/generator.hpp"
#include "hrsched/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace hrsched;

namespace {

int run_gen(const std::string& scale, int n_train, int n_test, std::uint64_t seed, const std::string& out) {
  const auto m = generate_dataset(scale_from_string(scale), n_train, n_test, seed, out);
  std::printf("wrote %zu problems (%s) to %s\n", m.problems.size(), scale.c_str(), out.c_str());
  return 0;
}

int run_train(const std::string& config_path, bool quiet) {
  const json j = read_json_file(config_path);
  const TrainConfig cfg = train_config_from_json(j);
  if (!j.contains("dataset")) throw std::invalid_argument("train config: 'dataset' is required");
  if (!j.contains("out_dir")) throw std::invalid_argument("train config: 'out_dir' is required");
  const fs::path dataset_dir = j.at("dataset").get<std::string>();
  const fs::path out = j.at("out_dir").get<std::string>();
  const bool resume = j.value("resume", false);
  fs::create_directories(out);

  const Dataset ds = load_dataset(dataset_dir);
  const fs::path ckpt_path = out / "checkpoint.json";
  const fs::path log_path = out / "train_log.csv";
  TrainerState state = resume && fs::exists(ckpt_path) ? load_trainer_state(read_json_file(ckpt_path.string()), cfg)
                                                       : make_trainer_state(cfg);
  const bool append = resume && state.epoch > 0 && fs::exists(log_path);
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  if (!append) write_log_header(log);
  write_json_file((out / "config.json").string(), to_json(cfg));

  const json meta = {{"training_scale", to_string(ds.manifest.scale)}};
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    write_log_row(log, e);
    if (!quiet && (e.epoch + 1) % 50 == 0)
      std::printf("epoch %d return %.2f feasibility %.3f grad %.3g\n", e.epoch + 1, e.mean_return, e.feasibility,
                  e.grad_norm);
  };
  hooks.on_checkpoint = [&](const TrainerState& s) {
    log.flush();
    write_json_file(ckpt_path.string(), trainer_checkpoint(s, cfg, meta));
  };
  const TrainResult r = train(state, ds.train, cfg, hooks);
  if (r.diverged) {
    std::fprintf(stderr, "error: training diverged at epoch %d (gradient norm above %g for %d epochs)\n", state.epoch,
                 cfg.grad_ceiling, cfg.divergence_patience);
    return 3;
  }
  std::printf("trained %d epochs; checkpoint %s\n", state.epoch, ckpt_path.string().c_str());
  return 0;
}

struct EvalArgs {
  std::string method = "edf";
  std::string dataset;
  std::string split = "test";
  std::string checkpoint;
  int batch = 8;
  bool stochastic = false;
  std::vector<std::uint64_t> seeds{0};
  int rounds = 4;
  int ga_generations = GaConfig{}.generations;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  const auto& problems = a.split == "train" ? ds.train : ds.test;
  if (a.split != "train" && a.split != "test") throw std::invalid_argument("--split must be train or test");
  if (problems.empty()) throw std::invalid_argument("dataset split '" + a.split + "' is empty");

  EvalConfig cfg;
  cfg.method = method_from_string(a.method);
  cfg.batch = a.batch;
  cfg.stochastic = a.stochastic;
  cfg.seeds = a.seeds;
  cfg.rounds = a.rounds;
  cfg.ga.generations = a.ga_generations;
  cfg.dataset_scale = to_string(ds.manifest.scale);

  std::optional<PolicyParameters> params;
  if (is_learned(cfg.method)) {
    if (a.checkpoint.empty()) throw std::invalid_argument("--checkpoint is required for " + a.method);
    const json ck = read_json_file(a.checkpoint);
    params = load_policy(ck);
    cfg.training_scale = ck.at("meta").value("training_scale", "");
  }
  const EvalResult res = evaluate(problems, cfg, params ? &*params : nullptr);
  if (!a.out.empty()) write_json_file(a.out, to_json(res));
  write_report_table(std::cout, build_report({res}));
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<EvalResult> results;
  for (const auto& f : inputs) results.push_back(eval_result_from_json(read_json_file(f)));
  const auto rows = build_report(results);
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    write_report_csv(os, rows);
  }
  write_report_table(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-robot team scheduling: generate, train, evaluate, report"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a problem dataset");
  std::string scale = "small", gen_out;
  int n_train = 0, n_test = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--scale", scale, "small, medium or large")->check(CLI::IsMember({"small", "medium", "large"}));
  gen->add_option("--train", n_train, "Number of training problems")->check(CLI::NonNegativeNumber);
  gen->add_option("--test", n_test, "Number of test problems")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train the policy from a JSON config");
  std::string config_path;
  bool quiet = false;
  tr->add_option("config", config_path, "Training config (JSON)")->required()->check(CLI::ExistingFile);
  tr->add_flag("-q,--quiet", quiet, "No progress output");

  auto* ev = app.add_subcommand("eval", "Evaluate a method on a dataset");
  EvalArgs ea;
  ev->add_option("--method", ea.method, "edf, ga, hybridnet or hetgat-interactive")
      ->check(CLI::IsMember({"edf", "ga", "hybridnet", "hetgat-interactive"}));
  ev->add_option("--dataset", ea.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--split", ea.split, "train or test");
  ev->add_option("--checkpoint", ea.checkpoint, "Policy checkpoint")->check(CLI::ExistingFile);
  ev->add_option("--batch", ea.batch, "Best-of-batch size for hybridnet")->check(CLI::PositiveNumber);
  ev->add_flag("--stochastic", ea.stochastic, "Stochastic human durations and noisy estimates");
  ev->add_option("--seeds", ea.seeds, "Evaluation seeds")->delimiter(',');
  ev->add_option("--rounds", ea.rounds, "Rounds per problem")->check(CLI::PositiveNumber);
  ev->add_option("--ga-generations", ea.ga_generations, "GA generations")->check(CLI::NonNegativeNumber);
  ev->add_option("--out", ea.out, "Write per-round results (JSON)");

  auto* rp = app.add_subcommand("report", "Summarize evaluation results");
  std::vector<std::string> inputs;
  std::string report_out;
  rp->add_option("inputs", inputs, "Result files from eval")->required()->check(CLI::ExistingFile);
  rp->add_option("--out", report_out, "Write the summary CSV here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_gen(scale, n_train, n_test, gen_seed, gen_out);
    if (*tr) return run_train(config_path, quiet);
    if (*ev) return run_eval(ea);
    if (*rp) return run_report(inputs, report_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
