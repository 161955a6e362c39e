#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrsched/env/instance_io.hpp"
#include "hrsched/util/rng.hpp"

namespace hrsched {

enum class Scale { small, medium, large };

inline std::string to_string(Scale s) {
  switch (s) {
    case Scale::small: return "small";
    case Scale::medium: return "medium";
    case Scale::large: return "large";
  }
  return "?";
}

inline Scale scale_from_string(const std::string& s) {
  if (s == "small") return Scale::small;
  if (s == "medium") return Scale::medium;
  if (s == "large") return Scale::large;
  throw std::invalid_argument("unknown scale '" + s + "' (expected small, medium or large)");
}

struct TaskRange {
  int min = 0;
  int max = 0;
};

inline TaskRange task_range(Scale s) {
  switch (s) {
    case Scale::small: return {9, 11};
    case Scale::medium: return {18, 22};
    case Scale::large: return {36, 44};
  }
  return {0, 0};
}

/// Knobs of the random problem generator. The curve ranges and noise
/// shares are stand-ins; see README.
struct GeneratorConfig {
  int num_robots = 2;
  int num_humans = 2;
  double deadline_fraction = 0.25;
  double wait_fraction = 0.25;
  int min_wait = 1;
  int max_wait = 10;
  int min_duration = 10;
  int max_duration = 100;
  double asymptote_share_min = 0.3;
  double asymptote_share_max = 0.7;
  double beta_min = 0.2;
  double beta_max = 0.8;
  double sd_c_share = 0.1;
  double sd_k_share = 0.1;
  double sd_beta = 0.05;
};

inline constexpr int kGeneratorVersion = 1;

struct GeneratedProblem {
  ProblemInstance instance;
  int rescaled_deadlines = 0;  // deadlines raised to the task's slowest duration
};

inline GeneratedProblem generate_problem(int num_tasks, std::uint64_t seed, const GeneratorConfig& cfg = {}) {
  Rng rng(derive_seed(seed, 0x70726f62ULL));
  GeneratedProblem out;
  auto& p = out.instance.problem;
  p.num_tasks = num_tasks;
  p.num_robots = cfg.num_robots;
  p.num_humans = cfg.num_humans;
  p.durations = DurationMatrix(num_tasks, p.num_agents());
  for (TaskId t = 0; t < num_tasks; ++t)
    for (AgentId a = 0; a < p.num_agents(); ++a)
      p.durations.at(t, a) = clamp_duration(uniform_int(rng, cfg.min_duration, cfg.max_duration));

  for (TaskId t = 0; t < num_tasks; ++t) {
    if (uniform01(rng) >= cfg.deadline_fraction) continue;
    Time d = uniform_int(rng, 1, 5 * num_tasks);
    if (const Time slowest = p.durations.max_over_agents(t); d < slowest) {
      d = slowest;
      ++out.rescaled_deadlines;
    }
    p.deadlines[t] = d;
  }

  // Waits only point from a lower to a higher position, so the relation is
  // acyclic; positions are then mapped to shuffled task labels.
  const int wait_cap = static_cast<int>(std::ceil(cfg.wait_fraction * num_tasks));
  std::vector<TaskId> label(static_cast<std::size_t>(num_tasks));
  std::iota(label.begin(), label.end(), 0);
  std::shuffle(label.begin(), label.end(), rng);
  for (int j = 1; j < num_tasks && static_cast<int>(p.waits.size()) < wait_cap; ++j) {
    if (uniform01(rng) >= cfg.wait_fraction) continue;
    const int i = uniform_int(rng, 0, j - 1);
    p.waits.push_back({label[i], label[j], static_cast<Time>(uniform_int(rng, cfg.min_wait, cfg.max_wait))});
  }

  for (int h = 0; h < cfg.num_humans; ++h) {
    std::vector<CurveParams> params;
    for (TaskId t = 0; t < num_tasks; ++t) {
      const double d0 = p.durations.at(t, cfg.num_robots + h);
      const double share = std::uniform_real_distribution<double>(cfg.asymptote_share_min,
                                                                   cfg.asymptote_share_max)(rng);
      const double beta = std::uniform_real_distribution<double>(cfg.beta_min, cfg.beta_max)(rng);
      CurveParams c;
      c.c = share * d0;
      c.k = (1.0 - share) * d0;
      c.beta = beta;
      c.sd_c = cfg.sd_c_share * c.c;
      c.sd_k = cfg.sd_k_share * c.k;
      c.sd_beta = cfg.sd_beta;
      params.push_back(c);
    }
    out.instance.humans.emplace_back(std::move(params));
  }
  return out;
}

/// Task count is drawn uniformly from the scale's range.
inline GeneratedProblem generate_problem(Scale scale, std::uint64_t seed, const GeneratorConfig& cfg = {}) {
  Rng rng(derive_seed(seed, 0x73697a65ULL));
  const auto r = task_range(scale);
  return generate_problem(uniform_int(rng, r.min, r.max), seed, cfg);
}

// -- datasets ---------------------------------------------------------------

struct DatasetEntry {
  std::string split;  // "train" or "test"
  std::string file;   // relative to the dataset directory
  std::uint64_t seed = 0;
  int rescaled_deadlines = 0;
};

struct DatasetManifest {
  int generator_version = kGeneratorVersion;
  Scale scale = Scale::small;
  std::uint64_t seed = 0;
  int n_train = 0;
  int n_test = 0;
  std::vector<DatasetEntry> problems;
};

inline json to_json(const DatasetManifest& m) {
  json problems = json::array();
  for (const auto& e : m.problems)
    problems.push_back(
        json{{"split", e.split}, {"file", e.file}, {"seed", e.seed}, {"rescaled_deadlines", e.rescaled_deadlines}});
  return json{{"generator_version", m.generator_version},
              {"scale", to_string(m.scale)},
              {"seed", m.seed},
              {"n_train", m.n_train},
              {"n_test", m.n_test},
              {"problems", problems}};
}

inline DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.generator_version = j.at("generator_version").get<int>();
  m.scale = scale_from_string(j.at("scale").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_train = j.at("n_train").get<int>();
  m.n_test = j.at("n_test").get<int>();
  for (const auto& e : j.at("problems"))
    m.problems.push_back({e.at("split").get<std::string>(), e.at("file").get<std::string>(),
                          e.at("seed").get<std::uint64_t>(), e.at("rescaled_deadlines").get<int>()});
  return m;
}

inline std::uint64_t problem_seed(std::uint64_t dataset_seed, const std::string& split, int index) {
  return derive_seed(dataset_seed, split == "train" ? 1 : 2, static_cast<std::uint64_t>(index));
}

/// Writes `<out>/<split>/problem_NNNNN.json` files and `<out>/manifest.json`.
/// Every problem is generated from a seed recorded in the manifest.
inline DatasetManifest generate_dataset(Scale scale, int n_train, int n_test, std::uint64_t seed,
                                        const std::filesystem::path& out_dir, const GeneratorConfig& cfg = {}) {
  namespace fs = std::filesystem;
  if (n_train < 0 || n_test < 0) throw std::invalid_argument("generate_dataset: negative problem count");
  DatasetManifest m;
  m.scale = scale;
  m.seed = seed;
  m.n_train = n_train;
  m.n_test = n_test;
  for (const std::string split : {"train", "test"}) {
    const int count = split == "train" ? n_train : n_test;
    if (count == 0) continue;
    fs::create_directories(out_dir / split);
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "problem_%05d.json", i);
      const std::uint64_t ps = problem_seed(seed, split, i);
      auto g = generate_problem(scale, ps, cfg);
      write_json_file((out_dir / split / name).string(), to_json(g.instance));
      m.problems.push_back({split, split + "/" + name, ps, g.rescaled_deadlines});
    }
  }
  write_json_file((out_dir / "manifest.json").string(), to_json(m));
  return m;
}

/// Rewrites every problem listed in `m` under `out_dir` from its seed.
inline void regenerate_from_manifest(const DatasetManifest& m, const std::filesystem::path& out_dir,
                                     const GeneratorConfig& cfg = {}) {
  if (m.generator_version != kGeneratorVersion)
    throw std::runtime_error("manifest generator version " + std::to_string(m.generator_version) +
                             " is not supported");
  for (const auto& e : m.problems) {
    std::filesystem::create_directories((out_dir / e.file).parent_path());
    write_json_file((out_dir / e.file).string(), to_json(generate_problem(m.scale, e.seed, cfg).instance));
  }
  write_json_file((out_dir / "manifest.json").string(), to_json(m));
}

struct Dataset {
  DatasetManifest manifest;
  std::vector<ProblemInstance> train;
  std::vector<ProblemInstance> test;
};

inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  d.manifest = manifest_from_json(read_json_file((dir / "manifest.json").string()));
  for (const auto& e : d.manifest.problems) {
    auto inst = load_instance((dir / e.file).string());
    (e.split == "train" ? d.train : d.test).push_back(std::move(inst));
  }
  return d;
}

/// In-memory equivalent of generate_dataset's test split.
inline std::vector<ProblemInstance> generate_problems(Scale scale, int count, std::uint64_t seed,
                                                      const std::string& split = "test",
                                                      const GeneratorConfig& cfg = {}) {
  std::vector<ProblemInstance> out;
  for (int i = 0; i < count; ++i) out.push_back(generate_problem(scale, problem_seed(seed, split, i), cfg).instance);
  return out;
}

}  // namespace hrsched
