#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "hrsched/bench/evaluate.hpp"

namespace hrsched {

/// Metrics of one seed, averaged over all rounds of all problems.
struct SeedMetrics {
  std::uint64_t seed = 0;
  double feasibility = 0.0;        // percent of fully feasible rounds
  double adjusted_makespan = 0.0;
};

inline std::vector<SeedMetrics> per_seed_metrics(const std::vector<RoundRecord>& rounds) {
  std::map<std::uint64_t, std::vector<const RoundRecord*>> by_seed;
  std::vector<std::uint64_t> order;
  for (const auto& r : rounds) {
    auto [it, fresh] = by_seed.try_emplace(r.seed);
    if (fresh) order.push_back(r.seed);
    it->second.push_back(&r);
  }
  std::vector<SeedMetrics> out;
  for (auto seed : order) {
    const auto& recs = by_seed[seed];
    SeedMetrics m;
    m.seed = seed;
    double feas = 0.0, adj = 0.0;
    for (const auto* r : recs) {
      feas += r->feasible ? 1.0 : 0.0;
      adj += r->adjusted_makespan();
    }
    m.feasibility = 100.0 * feas / static_cast<double>(recs.size());
    m.adjusted_makespan = adj / static_cast<double>(recs.size());
    out.push_back(m);
  }
  return out;
}

struct Summary {
  double mean = 0.0;
  std::optional<double> spread;  // sem or sd; absent with fewer than two values
};

/// Mean with the standard error of the mean (sample sd / sqrt(n)).
inline Summary mean_sem(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.spread = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  return s;
}

/// Mean with the sample standard deviation.
inline Summary mean_sd(const std::vector<double>& xs) {
  Summary s = mean_sem(xs);
  if (s.spread) *s.spread *= std::sqrt(static_cast<double>(xs.size()));
  return s;
}

struct ReportRow {
  std::string method;
  std::string training_scale;
  int batch = 0;
  std::string dataset_scale;
  bool stochastic = false;
  int seeds = 0;
  Summary adjusted_makespan;  // across seeds, sem
  Summary feasibility;        // across seeds, sem
  Summary runtime;            // across all per-problem runtimes, sd
};

namespace report_detail {

inline int scale_rank(const std::string& s) {
  if (s == "small") return 0;
  if (s == "medium") return 1;
  if (s == "large") return 2;
  return 3;
}

}  // namespace report_detail

/// Pools runs sharing (method, training scale, batch, dataset scale, mode)
/// and summarizes them. Rows are sorted by dataset scale, then method.
inline std::vector<ReportRow> build_report(const std::vector<EvalResult>& results) {
  using Key = std::tuple<std::string, std::string, int, std::string, bool>;
  std::map<Key, std::pair<std::vector<RoundRecord>, std::vector<double>>> pooled;
  std::map<Key, std::set<std::uint64_t>> seen;
  for (const auto& r : results) {
    const Key k{r.method, r.training_scale, r.batch, r.dataset_scale, r.stochastic};
    std::set<std::uint64_t> seeds;
    for (const auto& x : r.rounds) seeds.insert(x.seed);
    for (auto s : seeds)
      if (!seen[k].insert(s).second)
        throw std::invalid_argument("report: seed " + std::to_string(s) + " appears twice for method " + r.method);
    auto& p = pooled[k];
    p.first.insert(p.first.end(), r.rounds.begin(), r.rounds.end());
    p.second.insert(p.second.end(), r.runtime.begin(), r.runtime.end());
  }
  std::vector<ReportRow> rows;
  for (const auto& [k, p] : pooled) {
    ReportRow row;
    std::tie(row.method, row.training_scale, row.batch, row.dataset_scale, row.stochastic) = k;
    const auto ms = per_seed_metrics(p.first);
    std::vector<double> feas, adj;
    for (const auto& m : ms) {
      feas.push_back(m.feasibility);
      adj.push_back(m.adjusted_makespan);
    }
    row.seeds = static_cast<int>(ms.size());
    row.feasibility = mean_sem(feas);
    row.adjusted_makespan = mean_sem(adj);
    row.runtime = mean_sd(p.second);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    const auto ka = std::make_tuple(report_detail::scale_rank(a.dataset_scale), a.dataset_scale, a.method,
                                    a.training_scale, a.batch, a.stochastic);
    const auto kb = std::make_tuple(report_detail::scale_rank(b.dataset_scale), b.dataset_scale, b.method,
                                    b.training_scale, b.batch, b.stochastic);
    return ka < kb;
  });
  return rows;
}

namespace report_detail {

inline std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}
inline std::string fmt(const std::optional<double>& v, int prec = 6) { return v ? fmt(*v, prec) : ""; }
inline std::string batch_label(int b) { return b > 0 ? std::to_string(b) : ""; }

}  // namespace report_detail

inline void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  using report_detail::fmt;
  os << "method,training_scale,batch,dataset_scale,stochastic,seeds,adjusted_makespan_mean,adjusted_makespan_sem,"
        "feasibility_mean,feasibility_sem,runtime_mean,runtime_sd\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.training_scale << ',' << report_detail::batch_label(r.batch) << ','
       << r.dataset_scale << ',' << (r.stochastic ? 1 : 0) << ',' << r.seeds << ','
       << fmt(r.adjusted_makespan.mean, 10) << ',' << fmt(r.adjusted_makespan.spread, 10) << ','
       << fmt(r.feasibility.mean, 10) << ',' << fmt(r.feasibility.spread, 10) << ',' << fmt(r.runtime.mean, 10)
       << ',' << fmt(r.runtime.spread, 10) << '\n';
  }
}

inline void write_report_table(std::ostream& os, const std::vector<ReportRow>& rows) {
  auto pm = [](const Summary& s, int prec) {
    char buf[96];
    if (s.spread)
      std::snprintf(buf, sizeof buf, "%.*f +- %.*f", prec, s.mean, prec, *s.spread);
    else
      std::snprintf(buf, sizeof buf, "%.*f", prec, s.mean);
    return std::string(buf);
  };
  char line[256];
  std::snprintf(line, sizeof line, "%-19s %-6s %-5s %-7s %-5s %-22s %-18s %-20s\n", "method", "train", "batch",
                "dataset", "stoch", "adjusted makespan", "feasibility %", "runtime s");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-19s %-6s %-5s %-7s %-5s %-22s %-18s %-20s\n", r.method.c_str(),
                  r.training_scale.c_str(), report_detail::batch_label(r.batch).c_str(), r.dataset_scale.c_str(),
                  r.stochastic ? "yes" : "no", pm(r.adjusted_makespan, 2).c_str(), pm(r.feasibility, 2).c_str(),
                  pm(r.runtime, 4).c_str());
    os << line;
  }
}

}  // namespace hrsched
