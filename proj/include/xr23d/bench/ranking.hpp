/*
 * xr23d: biplanar X-ray to 3D bone reconstruction benchmark toolkit
 *
 * Copyright 2026 The xr23d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "xr23d/bench/evaluation.hpp"
#include "xr23d/core/error.hpp"
#include "xr23d/core/random.hpp"

namespace xr23d::bench {

inline constexpr std::size_t kDefaultBootstrap = 1000;

/// Per-sample scores of every model on one task, aligned by sample.
struct TaskScores {
  std::string task;
  std::vector<std::string> models;
  std::vector<std::vector<double>> scores;  ///< [model][sample]
};

enum class Resampling { Bootstrap, Exhaustive };

struct TaskRanking {
  std::string task;
  std::vector<std::string> models;
  /// Rank value (1, 1.5, 2, ...) -> empirical probability, per model.
  std::vector<std::map<double, double>> distribution;
  std::vector<double> mean_rank;
  std::size_t resamples = 0;
};

struct RankingStabilityResult {
  std::size_t n_bootstrap = 0;
  std::uint64_t seed = 0;
  Resampling mode = Resampling::Bootstrap;
  std::vector<TaskRanking> tasks;
};

/// Descending ranks starting at 1; ties share the average of their ranks.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

inline void validate(const TaskScores& t) {
  if (t.models.size() < 2) throw RankingError("task " + t.task + " needs at least two models");
  if (t.scores.size() != t.models.size()) throw RankingError("task " + t.task + ": one score list per model");
  const std::size_t n = t.scores.front().size();
  if (n == 0) throw RankingError("task " + t.task + " has no samples");
  for (const auto& s : t.scores)
    if (s.size() != n) throw RankingError("task " + t.task + ": models were scored on different sample sets");
}

/// Adds the ranks of one resample (sample indices `idx`) to the tallies.
inline void tally(const TaskScores& t, const std::vector<std::size_t>& idx, TaskRanking& out) {
  std::vector<double> means(t.models.size());
  for (std::size_t m = 0; m < t.models.size(); ++m) {
    double s = 0.0;
    for (auto i : idx) s += t.scores[m][i];
    means[m] = s / double(idx.size());
  }
  const auto ranks = average_ranks(means);
  for (std::size_t m = 0; m < ranks.size(); ++m) {
    out.distribution[m][ranks[m]] += 1.0;
    out.mean_rank[m] += ranks[m];
  }
  ++out.resamples;
}

}  // namespace detail

/// Paired case resampling: every resample draws sample indices with
/// replacement and ranks the models by mean score (higher is better).
/// Exhaustive mode enumerates all n^n index tuples instead.
inline RankingStabilityResult ranking_stability(const std::vector<TaskScores>& tasks,
                                                std::size_t n_bootstrap = kDefaultBootstrap, std::uint64_t seed = 0,
                                                Resampling mode = Resampling::Bootstrap) {
  if (tasks.empty()) throw RankingError("no tasks to rank");
  if (mode == Resampling::Bootstrap && n_bootstrap == 0) throw RankingError("n_bootstrap must be positive");
  RankingStabilityResult res{n_bootstrap, seed, mode, {}};
  for (const auto& t : tasks) {
    detail::validate(t);
    const std::size_t n = t.scores.front().size();
    TaskRanking tr{t.task, t.models, std::vector<std::map<double, double>>(t.models.size()),
                   std::vector<double>(t.models.size(), 0.0), 0};
    std::vector<std::size_t> idx(n, 0);
    if (mode == Resampling::Exhaustive) {
      if (n > 8) throw RankingError("exhaustive resampling is limited to 8 samples");
      while (true) {
        detail::tally(t, idx, tr);
        std::size_t d = 0;
        while (d < n && ++idx[d] == n) idx[d++] = 0;
        if (d == n) break;
      }
    } else {
      // Fresh stream per task so adding a task never changes the others.
      Rng rng(seed);
      for (std::size_t b = 0; b < n_bootstrap; ++b) {
        for (auto& i : idx) i = static_cast<std::size_t>(uniform_index(rng, n));
        detail::tally(t, idx, tr);
      }
    }
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      for (auto& [rank, p] : tr.distribution[m]) p /= double(tr.resamples);
      tr.mean_rank[m] /= double(tr.resamples);
    }
    res.tasks.push_back(std::move(tr));
  }
  return res;
}

/// Builds ranking inputs from runs of different models: one task per
/// anatomy, samples matched by id. Lower-is-better metrics are negated.
inline std::vector<TaskScores> ranking_inputs(const std::vector<EvaluationRun>& runs,
                                              const std::string& metric = "dsc") {
  // Only overlap scores grow with quality; distances and errors shrink.
  const bool lower_better = metric != "dsc" && metric.rfind("nsd@", 0) != 0;
  std::map<std::string, TaskScores> by_task;
  std::map<std::string, std::vector<std::string>> ids;
  for (const auto& run : runs) {
    std::map<std::string, std::vector<const SampleRow*>> rows;
    for (const auto& r : run.rows) rows[r.anatomy].push_back(&r);
    for (const auto& [task, rs] : rows) {
      std::vector<std::string> these;
      std::vector<double> scores;
      for (const auto* r : rs) {
        const auto v = metric_value(*r, metric);
        if (!v) throw RankingError("sample " + r->sample_id + " has no value for " + metric);
        these.push_back(r->sample_id);
        scores.push_back(lower_better ? -*v : *v);
      }
      auto& ts = by_task[task];
      ts.task = task;
      if (ids.count(task) && ids[task] != these)
        throw RankingError("task " + task + ": model " + run.model_name + " covers a different sample set");
      ids[task] = these;
      ts.models.push_back(run.model_name);
      ts.scores.push_back(std::move(scores));
    }
  }
  std::vector<TaskScores> out;
  for (auto& [k, v] : by_task) out.push_back(std::move(v));
  return out;
}

}  // namespace xr23d::bench
