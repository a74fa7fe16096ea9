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

#include <string>
#include <utility>
#include <vector>

#include "xr23d/bench/aggregate.hpp"

namespace xr23d::bench {

struct ShiftEntry {
  std::string subset;
  double ood_mean = 0.0;
  double delta = 0.0;  ///< in_domain_mean - ood_mean
};

/// Mean DSC in percent for in-domain and each out-of-domain subset.
struct DomainShiftReport {
  std::string model_name;
  double in_domain_mean = 0.0;
  std::vector<ShiftEntry> ood;
};

inline double mean_dsc_percent(const EvaluationRun& run) {
  if (run.rows.empty()) throw EmptyRunError("run " + run.run_id + " has no rows");
  std::vector<double> v;
  for (const auto& r : run.rows) v.push_back(r.metrics.dsc);
  return 100.0 * summarize(v).mean;
}

inline DomainShiftReport domain_shift_delta(const std::string& model_name, double in_domain_mean,
                                            const std::vector<std::pair<std::string, double>>& ood_means) {
  DomainShiftReport rep{model_name, in_domain_mean, {}};
  for (const auto& [subset, m] : ood_means) rep.ood.push_back({subset, m, in_domain_mean - m});
  return rep;
}

inline DomainShiftReport domain_shift_delta(const EvaluationRun& in_run,
                                            const std::vector<std::pair<std::string, EvaluationRun>>& ood_runs) {
  std::vector<std::pair<std::string, double>> means;
  for (const auto& [subset, run] : ood_runs) {
    if (run.model_name != in_run.model_name)
      throw ConsistencyError("domain shift compares model '" + in_run.model_name + "' with '" + run.model_name +
                             "' on subset " + subset);
    means.emplace_back(subset, mean_dsc_percent(run));
  }
  return domain_shift_delta(in_run.model_name, mean_dsc_percent(in_run), means);
}

}  // namespace xr23d::bench
