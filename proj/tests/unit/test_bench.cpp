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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "xr23d/bench/aggregate.hpp"
#include "xr23d/bench/domain_shift.hpp"
#include "xr23d/bench/evaluation.hpp"
#include "xr23d/bench/ranking.hpp"
#include "xr23d/bench/reports.hpp"
#include "xr23d/phantom/vertebra.hpp"

namespace xr23d::bench {
namespace {

namespace fs = std::filesystem;
using ingestion::Anatomy;
using ingestion::SampleRecord;
using ingestion::Split;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

BinaryMask box(std::int64_t x0, std::int64_t nx, std::int64_t ny = 4, std::int64_t nz = 4) {
  BinaryMask m(Dims{12, 12, 12}, Vec3::Ones());
  for (std::int64_t z = 4; z < 4 + nz; ++z)
    for (std::int64_t y = 4; y < 4 + ny; ++y)
      for (std::int64_t x = x0; x < x0 + nx; ++x) m(x, y, z) = 1;
  return m;
}

class Harness : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xr23d_bench_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "gt");
    fs::create_directories(dir_ / "pred");
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Writes `gts` as test-split samples s0, s1, ... plus one training sample.
  fs::path manifest(const std::vector<BinaryMask>& gts, Anatomy anatomy = Anatomy::Rib,
                    const std::vector<std::map<std::string, std::string>>& subgroups = {}) {
    std::vector<SampleRecord> recs;
    for (std::size_t i = 0; i <= gts.size(); ++i) {
      SampleRecord r;
      r.sample_id = "s" + std::to_string(i);
      r.anatomy = anatomy;
      r.source_subset = "SYN";
      r.mask_path = "gt/" + r.sample_id + ".nii.gz";
      r.ct_path = r.mask_path;
      r.split = i < gts.size() ? Split::Test : Split::Train;
      if (i < subgroups.size()) r.subgroup = subgroups[i];
      write_volume(i < gts.size() ? gts[i] : box(2, 2), dir_ / r.mask_path);
      recs.push_back(r);
    }
    ingestion::write_manifest(recs, dir_ / "manifest.jsonl");
    return dir_ / "manifest.jsonl";
  }
  void predict(std::size_t i, const BinaryMask& m) { write_volume(m, dir_ / "pred" / ("s" + std::to_string(i) + ".nii.gz")); }

  fs::path dir_;
};

TEST_F(Harness, PerfectPredictions) {
  const std::vector<BinaryMask> gts{box(2, 4), box(5, 3), box(3, 6)};
  const auto m = manifest(gts);
  for (std::size_t i = 0; i < gts.size(); ++i) predict(i, gts[i]);
  const auto run = evaluate_run(m, dir_ / "pred", "copy");
  ASSERT_EQ(run.rows.size(), 3u);  // training sample excluded
  const auto all = aggregate(run, {}).front();
  EXPECT_EQ(all.stats.at("dsc").mean, 1.0);
  EXPECT_EQ(all.stats.at("hd95_mm").mean, 0.0);
  EXPECT_EQ(all.stats.at("asd_mm").mean, 0.0);
  EXPECT_EQ(all.stats.at("nsd@1.5mm").mean, 1.0);
  EXPECT_TRUE(run.missing.empty());
}

TEST_F(Harness, EmptyPredictionsAreFlagged) {
  const std::vector<BinaryMask> gts{box(2, 4), box(5, 3)};
  const auto m = manifest(gts);
  for (std::size_t i = 0; i < gts.size(); ++i) predict(i, gts[i].like<std::uint8_t>());
  const auto run = evaluate_run(m, dir_ / "pred", "empty");
  for (const auto& r : run.rows) {
    EXPECT_EQ(r.metrics.dsc, 0.0);
    EXPECT_EQ(r.metrics.degenerate, metrics::Degenerate::EmptyPred);
  }
  EXPECT_EQ(aggregate(run, {}).front().stats.at("dsc").mean, 0.0);
}

TEST_F(Harness, KnownDiceMix) {
  // 64-voxel box against itself (1), shifted by one (48 shared: 0.75) and
  // its left half (32 shared: 2/3).
  const std::vector<BinaryMask> gts{box(2, 4), box(2, 4), box(2, 4)};
  const auto m = manifest(gts);
  predict(0, box(2, 4));
  predict(1, box(3, 4));
  predict(2, box(2, 2));
  const auto run = evaluate_run(m, dir_ / "pred", "mix");
  EXPECT_NEAR(run.rows[1].metrics.dsc, 0.75, 1e-12);
  EXPECT_NEAR(run.rows[2].metrics.dsc, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(aggregate(run, {}).front().stats.at("dsc").mean, (1.0 + 0.75 + 2.0 / 3.0) / 3.0, 1e-9);
}

TEST_F(Harness, MissingPredictionPenalized) {
  const std::vector<BinaryMask> gts{box(2, 4), box(5, 3)};
  const auto m = manifest(gts);
  predict(0, gts[0]);
  const auto run = evaluate_run(m, dir_ / "pred", "partial");
  ASSERT_EQ(run.rows.size(), 2u);
  EXPECT_TRUE(run.rows[1].prediction_missing);
  EXPECT_EQ(run.rows[1].metrics.dsc, 0.0);
  EXPECT_EQ(run.missing, std::vector<std::string>{"s1"});
  EXPECT_NEAR(aggregate(run, {}).front().stats.at("dsc").mean, 0.5, 1e-12);

  fs::remove(dir_ / "pred" / "s0.nii.gz");
  EXPECT_THROW(evaluate_run(m, dir_ / "pred", "none"), EmptyRunError);
}

TEST_F(Harness, ThreadCountDoesNotChangeRows) {
  std::vector<BinaryMask> gts;
  for (int i = 0; i < 6; ++i) gts.push_back(box(1 + i, 3 + i % 3));
  const auto m = manifest(gts);
  for (std::size_t i = 0; i < gts.size(); ++i) predict(i, box(2 + int(i) % 4, 4));
  EvalOptions one, four;
  four.threads = 4;
  const auto a = evaluate_run(m, dir_ / "pred", "t", one), b = evaluate_run(m, dir_ / "pred", "t", four);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(per_sample_csv(a), per_sample_csv(b));
}

TEST_F(Harness, VertebraMorphometryErrors) {
  const auto gt = phantom::make_vertebra_phantom();
  const auto m = manifest({gt}, Anatomy::Vertebra);
  predict(0, phantom::make_vertebra_phantom({17, Vec3::Ones()}));
  const auto run = evaluate_run(m, dir_ / "pred", "v");
  const auto e = run.rows[0].morphometry.at("vcl_mm");
  ASSERT_TRUE(e);
  EXPECT_NEAR(*e, 3.0, 0.1);
  const auto cols = metric_columns(run);
  EXPECT_NE(std::find(cols.begin(), cols.end(), "vcl_mm"), cols.end());
}

EvaluationRun dsc_run(const std::vector<std::pair<double, std::map<std::string, std::string>>>& rows,
                      std::string model = "m") {
  EvaluationRun run;
  run.model_name = run.run_id = std::move(model);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SampleRow r;
    r.sample_id = "s" + std::to_string(i);
    r.anatomy = "vertebra";
    r.metrics.dsc = rows[i].first;
    r.subgroup = rows[i].second;
    run.rows.push_back(r);
  }
  return run;
}

TEST(Aggregate, SeverityGroups) {
  const auto run = dsc_run({{0.6, {{"severity", "severe"}}},
                            {0.6, {{"severity", "severe"}}},
                            {0.9, {{"severity", "mild"}}},
                            {0.9, {{"severity", "mild"}}}});
  const auto g = aggregate(run, {"severity"});
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[0].value, "all");
  EXPECT_NEAR(g[0].stats.at("dsc").mean, 0.75, 1e-12);
  EXPECT_EQ(g[1].value, "mild");
  EXPECT_NEAR(g[1].stats.at("dsc").mean, 0.9, 1e-12);
  EXPECT_NEAR(g[1].stats.at("dsc").std, 0.0, 1e-12);
  EXPECT_EQ(g[2].value, "severe");
  EXPECT_NEAR(g[2].stats.at("dsc").mean, 0.6, 1e-12);
  // Sample std of {.6, .6, .9, .9}.
  EXPECT_NEAR(g[0].stats.at("dsc").std, std::sqrt(4 * 0.0225 / 3), 1e-12);
}

TEST(Aggregate, UnknownAndSingleGroup) {
  const auto run = dsc_run({{0.5, {{"level", "L1"}}}, {0.7, {}}, {0.9, {{"level", ""}}}});
  const auto g = aggregate(run, {"level"});
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[2].value, "unknown");
  EXPECT_EQ(g[2].samples, 2u);
  const auto one = aggregate(dsc_run({{0.5, {{"k", "a"}}}, {0.7, {{"k", "a"}}}}), {"k"});
  EXPECT_NEAR(one[1].stats.at("dsc").mean, one[0].stats.at("dsc").mean, 1e-15);
}

TEST(Aggregate, AllRowIsWeightedMeanOfAnyDisaggregation) {
  Rng rng(3);
  std::vector<std::pair<double, std::map<std::string, std::string>>> rows;
  for (int i = 0; i < 57; ++i)
    rows.push_back({uniform_unit(rng),
                    {{"a", std::to_string(uniform_index(rng, 3))}, {"b", std::to_string(uniform_index(rng, 5))}}});
  const auto g = aggregate(dsc_run(rows), {"a", "b"});
  for (const std::string key : {"a", "b"}) {
    double weighted = 0.0;
    std::size_t n = 0;
    for (const auto& s : g)
      if (s.key == key) weighted += s.stats.at("dsc").mean * double(s.samples), n += s.samples;
    EXPECT_EQ(n, 57u);
    EXPECT_NEAR(weighted / double(n), g[0].stats.at("dsc").mean, 1e-9);
  }
}

TEST(DomainShift, ReportedDelta) {
  const auto rep = domain_shift_delta("ModelA", 85.78, {{"OOD", 77.68}});
  ASSERT_EQ(rep.ood.size(), 1u);
  EXPECT_NEAR(rep.ood[0].delta, 85.78 - 77.68, 1e-9);
  EXPECT_NEAR(rep.ood[0].delta, 8.09, 0.01 + 1e-9);
  EXPECT_EQ(format_fixed(rep.ood[0].delta), "8.10");
  // Swapping roles flips the sign.
  const auto back = domain_shift_delta("ModelA", 77.68, {{"ID", 85.78}});
  EXPECT_NEAR(back.ood[0].delta, -rep.ood[0].delta, 1e-12);
}

TEST(DomainShift, RunsAndMismatch) {
  const auto in = dsc_run({{0.9, {}}, {0.8, {}}});
  const auto ood_a = dsc_run({{0.7, {}}, {0.6, {}}}), ood_b = dsc_run({{0.9, {}}, {0.8, {}}});
  const auto rep = domain_shift_delta(in, {{"A", ood_a}, {"B", ood_b}});
  ASSERT_EQ(rep.ood.size(), 2u);
  EXPECT_NEAR(rep.in_domain_mean, 85.0, 1e-9);
  EXPECT_NEAR(rep.ood[0].delta, 20.0, 1e-9);
  EXPECT_NEAR(rep.ood[1].delta, 0.0, 1e-12);
  const auto csv = domain_shift_csv({rep});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "Method,In-domain Dice(%),A Dice(%),Delta A,B Dice(%),Delta B");
  EXPECT_THROW(domain_shift_delta(in, {{"A", dsc_run({{0.5, {}}}, "other")}}), ConsistencyError);
}

TEST(Ranking, AverageRanks) {
  EXPECT_EQ(average_ranks({0.9, 0.5, 0.7}), (std::vector<double>{1, 3, 2}));
  EXPECT_EQ(average_ranks({0.5, 0.5, 0.9}), (std::vector<double>{2.5, 2.5, 1}));
  EXPECT_EQ(average_ranks({1, 1, 1}), (std::vector<double>{2, 2, 2}));
}

TEST(Ranking, DominanceAndTies) {
  TaskScores t{"femur", {"A", "B", "C"}, {{0.9, 0.8, 0.95, 0.7}, {0.5, 0.4, 0.6, 0.3}, {0.5, 0.4, 0.6, 0.3}}};
  const auto r = ranking_stability({t}, 500, 0);
  const auto& tr = r.tasks[0];
  EXPECT_EQ(tr.distribution[0].at(1.0), 1.0);
  EXPECT_EQ(tr.distribution[1].at(2.5), 1.0);
  EXPECT_EQ(tr.distribution[2].at(2.5), 1.0);
  EXPECT_EQ(tr.resamples, 500u);
}

/// Independent oracle: rank = 1 + #strictly better + #tied others / 2, over
/// every one of the n^n resamples.
std::vector<std::map<double, double>> exhaustive_oracle(const std::vector<std::vector<double>>& s) {
  const std::size_t n = s[0].size(), m = s.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= n;
  std::vector<std::map<double, double>> out(m);
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<double> sums(m, 0.0);
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i, c /= n)
      for (std::size_t k = 0; k < m; ++k) sums[k] += s[k][c % n];
    for (std::size_t k = 0; k < m; ++k) {
      double rank = 1.0;
      for (std::size_t o = 0; o < m; ++o)
        if (o != k) rank += sums[o] > sums[k] ? 1.0 : (sums[o] == sums[k] ? 0.5 : 0.0);
      out[k][rank] += 1.0 / double(total);
    }
  }
  return out;
}

TEST(Ranking, ExhaustiveMatchesOracle) {
  // Scores in quarters keep every resample sum exact.
  TaskScores t{"hip", {"A", "B", "C"}, {{0.75, 0.25, 0.5, 1.0}, {0.5, 0.5, 0.75, 0.5}, {1.0, 0.0, 0.25, 0.75}}};
  const auto r = ranking_stability({t}, 0, 0, Resampling::Exhaustive);
  const auto oracle = exhaustive_oracle(t.scores);
  const auto& tr = r.tasks[0];
  EXPECT_EQ(tr.resamples, 256u);
  for (std::size_t k = 0; k < 3; ++k) {
    ASSERT_EQ(tr.distribution[k].size(), oracle[k].size());
    double total = 0.0;
    for (const auto& [rank, p] : oracle[k]) {
      EXPECT_NEAR(tr.distribution[k].at(rank), p, 1e-12) << k << " rank " << rank;
      total += tr.distribution[k].at(rank);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  // Bootstrap converges on the same distribution.
  const auto boot = ranking_stability({t}, 20000, 7);
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& [rank, p] : oracle[k]) {
      const auto& d = boot.tasks[0].distribution[k];
      EXPECT_NEAR(d.count(rank) ? d.at(rank) : 0.0, p, 0.02);
    }
}

TEST(Ranking, DeterministicAndValidated) {
  TaskScores t{"rib", {"A", "B"}, {{0.5, 0.6, 0.7}, {0.55, 0.65, 0.6}}};
  EXPECT_EQ(to_json(ranking_stability({t}, 300, 5)).dump(), to_json(ranking_stability({t}, 300, 5)).dump());
  EXPECT_THROW(ranking_stability({TaskScores{"x", {"A"}, {{0.5}}}}), RankingError);
  EXPECT_THROW(ranking_stability({TaskScores{"x", {"A", "B"}, {{0.5}, {0.5, 0.6}}}}), RankingError);
}

TEST(Ranking, InputsFromRuns) {
  const auto a = dsc_run({{0.9, {}}, {0.8, {}}}, "A"), b = dsc_run({{0.7, {}}, {0.6, {}}}, "B");
  const auto in = ranking_inputs({a, b});
  ASSERT_EQ(in.size(), 1u);
  EXPECT_EQ(in[0].models, (std::vector<std::string>{"A", "B"}));
  const auto r = ranking_stability(in);
  EXPECT_EQ(r.tasks[0].distribution[0].at(1.0), 1.0);
  EXPECT_THROW(ranking_inputs({a, dsc_run({{0.7, {}}}, "C")}), RankingError);
}

TEST_F(Harness, ReportsAreDeterministic) {
  const std::vector<BinaryMask> gts{box(2, 4), box(5, 3), box(3, 6)};
  const auto m = manifest(gts, Anatomy::Rib, {{{"shape", "wedge"}}, {{"shape", "normal"}}, {}});
  predict(0, box(3, 4));
  predict(1, gts[1]);
  const auto run = evaluate_run(m, dir_ / "pred", "UNet");
  const auto p1 = emit_reports(run, {"shape"}, dir_ / "r1", "Synth");
  const auto p2 = emit_reports(run, {"shape"}, dir_ / "r2", "Synth");
  for (const auto& [a, b] : {std::pair{p1.per_sample, p2.per_sample}, {p1.groups, p2.groups},
                             {p1.long_format, p2.long_format}, {p1.summary, p2.summary}, {p1.summary_table, p2.summary_table}})
    EXPECT_EQ(slurp(a), slurp(b)) << a;

  const auto per_sample = slurp(p1.per_sample);
  EXPECT_EQ(std::count(per_sample.begin(), per_sample.end(), '\n'), 1 + 3);
  const auto table = slurp(p1.summary_table);
  EXPECT_EQ(table.substr(0, table.find('\n')), "Dataset,Method,Dice(%),HD95(mm),ASD(mm),NSD@1.5mm");
  const auto summary = nlohmann::json::parse(slurp(p1.summary));
  EXPECT_EQ(summary["schema_version"], kSummarySchemaVersion);
  EXPECT_EQ(summary["missing_predictions"], nlohmann::json::array({"s2"}));

  const auto back = run_from_json(to_json(run));
  EXPECT_EQ(to_json(back).dump(), to_json(run).dump());
  EXPECT_EQ(per_sample_csv(back), per_sample_csv(run));

  std::ofstream(dir_ / "file") << "x";
  EXPECT_THROW(emit_reports(run, {}, dir_ / "file" / "sub"), IoError);
}

TEST(Reports, SummaryTableRounding) {
  auto run = dsc_run({{0.93641, {}}, {0.93641, {}}}, "ModelA");
  for (auto& r : run.rows) r.metrics.hd95 = 3.3249, r.metrics.asd = 0.9351, r.metrics.nsd = 0.8466;
  const auto t = summary_table_csv({run}, "Femur");
  EXPECT_EQ(t.substr(t.find('\n') + 1), "Femur,ModelA,93.64,3.32,0.94,0.85\n");
}

}  // namespace
}  // namespace xr23d::bench
