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


#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xr23d/xr23d.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace xr23d;

namespace {

struct Global {
  unsigned threads = 0;
  std::uint64_t seed = 0;
  unsigned effective_threads() const { return threads ? threads : std::max(1u, std::thread::hardware_concurrency()); }
};

struct IngestArgs {
  std::string root, out, ingest_config;
};

struct DrrArgs {
  std::string manifest, ct, out, mode = "mean";
  std::vector<std::string> samples;
  double angle = 90.0;
  std::vector<double> series;
  std::vector<double> window{-1000.0, 2000.0};
  std::vector<std::int64_t> size;
  bool misalignment = false;
};

struct EvalArgs {
  std::string manifest, pred, out, model = "model", split = "test", dataset;
  double tau = metrics::kDefaultTau;
  std::vector<std::string> groupby;
  bool no_morph = false;
};

struct MorphArgs {
  std::string mask, anatomy, out, localization, sample_id;
  std::optional<double> mid_plane_x;
};

struct ReportArgs {
  std::vector<std::string> runs, ood;
  std::string in_domain, out, dataset = "dataset", metric = "dsc";
  std::size_t bootstrap = bench::kDefaultBootstrap;
  bool exhaustive = false;
};

struct PhantomArgs {
  std::string out;
  double nsa = 130.0, noise = 0.0, spacing = 1.0;
  std::int64_t size = 128;
  std::string side = "right";
  std::int64_t asis_dy = 0, asis_dz = 0;
  std::int64_t canal_ap = 14;
  bool solid = false;
  int cases = 6;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

std::string toml_value(const CLI::Option* opt) {
  std::vector<std::string> vals = opt->results();
  if (vals.empty()) vals = {opt->get_default_str()};
  if (vals.size() == 1 && vals[0].size() > 1 && vals[0].front() == '[' && vals[0].back() == ']') {
    // Captured vector defaults arrive as "[a,b]".
    const std::string inner = vals[0].substr(1, vals[0].size() - 2);
    vals = CLI::detail::split(inner, ',');
  }
  const bool many = vals.size() > 1 || opt->get_expected_max() > 1;
  std::string out = many ? "[" : "";
  for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? ", " : "") + CLI::detail::convert_arg_for_ini(vals[i]);
  return many ? out + "]" : out;
}

void echo_options(const CLI::App* app, std::string& out) {
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (opt->get_lnames().empty() || name == "help" || name == "config") continue;
    if (opt->count() == 0 && opt->get_default_str().empty()) continue;
    out += name + " = " + toml_value(opt) + "\n";
  }
}

/// Every run echoes its resolved options (the global ones plus the active
/// subcommand chain); feeding the file back through --config reproduces
/// the run.
void echo_config(const CLI::App& app, const fs::path& dir) {
  std::string text;
  echo_options(&app, text);
  std::string section;
  const CLI::App* cur = &app;
  while (true) {
    const auto subs = cur->get_subcommands();
    if (subs.empty()) break;
    cur = subs.front();
    section += (section.empty() ? "" : ".") + cur->get_name();
    text += "\n[" + section + "]\n";
    echo_options(cur, text);
  }
  write_text(dir / "effective_config.toml", text);
}

void status(const std::string& command, const Global& g, ordered_json extra = ordered_json::object()) {
  ordered_json j;
  j["command"] = command;
  j["seed"] = g.seed;
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::cout << j.dump() << std::endl;
}

/// XR23D_<SUBCOMMAND>_<OPTION> for every long option below `app`.
void bind_env(CLI::App* app, const std::string& prefix) {
  for (CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (opt->get_lnames().empty() || name == "help") continue;
    std::string env = prefix + "_" + name;
    for (auto& c : env) c = c == '-' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
    opt->envname(env);
  }
  for (CLI::App* sub : app->get_subcommands({})) bind_env(sub, prefix + "_" + sub->get_name());
}

void run_ingest(const CLI::App& app, const Global& g, const IngestArgs& a, bool seed_given) {
  ingestion::IngestConfig cfg;
  fs::path cfg_path = a.ingest_config;
  if (cfg_path.empty() && fs::exists(fs::path(a.root) / "ingest.toml")) cfg_path = fs::path(a.root) / "ingest.toml";
  cfg = cfg_path.empty() ? ingestion::default_config() : ingestion::load_config(cfg_path);
  if (seed_given) cfg.split.seed = g.seed;
  const fs::path out(a.out);
  fs::create_directories(out);
  const auto res = ingestion::build_manifest(a.root, cfg, out, g.effective_threads());
  ingestion::write_manifest(res.records, out / "manifest.jsonl");
  ingestion::write_skip_report(res.skipped, out / "skipped.jsonl");
  echo_config(app, out);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  Global shown = g;
  shown.seed = cfg.split.seed;
  status("ingest", shown, {{"records", res.records.size()}, {"skipped", res.skipped.size()},
                           {"manifest", (out / "manifest.jsonl").string()}});
}

void write_drr(const drr::DrrImage& img, const fs::path& stem) {
  drr::write_pgm16(img, stem.string() + ".pgm");
  drr::write_png8(img, stem.string() + ".png");
  drr::write_sidecar(img, stem.string() + ".json");
}

std::string angle_tag(double a) { return format_exact(a); }

void run_drr(const CLI::App& app, const Global& g, const DrrArgs& a) {
  drr::ProjectionSpec base;
  base.intensity = drr::intensity_mode_from_string(a.mode);
  if (a.window.size() != 2) throw ConfigError("--window takes lo,hi");
  base.hu_lo = a.window[0];
  base.hu_hi = a.window[1];
  if (!a.size.empty()) {
    if (a.size.size() != 2) throw ConfigError("--size takes rows,cols");
    base.output_size = std::pair{a.size[0], a.size[1]};
  }
  base.lat_angle_deg = a.angle;
  base.validate();

  std::vector<std::pair<std::string, fs::path>> inputs;
  if (!a.ct.empty()) {
    std::string id = fs::path(a.ct).filename().string();
    for (const char* ext : {".nii.gz", ".nii"})
      if (id.size() > std::string(ext).size() && id.ends_with(ext)) id.resize(id.size() - std::string(ext).size());
    inputs.emplace_back(id, a.ct);
  } else {
    if (a.manifest.empty()) throw ConfigError("drr needs --manifest or --ct");
    const auto recs = ingestion::read_manifest(a.manifest);
    for (const auto& r : recs)
      if (a.samples.empty() || std::find(a.samples.begin(), a.samples.end(), r.sample_id) != a.samples.end())
        inputs.emplace_back(r.sample_id, ingestion::resolve(a.manifest, r.ct_path));
    if (inputs.empty()) throw ConfigError("no manifest sample matches --sample");
  }
  const fs::path out(a.out);
  fs::create_directories(out);
  std::size_t images = 0;
  for (const auto& [id, path] : inputs) {
    const VoxelGrid ct = read_volume<float>(path);
    const auto pair = drr::make_biplanar(ct, a.angle, base, g.effective_threads());
    write_drr(pair.ap, out / (id + "_ap"));
    write_drr(pair.lat, out / (id + "_lat"));
    images += 2;
    std::vector<double> series = a.series;
    if (a.misalignment)
      for (double x : drr::default_misalignment_angles())
        if (std::find(series.begin(), series.end(), x) == series.end()) series.push_back(x);
    if (!series.empty())
      for (const auto& p : drr::misalignment_series(ct, series, base, g.effective_threads())) {
        write_drr(p.lat, out / (id + "_lat" + angle_tag(p.lat_angle_deg)));
        ++images;
      }
  }
  echo_config(app, out);
  status("drr", g, {{"samples", inputs.size()}, {"images", images}, {"out", out.string()}});
}

void run_eval(const CLI::App& app, const Global& g, const EvalArgs& a) {
  bench::EvalOptions opt;
  opt.tau = a.tau;
  opt.threads = g.effective_threads();
  opt.morphometry = !a.no_morph;
  opt.split = ingestion::split_from_string(a.split);
  const auto run = bench::evaluate_run(a.manifest, a.pred, a.model, opt);
  const fs::path out(a.out);
  const auto paths = bench::emit_reports(run, a.groupby, out, a.dataset);
  write_text(out / (a.model + "_run.json"), bench::to_json(run).dump(2) + "\n");
  echo_config(app, out);
  status("eval", g, {{"samples", run.rows.size()}, {"missing", run.missing.size()},
                     {"summary", paths.summary.string()}});
}

std::string strip_nii(std::string s) {
  for (const char* ext : {".nii.gz", ".nii"})
    if (s.ends_with(ext)) return s.substr(0, s.size() - std::string(ext).size());
  return s;
}

void run_morph(const CLI::App& app, const Global& g, const MorphArgs& a) {
  const auto anatomy = ingestion::anatomy_from_string(a.anatomy);
  const BinaryMask mask = read_volume<std::uint8_t>(a.mask);
  ordered_json j;
  j["mask"] = a.mask;
  j["anatomy"] = ingestion::to_string(anatomy);
  switch (anatomy) {
    case ingestion::Anatomy::Femur: {
      std::optional<morph::FemurLocalization> loc;
      if (!a.localization.empty()) {
        const auto all = morph::read_localizations(a.localization);
        const std::string id = a.sample_id.empty() ? strip_nii(fs::path(a.mask).filename().string()) : a.sample_id;
        if (const auto it = all.find(id); it != all.end()) loc = it->second;
        else if (all.size() == 1) loc = all.begin()->second;
        else throw ConfigError("no localisation entry for " + id);
      }
      j["measurements"] = morph::to_json(morph::analyze_femur(mask, loc));
      break;
    }
    case ingestion::Anatomy::Hip:
      j["measurements"] = morph::to_json(morph::extract_pelvic_landmarks(mask, a.mid_plane_x));
      break;
    case ingestion::Anatomy::Vertebra:
      j["measurements"] = morph::to_json(morph::vertebra_morphometry(mask));
      break;
    case ingestion::Anatomy::Rib:
      throw UnsupportedError("no morphometry is defined for ribs");
  }
  const fs::path out(a.out);
  write_text(out, j.dump(2) + "\n");
  echo_config(app, out.has_parent_path() ? out.parent_path() : fs::path("."));
  status("morph", g, {{"out", out.string()}});
}

bench::EvaluationRun load_run(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read run file " + p.string());
  try {
    return bench::run_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("malformed run file " + p.string() + ": " + e.what());
  }
}

void run_report(const CLI::App& app, const Global& g, const ReportArgs& a) {
  const fs::path out(a.out);
  fs::create_directories(out);
  std::vector<bench::EvaluationRun> runs;
  for (const auto& p : a.runs) runs.push_back(load_run(p));
  ordered_json produced = ordered_json::array();
  if (!runs.empty()) {
    write_text(out / "summary_table.csv", bench::summary_table_csv(runs, a.dataset));
    produced.push_back("summary_table.csv");
  }
  if (runs.size() >= 2) {
    const auto ranking =
        bench::ranking_stability(bench::ranking_inputs(runs, a.metric), a.bootstrap, g.seed,
                                 a.exhaustive ? bench::Resampling::Exhaustive : bench::Resampling::Bootstrap);
    write_text(out / "ranking.json", bench::to_json(ranking).dump(2) + "\n");
    write_text(out / "ranking.csv", bench::ranking_csv(ranking));
    produced.push_back("ranking.json");
    produced.push_back("ranking.csv");
  }
  if (!a.in_domain.empty()) {
    std::vector<std::pair<std::string, bench::EvaluationRun>> ood;
    for (const auto& spec : a.ood) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--ood takes NAME=RUN_JSON, got " + spec);
      ood.emplace_back(spec.substr(0, eq), load_run(spec.substr(eq + 1)));
    }
    if (ood.empty()) throw ConfigError("--in-domain needs at least one --ood run");
    const auto rep = bench::domain_shift_delta(load_run(a.in_domain), ood);
    write_text(out / "domain_shift.csv", bench::domain_shift_csv({rep}));
    produced.push_back("domain_shift.csv");
  }
  if (produced.empty()) throw ConfigError("report needs --run or --in-domain inputs");
  echo_config(app, out);
  status("report", g, {{"files", produced}});
}

void run_phantom(const CLI::App& app, const Global& g, const std::string& kind, const PhantomArgs& a) {
  const fs::path out(a.out);
  fs::create_directories(out);
  ordered_json extra{{"kind", kind}, {"out", out.string()}};
  if (kind == "femur") {
    phantom::FemurPhantomSpec spec;
    spec.nsa_deg = a.nsa;
    spec.noise_mm = a.noise;
    spec.seed = g.seed;
    spec.size = a.size;
    spec.spacing_mm = a.spacing;
    if (a.side != "right" && a.side != "left") throw ConfigError("--side must be right or left");
    spec.side = a.side == "left" ? phantom::Side::Left : phantom::Side::Right;
    const auto ph = phantom::make_femur_phantom(spec);
    write_volume(ph.mask, out / "mask.nii.gz");
    write_text(out / "truth.json", morph::to_json(ph.truth).dump(2) + "\n");
    ordered_json loc;
    loc["mask"] = morph::to_json(ph.localization);
    write_text(out / "localization.json", loc.dump(2) + "\n");
  } else if (kind == "pelvis") {
    phantom::PelvisPhantomSpec spec;
    spec.asis_r_dy = a.asis_dy;
    spec.asis_r_dz = a.asis_dz;
    const auto ph = phantom::make_pelvis_phantom(spec);
    write_volume(ph.mask, out / "mask.nii.gz");
    write_text(out / "truth.json", morph::to_json(ph.truth).dump(2) + "\n");
  } else if (kind == "vertebra") {
    const BinaryMask m = a.solid ? phantom::make_solid_ellipsoid()
                                 : phantom::make_vertebra_phantom({a.canal_ap, Vec3::Constant(a.spacing)});
    write_volume(m, out / "mask.nii.gz");
  } else {
    phantom::DatasetOptions opt;
    opt.cases_per_subset = a.cases;
    opt.seed = g.seed;
    phantom::write_synthetic_dataset(out, opt);
  }
  echo_config(app, out);
  status("phantom", g, extra);
}

int fail(std::string_view kind, const std::string& message) {
  ordered_json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xr23d: biplanar X-ray to 3D bone reconstruction benchmark toolkit", "xr23d"};
  app.set_config("--config", "", "TOML file with option values; flags override it");
  app.require_subcommand(1, 1);
  app.fallthrough();

  Global g;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  CLI::Option* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();

  IngestArgs ia;
  CLI::App* ingest = app.add_subcommand("ingest", "Curate, prepare and split a dataset into a manifest");
  ingest->add_option("--root", ia.root, "Dataset root")->required();
  ingest->add_option("--out", ia.out, "Output directory")->required();
  ingest->add_option("--ingest-config", ia.ingest_config, "Curation TOML (default <root>/ingest.toml if present)");

  DrrArgs da;
  CLI::App* drr_cmd = app.add_subcommand("drr", "Render biplanar DRRs");
  drr_cmd->add_option("--manifest", da.manifest, "Manifest (JSONL)");
  drr_cmd->add_option("--sample", da.samples, "Sample ids (default: all)");
  drr_cmd->add_option("--ct", da.ct, "Single CT volume instead of a manifest");
  drr_cmd->add_option("--out", da.out, "Output directory")->required();
  drr_cmd->add_option("--angle", da.angle, "Lateral view angle in degrees")->capture_default_str();
  drr_cmd->add_option("--series", da.series, "Extra lateral angles for a misalignment series")->delimiter(',');
  drr_cmd->add_flag("--misalignment", da.misalignment, "Add the default misalignment series (92..100 deg)");
  drr_cmd->add_option("--mode", da.mode, "Intensity mode: mean or sum")->capture_default_str();
  drr_cmd->add_option("--window", da.window, "HU window lo,hi")->delimiter(',')->capture_default_str();
  drr_cmd->add_option("--size", da.size, "Output size rows,cols")->delimiter(',');

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Score predictions against a manifest");
  eval->add_option("--manifest", ea.manifest, "Manifest (JSONL)")->required();
  eval->add_option("--pred", ea.pred, "Prediction directory (<sample_id>.nii.gz)")->required();
  eval->add_option("--out", ea.out, "Report directory")->required();
  eval->add_option("--model", ea.model, "Model name")->capture_default_str();
  eval->add_option("--dataset", ea.dataset, "Dataset label for the summary table");
  eval->add_option("--tau", ea.tau, "NSD tolerance in mm")->capture_default_str();
  eval->add_option("--split", ea.split, "Split to evaluate")->capture_default_str();
  eval->add_option("--groupby", ea.groupby, "Subgroup keys to disaggregate by")->delimiter(',');
  eval->add_flag("--no-morph", ea.no_morph, "Skip morphometry errors");

  MorphArgs ma;
  CLI::App* morph_cmd = app.add_subcommand("morph", "Measure morphometry on a mask");
  morph_cmd->add_option("--mask", ma.mask, "Mask volume")->required();
  morph_cmd->add_option("--anatomy", ma.anatomy, "femur, hip or vertebra")->required();
  morph_cmd->add_option("--out", ma.out, "Output JSON")->required();
  morph_cmd->add_option("--localization", ma.localization, "Femur localisation sidecar");
  morph_cmd->add_option("--sample-id", ma.sample_id, "Sidecar key (default: mask file stem)");
  morph_cmd->add_option("--mid-plane-x", ma.mid_plane_x, "Pelvic mid-sagittal plane x in mm");

  ReportArgs ra;
  CLI::App* report = app.add_subcommand("report", "Summary table, ranking stability and domain shift");
  report->add_option("--run", ra.runs, "Run files written by eval (<model>_run.json)");
  report->add_option("--out", ra.out, "Output directory")->required();
  report->add_option("--dataset", ra.dataset, "Dataset label")->capture_default_str();
  report->add_option("--metric", ra.metric, "Ranking metric")->capture_default_str();
  report->add_option("--bootstrap", ra.bootstrap, "Bootstrap resamples")->capture_default_str();
  report->add_flag("--exhaustive", ra.exhaustive, "Enumerate every resample (<= 8 samples)");
  report->add_option("--in-domain", ra.in_domain, "In-domain run file");
  report->add_option("--ood", ra.ood, "Out-of-domain run as NAME=RUN_JSON");

  PhantomArgs pa;
  CLI::App* phantom_cmd = app.add_subcommand("phantom", "Generate synthetic fixtures");
  phantom_cmd->require_subcommand(1, 1);
  CLI::App* ph_femur = phantom_cmd->add_subcommand("femur", "Proximal femur phantom");
  CLI::App* ph_pelvis = phantom_cmd->add_subcommand("pelvis", "Pelvis phantom");
  CLI::App* ph_vertebra = phantom_cmd->add_subcommand("vertebra", "Vertebra phantom");
  CLI::App* ph_dataset = phantom_cmd->add_subcommand("dataset", "Synthetic ingestion dataset");
  for (CLI::App* s : {ph_femur, ph_pelvis, ph_vertebra, ph_dataset})
    s->add_option("--out", pa.out, "Output directory")->required();
  ph_femur->add_option("--nsa", pa.nsa, "Neck-shaft angle in degrees")->capture_default_str();
  ph_femur->add_option("--noise", pa.noise, "Surface jitter in mm")->capture_default_str();
  ph_femur->add_option("--size", pa.size, "Lattice size")->capture_default_str();
  ph_femur->add_option("--spacing", pa.spacing, "Voxel spacing in mm")->capture_default_str();
  ph_femur->add_option("--side", pa.side, "right or left")->capture_default_str();
  ph_pelvis->add_option("--asis-dy", pa.asis_dy, "Right ASIS displacement along y (voxels)")->capture_default_str();
  ph_pelvis->add_option("--asis-dz", pa.asis_dz, "Right ASIS displacement along z (voxels)")->capture_default_str();
  ph_vertebra->add_option("--canal-ap", pa.canal_ap, "Canal depth in voxels")->capture_default_str();
  ph_vertebra->add_option("--spacing", pa.spacing, "Voxel spacing in mm")->capture_default_str();
  ph_vertebra->add_flag("--solid", pa.solid, "Solid ellipsoid without a canal");
  ph_dataset->add_option("--cases", pa.cases, "Cases per subset")->capture_default_str();

  for (CLI::App* s : {ingest, drr_cmd, eval, morph_cmd, report, phantom_cmd, ph_femur, ph_pelvis, ph_vertebra,
                      ph_dataset})
    s->configurable();
  bind_env(&app, "XR23D");

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*ingest) run_ingest(app, g, ia, seed_opt->count() > 0 || std::getenv("XR23D_SEED"));
    else if (*drr_cmd) run_drr(app, g, da);
    else if (*eval) run_eval(app, g, ea);
    else if (*morph_cmd) run_morph(app, g, ma);
    else if (*report) run_report(app, g, ra);
    else if (*phantom_cmd) {
      for (CLI::App* s : {ph_femur, ph_pelvis, ph_vertebra, ph_dataset})
        if (*s) run_phantom(app, g, s->get_name(), pa);
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("IoError", e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
  return 0;
}
