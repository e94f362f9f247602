// pnf: command-line front end for data generation, ingestion, training,
// evaluation, the active-learning and temporal experiments, the time-cost
// frontier and Monte Carlo rollouts.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad flags or configuration.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pnf/pnf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- files -----------------------------------------------------------------

json read_json_file(const std::string& path) {
  try {
    return json::parse(pnf::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw pnf::SchemaViolation(path + ": " + e.what());
  }
}

bool is_bookkeeping(const fs::path& p) {
  const auto name = p.filename().string();
  return name == "manifest.json" || name == "checkpoint.json" || name == "split.json" ||
         name.ends_with(".manifest.json");
}

/// Instances from a canonical JSON file or every canonical file in a
/// directory (sorted by file name).
std::vector<pnf::ProjectInstance> load_instances(const std::string& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".json" && !is_bookkeeping(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(path)) {
    files.emplace_back(path);
  } else {
    throw UsageError("data path '" + path + "' does not exist");
  }
  if (files.empty()) throw UsageError("no instance files under '" + path + "'");
  std::vector<pnf::ProjectInstance> out;
  for (const auto& f : files) {
    auto inst = pnf::read_canonical(pnf::read_text_file(f.string()));
    if (inst.name().empty()) inst.meta["name"] = f.stem().string();
    out.push_back(std::move(inst));
  }
  return out;
}

pnf::ProjectInstance load_one(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("expected an instance file, got '" + path + "'");
  return load_instances(path).front();
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void ensure_parent(const std::string& file) {
  const auto parent = fs::path(file).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  pnf::CsvTable t;
  t.header = header;
  t.rows = rows;
  return pnf::write_csv(t);
}

// ---- manifests ---------------------------------------------------------------

json manifest(const std::string& command, const json& config, std::optional<std::uint64_t> seed,
              const std::vector<std::string>& inputs) {
  json m{{"tool", "pnf"}, {"version", pnf::kVersion}, {"command", command}, {"config", config}, {"inputs", inputs}};
  m["seed"] = seed ? json(*seed) : json(nullptr);
  return m;
}

void write_manifest_dir(const std::string& dir, const json& m) {
  pnf::write_text_file((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
}

/// Manifest beside a single output file: <file>.manifest.json.
void write_manifest_file(const std::string& file, const json& m) {
  pnf::write_text_file(file + ".manifest.json", m.dump(2) + "\n");
}

// ---- experiment configs ------------------------------------------------------

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  auto j = read_json_file(path);
  if (!j.is_object()) throw UsageError("config '" + path + "' must be a JSON object");
  return j;
}

json section(const json& cfg, const char* key) { return cfg.contains(key) ? cfg.at(key) : json::object(); }

pnf::PreprocessOptions preprocess_options(const json& cfg) {
  pnf::PreprocessOptions o;
  o.winsorize = section(cfg, "preprocess").value("winsorize", o.winsorize);
  return o;
}

pnf::ModelConfig model_config(const json& cfg, const std::string& kind) {
  auto m = pnf::ModelConfig::from_json(section(cfg, "model"));
  if (kind == "mlp") m = pnf::mlp_config(m);
  if (kind == "tgn") m.temporal = true;
  if (kind == "graphsage") m.temporal = false;
  return m;
}

struct Split {
  std::vector<std::size_t> train, val, test;
  json to_json(const std::vector<pnf::ProjectInstance>& data) const {
    auto names = [&](const std::vector<std::size_t>& idx) {
      std::vector<std::string> out;
      for (auto i : idx) out.push_back(data[i].name());
      return out;
    };
    return {{"train", names(train)}, {"val", names(val)}, {"test", names(test)}};
  }
};

/// Seeded project-level split; tiny corpora reuse the training projects.
Split make_split(std::size_t n, double train_frac, double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0))
    throw UsageError("split fractions must satisfy 0 < train, 0 <= val, train + val <= 1");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto rng = pnf::RandomStream(seed).split("split");
  rng.shuffle(idx);
  Split s;
  if (n < 3) {
    pnf::log::warn("fewer than three projects: train, validation and test share all of them");
    s.train = s.val = s.test = idx;
    return s;
  }
  auto nt = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n))));
  auto nv = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n))));
  nt = std::min(nt, n - 2);
  nv = std::min(nv, n - nt - 1);
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nt));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(nt), idx.begin() + static_cast<std::ptrdiff_t>(nt + nv));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(nt + nv), idx.end());
  return s;
}

std::vector<pnf::ProjectInstance> pick(const std::vector<pnf::ProjectInstance>& data, const std::vector<std::size_t>& idx) {
  std::vector<pnf::ProjectInstance> out;
  for (auto i : idx) out.push_back(data[i]);
  return out;
}

// ---- subcommands -------------------------------------------------------------

struct GenerateArgs {
  std::size_t size = 100, samples = 1;
  double density = 0.1, sigma_t = 0.5, sigma_c = 0.5, est_lo = 0.8, est_hi = 1.2;
  std::uint64_t seed = 0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  pnf::GenConfig base;
  base.n = a.size;
  base.rho = a.density;
  base.sigma_t = a.sigma_t;
  base.sigma_c = a.sigma_c;
  base.estimate_lo = a.est_lo;
  base.estimate_hi = a.est_hi;
  try {
    base.validate();
  } catch (const pnf::InvalidConfig& e) {
    throw UsageError(e.what());
  }
  ensure_dir(a.out);
  const pnf::RandomStream root(a.seed);
  for (std::size_t i = 0; i < a.samples; ++i) {
    auto cfg = base;
    cfg.seed = root.split("generate", i)();
    const auto inst = pnf::generate_project(cfg);
    inst.validate();
    pnf::write_text_file((fs::path(a.out) / (pnf::padded_identifier("project_", i, a.samples) + ".json")).string(),
                         pnf::write_canonical(inst));
  }
  auto resolved = base.to_json();
  resolved.erase("seed");
  resolved["samples"] = a.samples;
  write_manifest_dir(a.out, manifest("generate", resolved, a.seed, {}));
  return 0;
}

struct PsplibArgs {
  std::string in, out;
  std::size_t min_acts = 10, max_acts = 150;
};

int run_parse_psplib(const PsplibArgs& a) {
  if (a.min_acts > a.max_acts) throw UsageError("--min-activities exceeds --max-activities");
  auto in_range = [&](const pnf::ProjectInstance& p) {
    return p.num_activities() >= a.min_acts && p.num_activities() <= a.max_acts;
  };
  const json cfg{{"min_activities", a.min_acts}, {"max_activities", a.max_acts}};
  if (fs::is_directory(a.in)) {
    ensure_dir(a.out);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.in))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::size_t kept = 0;
    for (const auto& f : files) {
      auto inst = pnf::parse_psplib(pnf::read_text_file(f.string()), f.stem().string());
      if (!in_range(inst)) {
        pnf::log::info("skipping " + f.string() + ": " + std::to_string(inst.num_activities()) + " activities");
        continue;
      }
      pnf::write_text_file((fs::path(a.out) / (f.stem().string() + ".json")).string(), pnf::write_canonical(inst));
      ++kept;
    }
    pnf::log::info("converted " + std::to_string(kept) + " of " + std::to_string(files.size()) + " files");
    write_manifest_dir(a.out, manifest("parse-psplib", cfg, std::nullopt, {a.in}));
    return 0;
  }
  auto inst = pnf::parse_psplib(pnf::read_text_file(a.in), fs::path(a.in).stem().string());
  if (!in_range(inst)) {
    std::cerr << "error: " << a.in << " has " << inst.num_activities() << " activities, outside ["
              << a.min_acts << ", " << a.max_acts << "]\n";
    return 1;
  }
  ensure_parent(a.out);
  pnf::write_text_file(a.out, pnf::write_canonical(inst));
  write_manifest_file(a.out, manifest("parse-psplib", cfg, std::nullopt, {a.in}));
  return 0;
}

struct CsvArgs {
  std::string in, strategy, out, effort = "effort", id, modules = "modules";
};

int run_ingest_csv(const CsvArgs& a) {
  pnf::SurrogateStrategy strategy;
  try {
    strategy = pnf::surrogate_strategy_from_string(a.strategy);
  } catch (const pnf::InvalidConfig& e) {
    throw UsageError(e.what());
  }
  pnf::SurrogateOptions opt{a.effort, a.id, a.modules};
  const auto table = pnf::parse_csv(pnf::read_text_file(a.in));
  const auto projects = pnf::build_surrogate_graph(table, strategy, opt);
  ensure_dir(a.out);
  for (std::size_t i = 0; i < projects.size(); ++i)
    pnf::write_text_file((fs::path(a.out) / (pnf::padded_identifier("project_", i, projects.size()) + ".json")).string(),
                         pnf::write_canonical(projects[i]));
  const json cfg{{"strategy", a.strategy}, {"effort_column", a.effort}, {"id_column", a.id}, {"modules_column", a.modules}};
  write_manifest_dir(a.out, manifest("ingest-csv", cfg, std::nullopt, {a.in}));
  return 0;
}

struct TrainArgs {
  std::string model, data, config, out;
  std::uint64_t seed = 13;
};

int run_train(const TrainArgs& a) {
  const json cfg = load_config(a.config);
  const auto data = load_instances(a.data);
  const auto split_cfg = section(cfg, "split");
  const auto split = make_split(data.size(), split_cfg.value("train", 0.7), split_cfg.value("val", 0.15), a.seed);
  const auto train = pick(data, split.train), val = pick(data, split.val);
  const auto popt = preprocess_options(cfg);

  json resolved{{"model_kind", a.model}, {"preprocess", {{"winsorize", popt.winsorize}}},
                {"split", {{"train", split_cfg.value("train", 0.7)}, {"val", split_cfg.value("val", 0.15)}}}};
  json checkpoint{{"format", "pnf-checkpoint-1"}, {"kind", a.model}, {"seed", a.seed}};
  std::string history;
  if (a.model == "ridge") {
    auto grid = pnf::ridge_lambda_grid();
    try {
      grid = section(cfg, "ridge").value("lambdas", grid);
    } catch (const json::exception& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    if (grid.empty()) throw UsageError("ridge lambda grid is empty");
    for (double l : grid)
      if (!(l >= 0.0)) throw UsageError("ridge lambdas must be non-negative");
    resolved["ridge"] = {{"lambdas", grid}};
    const auto b = pnf::fit_ridge_baseline(train, val, grid, popt);
    checkpoint["body"] = pnf::to_json(b);
    history = "head,lambda\nduration," + std::to_string(b.duration.lambda) + "\ncost," + std::to_string(b.cost.lambda) + "\n";
  } else {
    pnf::ModelConfig mcfg;
    pnf::TrainConfig tcfg;
    try {
      mcfg = model_config(cfg, a.model);
      tcfg = pnf::TrainConfig::from_json(section(cfg, "train"));
    } catch (const json::exception& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    auto [tm, res] = pnf::train_model(train, val, mcfg, tcfg, a.seed, popt);
    checkpoint["body"] = pnf::to_json(tm);
    history = pnf::history_csv(res.history);
    resolved["model"] = tm.model.config.to_json();
    resolved["train"] = tcfg.to_json();
  }
  ensure_dir(a.out);
  const auto dir = fs::path(a.out);
  pnf::write_text_file((dir / "checkpoint.json").string(), checkpoint.dump() + "\n");
  pnf::write_text_file((dir / "history.csv").string(), history);
  pnf::write_text_file((dir / "split.json").string(), split.to_json(data).dump(2) + "\n");
  write_manifest_dir(a.out, manifest("train", resolved, a.seed, {a.data}));
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, out, split, part = "test";
};

int run_eval(const EvalArgs& a) {
  const json ck = read_json_file(a.checkpoint);
  if (ck.value("format", std::string{}) != "pnf-checkpoint-1") throw pnf::VersionMismatch("not a pnf checkpoint: " + a.checkpoint);
  auto data = load_instances(a.data);
  if (!a.split.empty()) {
    const auto sj = read_json_file(a.split);
    if (!sj.contains(a.part)) throw UsageError("split file has no part '" + a.part + "'");
    const auto names = sj.at(a.part).get<std::vector<std::string>>();
    std::erase_if(data, [&](const pnf::ProjectInstance& p) {
      return std::find(names.begin(), names.end(), p.name()) == names.end();
    });
    if (data.empty()) throw UsageError("no project of part '" + a.part + "' found under " + a.data);
  }
  const std::string kind = ck.at("kind").get<std::string>();
  const auto seed = ck.value("seed", std::uint64_t{0});
  pnf::MetricsBundle bundle;
  if (kind == "ridge") {
    const auto b = pnf::ridge_from_json(ck.at("body"));
    const auto preds = pnf::predict_ridge(b, data);
    std::vector<const pnf::ProjectInstance*> ptrs;
    for (const auto& d : data) ptrs.push_back(&d);
    bundle = pnf::evaluate_predictions(ptrs, preds);
  } else {
    auto tm = pnf::trained_model_from_json(ck.at("body"));
    bundle = pnf::evaluate(tm, data);
  }
  ensure_parent(a.out);
  pnf::write_text_file(a.out, csv_text(pnf::metrics_csv_header(),
                                       pnf::metrics_csv_rows(bundle, kind, fs::path(a.data).filename().string(), seed)));
  const json cfg{{"checkpoint", a.checkpoint}, {"split", a.split}, {"part", a.part}};
  write_manifest_file(a.out, manifest("eval", cfg, seed, {a.data, a.checkpoint}));
  return 0;
}

struct ExperimentArgs {
  std::string kind, data, config, out;
  std::uint64_t seed = 13;
};

int run_active(const ExperimentArgs& a) {
  pnf::Strategy strategy;
  pnf::ActiveConfig acfg;
  pnf::ModelConfig mcfg;
  pnf::TrainConfig tcfg;
  const json cfg = load_config(a.config);
  try {
    strategy = pnf::strategy_from_string(a.kind);
    acfg = pnf::ActiveConfig::from_json(section(cfg, "active"));
    acfg.validate();
    mcfg = model_config(cfg, "graphsage");
    tcfg = pnf::TrainConfig::from_json(section(cfg, "train"));
  } catch (const pnf::InvalidConfig& e) {
    throw UsageError(e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  const auto data = load_instances(a.data);
  const std::vector<pnf::Strategy> one{strategy};
  const auto curve = pnf::run_active_loop(data, mcfg, tcfg, acfg, one, a.seed);
  ensure_parent(a.out);
  pnf::write_text_file(a.out, pnf::active_curve_csv(curve));
  json resolved{{"strategy", a.kind}, {"active", acfg.to_json()}, {"model", mcfg.to_json()}, {"train", tcfg.to_json()}};
  write_manifest_file(a.out, manifest("active", resolved, a.seed, {a.data}));
  return 0;
}

int run_temporal(const ExperimentArgs& a) {
  pnf::TemporalVariant variant;
  pnf::TemporalConfig tc;
  pnf::ModelConfig mcfg;
  pnf::TrainConfig tcfg;
  const json cfg = load_config(a.config);
  try {
    variant = pnf::temporal_variant_from_string(a.kind);
    tc = pnf::TemporalConfig::from_json(section(cfg, "temporal"));
    tc.validate();
    mcfg = model_config(cfg, "graphsage");
    tcfg = pnf::TrainConfig::from_json(section(cfg, "train"));
  } catch (const pnf::InvalidConfig& e) {
    throw UsageError(e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  const auto data = load_instances(a.data);
  const auto curve = pnf::run_temporal(data, mcfg, tcfg, tc, variant, a.seed);
  ensure_parent(a.out);
  pnf::write_text_file(a.out, pnf::temporal_curve_csv(curve));
  json resolved{{"variant", a.kind}, {"temporal", tc.to_json()}, {"model", mcfg.to_json()}, {"train", tcfg.to_json()}};
  write_manifest_file(a.out, manifest("temporal", resolved, a.seed, {a.data}));
  return 0;
}

struct FrontierArgs {
  std::string data, out;
  double tmax = 0.0, floor = 0.2;
};

int run_frontier(const FrontierArgs& a) {
  if (!(a.tmax > 0.0)) throw UsageError("--tmax must be positive");
  if (!(a.floor > 0.0 && a.floor <= 1.0)) throw UsageError("--floor must lie in (0, 1]");
  const auto inst = load_one(a.data);
  const auto crash = pnf::crash_params(inst);
  pnf::FrontierOptions opt;
  opt.floor_fraction = a.floor;
  const auto d = pnf::solve_cost_frontier(inst.graph, crash, a.tmax, opt);
  std::vector<pnf::CrashParams> cp;
  for (const auto& c : crash) cp.push_back(*c);
  json durations = json::object();
  for (std::size_t i = 0; i < d.size(); ++i) durations[inst.graph.activity_id(i)] = d[i];
  json out{{"t_max", a.tmax},
           {"makespan", pnf::compute_schedule(inst.graph, d).makespan},
           {"total_cost", pnf::total_crash_cost(d, cp)},
           {"durations", durations}};
  try {
    const auto u = pnf::uniform_scaling_durations(inst.graph, crash, a.tmax, a.floor);
    out["uniform_scaling_cost"] = pnf::total_crash_cost(u, cp);
  } catch (const pnf::Infeasible&) {
    out["uniform_scaling_cost"] = nullptr;
  }
  ensure_parent(a.out);
  pnf::write_text_file(a.out, out.dump(2) + "\n");
  write_manifest_file(a.out, manifest("frontier", {{"t_max", a.tmax}, {"floor_fraction", a.floor}}, std::nullopt, {a.data}));
  return 0;
}

struct McArgs {
  std::string data, out;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double parallelism = 1.0;
};

int run_mc(const McArgs& a) {
  if (a.samples == 0) throw UsageError("--samples must be positive");
  if (!(a.parallelism >= 0.0 && a.parallelism <= 1.0)) throw UsageError("--parallelism must lie in [0, 1]");
  const auto inst = load_one(a.data);
  const auto specs = pnf::work_specs(inst, a.parallelism);
  const auto laws = pnf::efficiency_laws(inst);
  pnf::MonteCarloOptions opt;
  opt.samples = a.samples;
  opt.seed = a.seed;
  opt.overhead = inst.overhead;
  opt.threads = std::max(1u, a.jobs);
  const auto s = pnf::monte_carlo_project(inst.graph, specs, laws, opt);
  auto quantiles = [](const std::vector<std::pair<double, double>>& q) {
    json j = json::array();
    for (auto [level, v] : q) j.push_back({{"level", level}, {"value", v}});
    return j;
  };
  json acts = json::array();
  for (std::size_t i = 0; i < inst.num_activities(); ++i)
    acts.push_back({{"id", inst.graph.activity_id(i)},
                    {"duration_mean", s.duration_mean[i]},
                    {"duration_variance", s.duration_variance[i]},
                    {"cost_mean", s.activity_cost_mean[i]},
                    {"cost_variance", s.activity_cost_variance[i]}});
  const json out{{"samples", s.samples},
                 {"makespan", {{"mean", s.makespan_mean}, {"variance", s.makespan_variance}, {"quantiles", quantiles(s.makespan_quantiles)}}},
                 {"total_cost", {{"mean", s.cost_mean}, {"variance", s.cost_variance}, {"quantiles", quantiles(s.cost_quantiles)}}},
                 {"truncated_draws", s.truncated_draws},
                 {"activities", acts}};
  ensure_parent(a.out);
  pnf::write_text_file(a.out, out.dump(2) + "\n");
  // threads never change the result, so they stay out of the manifest config
  write_manifest_file(a.out, manifest("mc", {{"samples", a.samples}, {"parallelism", a.parallelism}}, a.seed, {a.data}));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pnf: project network forecasting toolkit"};
  app.set_version_flag("--version", std::string(pnf::kVersion));
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "debug, info, warn or silent")
      ->check(CLI::IsMember({"debug", "info", "warn", "silent"}));

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate synthetic projects as canonical JSON");
  c_gen->add_option("--size", gen.size, "Activities per project")->required()->check(CLI::Range(2ul, 100000ul));
  c_gen->add_option("--density", gen.density, "Edge probability rho")->required();
  c_gen->add_option("--samples", gen.samples, "Number of projects")->required()->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gen.seed, "Root seed")->required();
  c_gen->add_option("--out", gen.out, "Output directory")->default_val(".");
  c_gen->add_option("--sigma-t", gen.sigma_t, "Duration noise sd")->capture_default_str();
  c_gen->add_option("--sigma-c", gen.sigma_c, "Cost noise sd")->capture_default_str();
  c_gen->add_option("--estimate-lo", gen.est_lo, "Lower estimate multiplier")->capture_default_str();
  c_gen->add_option("--estimate-hi", gen.est_hi, "Upper estimate multiplier")->capture_default_str();

  PsplibArgs ps;
  auto* c_ps = app.add_subcommand("parse-psplib", "Convert PSPLIB .sm files to canonical JSON");
  c_ps->add_option("--in", ps.in, "Input file or directory")->required();
  c_ps->add_option("--out", ps.out, "Output file (directory for a directory input)")->required();
  c_ps->add_option("--min-activities", ps.min_acts)->capture_default_str();
  c_ps->add_option("--max-activities", ps.max_acts)->capture_default_str();

  CsvArgs csv;
  auto* c_csv = app.add_subcommand("ingest-csv", "Build surrogate project graphs from a tabular effort CSV");
  c_csv->add_option("--in", csv.in, "CSV file")->required()->check(CLI::ExistingFile);
  c_csv->add_option("--strategy", csv.strategy)->required()->check(CLI::IsMember({"chain4", "phase6", "module"}));
  c_csv->add_option("--out", csv.out, "Output directory")->required();
  c_csv->add_option("--effort-column", csv.effort)->capture_default_str();
  c_csv->add_option("--id-column", csv.id);
  c_csv->add_option("--modules-column", csv.modules)->capture_default_str();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model on a directory of instances");
  c_tr->add_option("--model", tr.model)->required()->check(CLI::IsMember({"graphsage", "tgn", "mlp", "ridge"}));
  c_tr->add_option("--data", tr.data, "Instance directory")->required();
  c_tr->add_option("--config", tr.config, "JSON config with model/train/preprocess/split sections");
  c_tr->add_option("--seed", tr.seed)->capture_default_str();
  c_tr->add_option("--out", tr.out, "Output directory")->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate a checkpoint and write a metrics CSV");
  c_ev->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  c_ev->add_option("--data", ev.data, "Instance file or directory")->required();
  c_ev->add_option("--out", ev.out, "Metrics CSV")->required();
  c_ev->add_option("--split", ev.split, "split.json written by train")->check(CLI::ExistingFile);
  c_ev->add_option("--part", ev.part, "train, val or test")->capture_default_str()->check(CLI::IsMember({"train", "val", "test"}));

  ExperimentArgs ac;
  auto* c_ac = app.add_subcommand("active", "Run the active-learning loop for one strategy");
  c_ac->add_option("--strategy", ac.kind)->required()->check(CLI::IsMember({"random", "uncertainty", "topology", "hybrid"}));
  c_ac->add_option("--data", ac.data)->required();
  c_ac->add_option("--config", ac.config, "JSON config with model/train/active sections");
  c_ac->add_option("--seed", ac.seed)->capture_default_str();
  c_ac->add_option("--out", ac.out, "Curve CSV")->required();

  ExperimentArgs tp;
  auto* c_tp = app.add_subcommand("temporal", "Run the rolling temporal experiment for one variant");
  c_tp->add_option("--variant", tp.kind)->required()->check(CLI::IsMember({"static-mlp", "static-gnn", "adaptive"}));
  c_tp->add_option("--data", tp.data)->required();
  c_tp->add_option("--config", tp.config, "JSON config with model/train/temporal sections");
  c_tp->add_option("--seed", tp.seed)->capture_default_str();
  c_tp->add_option("--out", tp.out, "Curve CSV")->required();

  FrontierArgs fr;
  auto* c_fr = app.add_subcommand("frontier", "Cheapest crash durations meeting a deadline");
  c_fr->add_option("--data", fr.data, "Instance file")->required()->check(CLI::ExistingFile);
  c_fr->add_option("--tmax", fr.tmax, "Deadline")->required();
  c_fr->add_option("--floor", fr.floor, "Crash floor as a fraction of normal duration")->capture_default_str();
  c_fr->add_option("--out", fr.out, "Output JSON")->required();

  McArgs mc;
  auto* c_mc = app.add_subcommand("mc", "Monte Carlo rollout of makespan and cost");
  c_mc->add_option("--data", mc.data, "Instance file")->required()->check(CLI::ExistingFile);
  c_mc->add_option("--samples", mc.samples)->capture_default_str();
  c_mc->add_option("--seed", mc.seed)->capture_default_str();
  c_mc->add_option("--jobs", mc.jobs, "Worker threads")->capture_default_str();
  c_mc->add_option("--parallelism", mc.parallelism, "Resource aggregation lambda in [0, 1]")->capture_default_str();
  c_mc->add_option("--out", mc.out, "Output JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  pnf::log::set_level(log_level == "debug"  ? pnf::log::Level::debug
                      : log_level == "info" ? pnf::log::Level::info
                      : log_level == "warn" ? pnf::log::Level::warn
                                            : pnf::log::Level::silent);
  try {
    if (*c_gen) return run_generate(gen);
    if (*c_ps) return run_parse_psplib(ps);
    if (*c_csv) return run_ingest_csv(csv);
    if (*c_tr) return run_train(tr);
    if (*c_ev) return run_eval(ev);
    if (*c_ac) return run_active(ac);
    if (*c_tp) return run_temporal(tp);
    if (*c_fr) return run_frontier(fr);
    if (*c_mc) return run_mc(mc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
