#include "ltrajdiff/cli.hpp"

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ltrajdiff/ablation.hpp"
#include "ltrajdiff/checkpoint.hpp"
#include "ltrajdiff/config.hpp"
#include "ltrajdiff/errors.hpp"
#include "ltrajdiff/plot.hpp"
#include "ltrajdiff/report.hpp"

namespace ltrajdiff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", config_path, "Run configuration (JSON)");
    app->add_option("--set", overrides, "Override a config value: section.key=value")->take_all();
    app->add_option("--seed", seed, "Master seed (overrides the config)");
  }

  json document() const {
    json doc = json::object();
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw ConfigError("cannot open config '" + config_path + "'");
      try {
        doc = json::parse(f);
      } catch (const json::parse_error& e) {
        throw ConfigError("config '" + config_path + "': " + e.what());
      }
    }
    for (const auto& o : overrides) apply_override(doc, o);
    if (seed) doc["seed"] = *seed;
    return doc;
  }

  RunConfig resolve() const { return run_config_from_json(document()); }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) throw ParseError("failed writing '" + path.string() + "'");
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void save_resolved(const RunConfig& c, const fs::path& dir) {
  write_text(dir / "config.resolved.json", to_json(c).dump(2) + "\n");
}

fs::path split_path(const std::string& data, const char* split) {
  fs::path p(data);
  if (fs::is_directory(p)) p /= std::string(split) + ".jsonl";
  if (!fs::exists(p)) throw ParseError("dataset file '" + p.string() + "' does not exist");
  return p;
}

std::unique_ptr<TrainableModel> build_model(const RunConfig& c, int channels) {
  const std::uint64_t init = SeedPlan::from(c.seed).init;
  if (c.model_kind == "ltrajdiff") {
    ModelConfig mc = c.model;
    mc.channel_count = channels;
    return std::make_unique<LTrajDiffModel>(mc, init);
  }
  BaselineConfig bc = c.baseline();
  bc.channel_count = channels;
  return std::make_unique<Seq2SeqBaseline>(bc, init);
}

void apply_threads() {
  if (const char* env = std::getenv("LTRAJDIFF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

int cmd_generate(const ConfigArgs& args, const std::string& out_dir, std::ostream& out) {
  RunConfig c = args.resolve();
  const fs::path dir = prepare_dir(out_dir.empty() ? c.run_dir + "/data" : out_dir);
  const GeneratedData data = generate_dataset(c.scene, c.data.n_samples, c.data.split, SeedPlan::from(c.seed).data);
  write_dataset(data.train, dir / "train.jsonl");
  write_dataset(data.val, dir / "val.jsonl");
  write_dataset(data.test, dir / "test.jsonl");
  save_resolved(c, dir);
  out << "wrote " << data.train.samples.size() << "/" << data.val.samples.size() << "/"
      << data.test.samples.size() << " samples to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const ConfigArgs& args, const std::string& data_dir, const std::string& out_dir,
              const std::string& ablate, const std::string& model_kind, std::ostream& out) {
  json doc = args.document();
  if (!ablate.empty()) apply_override(doc, "model.ablation=" + json(ablate).dump());
  if (!model_kind.empty()) apply_override(doc, "model.kind=" + json(model_kind).dump());
  const RunConfig c = run_config_from_json(doc);
  const Dataset train_set = read_dataset(split_path(data_dir, "train"));
  const fs::path val_path = fs::path(data_dir) / "val.jsonl";
  const Dataset val_set = fs::is_directory(data_dir) && fs::exists(val_path) ? read_dataset(val_path) : Dataset{};
  const fs::path dir = prepare_dir(out_dir.empty() ? c.run_dir + "/train" : out_dir);
  save_resolved(c, dir);

  auto model = build_model(c, train_set.channel_count());
  std::ofstream log(dir / "train_log.jsonl");
  const TrainResult result = train(*model, train_set, val_set, c.train, [&](const EpochRecord& r) {
    log << r.to_json().dump() << "\n";
    log.flush();
    out << "epoch " << r.epoch << " lr " << r.lr << " loss " << r.train_loss;
    if (r.validated) out << " val_mse_t " << r.val_mse_t;
    out << "\n";
  });
  Checkpoint ckpt = make_checkpoint(*model);
  ckpt.train_config = c.train.to_json();
  ckpt.epoch = result.best_epoch;
  ckpt.rng_state = {{"seed", c.seed}, {"streams", {{"data", c.seed}, {"masks", c.seed + 1},
                                                    {"init", c.seed + 2}, {"sampling", c.seed + 3}}}};
  ckpt.metrics = {{"best_val_mse_t", result.best_val_mse_t},
                  {"untrained_val_mse_t", result.untrained_val_mse_t},
                  {"final_train_loss", result.log.back().train_loss}};
  save_checkpoint(ckpt, (dir / "model.ckpt").string());
  out << "saved " << (dir / "model.ckpt").string() << " (best epoch " << result.best_epoch << ")\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string mask = "random";
  std::string iou_d_mode = "agreement";
  std::string predictor = "model";
  std::string out;
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t max_samples = 0;
  bool deterministic = false;
  bool stochastic = false;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const Dataset test = read_dataset(split_path(a.data, "test"));
  std::unique_ptr<TrainableModel> model;
  std::unique_ptr<LayoutPredictor> simple;
  json extra = {{"predictor", a.predictor}, {"seed", a.seed}};
  if (a.predictor == "model") {
    if (a.checkpoint.empty()) throw ConfigError("evaluate: --checkpoint is required for --predictor model");
    Checkpoint ckpt = load_checkpoint(a.checkpoint);
    if (a.deterministic || a.stochastic) {
      if (ckpt.model.at("kind") == "ltrajdiff") {
        ckpt.model["config"]["diffusion"]["deterministic_sampling"] = a.deterministic;
      }
    }
    if (!a.config_path.empty()) {
      const RunConfig rc = load_run_config(a.config_path);
      ModelConfig mc = rc.model;
      mc.channel_count = test.channel_count();
      if (ckpt.model.at("kind") == "ltrajdiff") {
        mc.diffusion.deterministic_sampling = ckpt.model["config"]["diffusion"]["deterministic_sampling"];
      }
      const std::string expected = rc.model_kind == "ltrajdiff" ? model_config_hash(mc)
                                                                : config_hash_of({{"config", [&] {
                                                                    BaselineConfig b = rc.baseline();
                                                                    b.channel_count = test.channel_count();
                                                                    return b.to_json();
                                                                  }()}});
      if (auto w = config_hash_warning(ckpt, expected)) err << "warning: " << *w << "\n";
    }
    extra["model"] = ckpt.model.at("kind");
    extra["config_hash"] = ckpt.config_hash;
    model = restore_model(ckpt);
  } else if (a.predictor == "oracle") {
    simple = std::make_unique<OraclePredictor>(test);
  } else if (a.predictor == "zero") {
    simple = std::make_unique<ZeroPredictor>();
  } else if (a.predictor == "copy-first") {
    simple = std::make_unique<CopyFirstVisiblePredictor>();
  } else {
    throw ConfigError("evaluate: unknown predictor '" + a.predictor + "'");
  }
  EvalOptions opts;
  opts.mask = MaskSpec::parse(a.mask);
  opts.iou_d_mode = iou_depth_mode_from_string(a.iou_d_mode);
  const SeedPlan seeds = SeedPlan::from(a.seed);
  opts.seed = seeds.masks;
  opts.sampling_seed = seeds.sampling;
  opts.max_samples = a.max_samples;
  const LayoutPredictor& predictor = model ? static_cast<const LayoutPredictor&>(*model) : *simple;
  const EvalReport report = evaluate(predictor, test, opts);
  fs::path out_path = a.out.empty() ? fs::path("report.jsonl") : fs::path(a.out);
  if (out_path.has_parent_path()) prepare_dir(out_path.parent_path().string());
  write_report(report, out_path, extra);
  json summary = report_summary(report);
  for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
  out << summary.dump() << "\n";
  return kExitOk;
}

int cmd_ablate(const ConfigArgs& args, const std::string& data_dir, const std::string& out_dir,
               const std::string& variants_csv, const std::string& seeds_csv, std::ostream& out) {
  RunConfig c = args.resolve();
  std::vector<std::string> variants = c.ablate.variants;
  std::vector<std::uint64_t> seeds = c.ablate.seeds;
  auto split_csv = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, ',')) {
      if (!p.empty()) parts.push_back(p);
    }
    return parts;
  };
  if (!variants_csv.empty()) variants = split_csv(variants_csv);
  if (!seeds_csv.empty()) {
    seeds.clear();
    for (const auto& s : split_csv(seeds_csv)) {
      try {
        seeds.push_back(std::stoull(s));
      } catch (const std::exception&) {
        throw ConfigError("--seeds: '" + s + "' is not a seed");
      }
    }
  }
  for (const auto& v : variants) AblationFlags::from_name(v);
  const Dataset train_set = read_dataset(split_path(data_dir, "train"));
  const Dataset val_set = read_dataset(split_path(data_dir, "val"));
  const Dataset test_set = read_dataset(split_path(data_dir, "test"));
  const fs::path dir = prepare_dir(out_dir.empty() ? c.run_dir + "/ablate" : out_dir);
  save_resolved(c, dir);
  std::ofstream rows(dir / "ablation.jsonl");
  const AblationTable table =
      run_ablation_suite(c, train_set, val_set, test_set, variants, seeds, [&](const AblationRow& r) {
        rows << r.to_json().dump() << "\n";
        rows.flush();
        out << r.to_json().dump() << "\n";
      });
  write_text(dir / "ablation_summary.json", json{{"mask", table.mask_spec}, {"rows", table.summary()}}.dump(2) + "\n");
  return kExitOk;
}

int cmd_plot(const std::string& input, const std::string& out_path, std::size_t limit, std::ostream& out) {
  std::ifstream f(input);
  if (!f) throw ParseError("cannot open '" + input + "'");
  std::string first;
  std::getline(f, first);
  f.close();
  std::vector<PlotPanel> panels;
  json head;
  try {
    head = json::parse(first);
  } catch (const json::parse_error&) {
    throw ParseError(input + ": line 1: not a record");
  }
  if (head.contains("record")) {
    const EvalReport report = read_report(input);
    for (const auto& s : report.per_sample) {
      if (panels.size() >= limit) break;
      if (s.truth.frames.empty()) continue;
      char title[160];
      std::snprintf(title, sizeof(title), "%s  mse_t %.2f  iou_d %.3f", s.agent_id.c_str(), s.mse_t, s.iou_d);
      panels.push_back({title, s.truth, s.pred, s.mask.flags});
    }
  } else {
    const Dataset ds = read_dataset(input);
    for (const auto& s : ds.samples) {
      if (panels.size() >= limit) break;
      panels.push_back({s.agent_id, s.layout, {}, s.mask ? s.mask->flags : std::vector<std::uint8_t>{}});
    }
  }
  if (panels.empty()) throw ValidationError(input + ": nothing to plot (no samples with sequences)");
  const fs::path p(out_path);
  if (p.has_parent_path()) prepare_dir(p.parent_path().string());
  write_text(p, render_svg(panels));
  out << "wrote " << panels.size() << " panel(s) to " << p.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) { return run_cli(argc, argv, std::cout, std::cerr); }

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ltrajdiff: layout sequence prediction from masked layouts and mobile signals"};
  app.require_subcommand(1);

  ConfigArgs gen_args, train_args, ablate_args;
  std::string gen_out, train_data, train_out, train_ablate, train_model, ablate_data, ablate_out, ablate_variants,
      ablate_seeds, plot_input, plot_out;
  std::size_t plot_limit = 4;
  EvalArgs eval;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset (train/val/test splits)");
  gen_args.add_to(gen);
  gen->add_option("-o,--out", gen_out, "Output directory (default <run_dir>/data)");

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint and per-epoch log");
  train_args.add_to(tr);
  tr->add_option("-d,--data", train_data, "Dataset directory or train file")->required();
  tr->add_option("-o,--out", train_out, "Output directory (default <run_dir>/train)");
  tr->add_option("--ablate", train_ablate, "Ablation variant, e.g. w/o-rms");
  tr->add_option("--model", train_model, "ltrajdiff, baseline-attention or baseline-recurrent");

  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint or reference predictor on a dataset");
  ev->add_option("-k,--checkpoint", eval.checkpoint, "Checkpoint file");
  ev->add_option("-d,--data", eval.data, "Dataset directory (uses test.jsonl) or file")->required();
  ev->add_option("--mask", eval.mask, "random | full | fixed:<r> | prefix:<k>");
  ev->add_option("--iou-d-mode", eval.iou_d_mode, "agreement | paper_literal");
  ev->add_option("--predictor", eval.predictor, "model | oracle | zero | copy-first");
  ev->add_option("-o,--out", eval.out, "Report path (default report.jsonl)");
  ev->add_option("-c,--config", eval.config_path, "Config to compare against the checkpoint");
  ev->add_option("--seed", eval.seed, "Master seed");
  ev->add_option("--max-samples", eval.max_samples, "Evaluate only the first N samples");
  ev->add_flag("--deterministic", eval.deterministic, "Sample without injected noise");
  ev->add_flag("--stochastic", eval.stochastic, "Sample with injected noise");

  auto* ab = app.add_subcommand("ablate", "Train and score the complete model and its ablations");
  ablate_args.add_to(ab);
  ab->add_option("-d,--data", ablate_data, "Dataset directory")->required();
  ab->add_option("-o,--out", ablate_out, "Output directory (default <run_dir>/ablate)");
  ab->add_option("--variants", ablate_variants, "Comma-separated variant names");
  ab->add_option("--seeds", ablate_seeds, "Comma-separated seeds");

  auto* pl = app.add_subcommand("plot", "Render a report or dataset file as SVG");
  pl->add_option("-i,--input", plot_input, "Report or dataset file")->required();
  pl->add_option("-o,--out", plot_out, "Output SVG path")->required();
  pl->add_option("-n,--samples", plot_limit, "Number of samples to draw");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  apply_threads();
  try {
    if (*gen) return cmd_generate(gen_args, gen_out, out);
    if (*tr) return cmd_train(train_args, train_data, train_out, train_ablate, train_model, out);
    if (*ev) {
      if (eval.deterministic && eval.stochastic) throw ConfigError("--deterministic and --stochastic conflict");
      return cmd_evaluate(eval, out, err);
    }
    if (*ab) return cmd_ablate(ablate_args, ablate_data, ablate_out, ablate_variants, ablate_seeds, out);
    if (*pl) return cmd_plot(plot_input, plot_out, plot_limit, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace ltrajdiff
