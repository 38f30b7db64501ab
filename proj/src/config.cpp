#include "ltrajdiff/config.hpp"

#include <fstream>
#include <sstream>

#include "ltrajdiff/errors.hpp"

namespace ltrajdiff {

using nlohmann::json;

namespace {

json encoder_json(const EncoderConfig& e) {
  return {{"embed_dim", e.embed_dim},
          {"num_heads", e.num_heads},
          {"num_layers", e.num_layers},
          {"feedforward_dim", e.feedforward_dim},
          {"max_len", e.max_len}};
}

json scene_json(const SceneConfig& c) { return json::parse(scene_config_json(c)); }

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    // Integers may not silently take fractional values.
    return !(a.is_number_integer() && b.is_number_float());
  }
  return a.type() == b.type();
}

void merge(json& base, const json& doc, const std::string& path) {
  if (!doc.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError(key + ": unknown key");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge(slot, it.value(), key);
    } else {
      if (!same_kind(slot, it.value())) {
        throw ConfigError(key + ": expected " + std::string(slot.type_name()) + ", got " +
                          std::string(it.value().type_name()));
      }
      slot = it.value();
    }
  }
}

template <class T>
T field(const json& j, const std::string& path, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": invalid value");
  }
}

}  // namespace

json default_config_json() {
  const RunConfig d;
  return to_json(d);
}

json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"scene", scene_json(c.scene)},
      {"data",
       {{"n_samples", c.data.n_samples},
        {"split", {{"train", c.data.split.train}, {"val", c.data.split.val}, {"test", c.data.split.test}}}}},
      {"model",
       {{"kind", c.model_kind},
        {"encoder", encoder_json(c.model.encoder)},
        {"diffusion",
         {{"K", c.model.diffusion.K},
          {"beta_start", c.model.diffusion.beta_start},
          {"beta_end", c.model.diffusion.beta_end},
          {"lambda", c.model.diffusion.lambda},
          {"deterministic_sampling", c.model.diffusion.deterministic_sampling}}},
        {"sigma_mode", to_string(c.model.sigma_mode)},
        {"ablation", c.model.ablation.name()}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"lr_gamma", c.train.lr_gamma},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"optimizer", c.train.optimizer},
        {"mask", c.train.mask_spec.to_string()},
        {"val_every", c.train.val_every},
        {"val_samples", c.train.val_samples},
        {"grad_clip", c.train.grad_clip}}},
      {"eval",
       {{"mask", c.eval.mask.to_string()},
        {"iou_d_mode", to_string(c.eval.iou_d_mode)},
        {"max_samples", c.eval.max_samples},
        {"keep_sequences", c.eval.keep_sequences}}},
      {"ablate", {{"variants", c.ablate.variants}, {"seeds", c.ablate.seeds}}},
      {"paths", {{"run_dir", c.run_dir}}},
  };
}

RunConfig run_config_from_json(const json& doc) {
  json r = default_config_json();
  merge(r, doc, "");

  RunConfig c;
  c.seed = field<std::uint64_t>(r, "config", "seed");

  const json& s = r["scene"];
  auto& sc = c.scene;
  sc.T = field<int>(s, "scene", "T");
  sc.dt = field<double>(s, "scene", "dt");
  sc.camera_focal = field<double>(s, "scene", "camera_focal");
  sc.image_size = field<std::array<double, 2>>(s, "scene", "image_size");
  sc.agent_size = field<std::array<double, 2>>(s, "scene", "agent_size");
  sc.camera_height = field<double>(s, "scene", "camera_height");
  sc.receiver_position = field<std::array<double, 2>>(s, "scene", "receiver_position");
  sc.channel_count = field<int>(s, "scene", "channel_count");
  sc.speed_range = field<std::array<double, 2>>(s, "scene", "speed_range");
  sc.heading_range = field<std::array<double, 2>>(s, "scene", "heading_range");
  sc.accel_std = field<double>(s, "scene", "accel_std");
  sc.start_region = field<std::array<double, 4>>(s, "scene", "start_region");
  sc.min_depth = field<double>(s, "scene", "min_depth");
  const json& n = s["noise"];
  sc.noise.accel_std = field<double>(n, "scene.noise", "accel_std");
  sc.noise.gyro_std = field<double>(n, "scene.noise", "gyro_std");
  sc.noise.mag_std = field<double>(n, "scene.noise", "mag_std");
  sc.noise.ftm_std = field<double>(n, "scene.noise", "ftm_std");
  sc.noise.orientation_std = field<double>(n, "scene.noise", "orientation_std");
  sc.noise.speed_std = field<double>(n, "scene.noise", "speed_std");

  c.data.n_samples = field<int>(r["data"], "data", "n_samples");
  const json& sp = r["data"]["split"];
  c.data.split = {field<double>(sp, "data.split", "train"), field<double>(sp, "data.split", "val"),
                  field<double>(sp, "data.split", "test")};

  const json& m = r["model"];
  c.model_kind = field<std::string>(m, "model", "kind");
  const json& e = m["encoder"];
  c.model.encoder = {field<int>(e, "model.encoder", "embed_dim"), field<int>(e, "model.encoder", "num_heads"),
                     field<int>(e, "model.encoder", "num_layers"),
                     field<int>(e, "model.encoder", "feedforward_dim"), field<int>(e, "model.encoder", "max_len")};
  const json& d = m["diffusion"];
  c.model.diffusion.K = field<int>(d, "model.diffusion", "K");
  c.model.diffusion.beta_start = field<double>(d, "model.diffusion", "beta_start");
  c.model.diffusion.beta_end = field<double>(d, "model.diffusion", "beta_end");
  c.model.diffusion.lambda = field<double>(d, "model.diffusion", "lambda");
  c.model.diffusion.deterministic_sampling = field<bool>(d, "model.diffusion", "deterministic_sampling");
  try {
    c.model.sigma_mode = sigma_mode_from_string(field<std::string>(m, "model", "sigma_mode"));
    c.model.ablation = AblationFlags::from_name(field<std::string>(m, "model", "ablation"));
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("model: ") + err.what());
  }
  c.model.channel_count = sc.channel_count;

  const json& t = r["train"];
  c.train.learning_rate = field<double>(t, "train", "learning_rate");
  c.train.lr_gamma = field<double>(t, "train", "lr_gamma");
  c.train.batch_size = field<int>(t, "train", "batch_size");
  c.train.epochs = field<int>(t, "train", "epochs");
  c.train.optimizer = field<std::string>(t, "train", "optimizer");
  c.train.val_every = field<int>(t, "train", "val_every");
  c.train.val_samples = field<int>(t, "train", "val_samples");
  c.train.grad_clip = field<double>(t, "train", "grad_clip");
  c.train.seed = c.seed;

  const json& ev = r["eval"];
  try {
    c.train.mask_spec = MaskSpec::parse(field<std::string>(t, "train", "mask"));
    c.eval.mask = MaskSpec::parse(field<std::string>(ev, "eval", "mask"));
    c.eval.iou_d_mode = iou_depth_mode_from_string(field<std::string>(ev, "eval", "iou_d_mode"));
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("mask/metric option: ") + err.what());
  }
  c.eval.max_samples = field<std::size_t>(ev, "eval", "max_samples");
  c.eval.keep_sequences = field<bool>(ev, "eval", "keep_sequences");

  c.ablate.variants = field<std::vector<std::string>>(r["ablate"], "ablate", "variants");
  c.ablate.seeds = field<std::vector<std::uint64_t>>(r["ablate"], "ablate", "seeds");
  c.run_dir = field<std::string>(r["paths"], "paths", "run_dir");

  c.validate();
  return c;
}

void RunConfig::validate() const {
  validate_scene_config(scene);
  if (data.n_samples < 3) throw ConfigError("data.n_samples: must be >= 3");
  const auto& f = data.split;
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("data.split: fractions must be non-negative and sum to 1");
  }
  if (model_kind != "ltrajdiff" && model_kind != "baseline-attention" && model_kind != "baseline-recurrent") {
    throw ConfigError("model.kind: expected ltrajdiff, baseline-attention or baseline-recurrent");
  }
  model.validate();
  if (scene.T > model.encoder.max_len) throw ConfigError("scene.T: exceeds model.encoder.max_len");
  train.validate();
  for (const auto& v : ablate.variants) {
    try {
      AblationFlags::from_name(v);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("ablate.variants: ") + e.what());
    }
  }
  if (ablate.seeds.empty()) throw ConfigError("ablate.seeds: need at least one seed");
  if (run_dir.empty()) throw ConfigError("paths.run_dir: must not be empty");
}

BaselineConfig RunConfig::baseline() const {
  BaselineConfig b;
  b.kind = baseline_kind_from_string(model_kind.substr(std::string("baseline-").size()));
  b.encoder = model.encoder;
  b.channel_count = model.channel_count;
  return b;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return run_config_from_json(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError(key + ": '" + parts[i] + "' is not a section");
    node = &next;
  }
  (*node)[parts.back()] = value;
}

}  // namespace ltrajdiff
