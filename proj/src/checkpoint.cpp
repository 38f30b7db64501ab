#include "ltrajdiff/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ltrajdiff/baselines.hpp"
#include "ltrajdiff/errors.hpp"
#include "ltrajdiff/hashing.hpp"
#include "ltrajdiff/model.hpp"

namespace ltrajdiff {

namespace {

constexpr char kMagic[8] = {'L', 'T', 'D', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}

  template <class T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void read_doubles(double* dst, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, data_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw IntegrityError("checkpoint truncated");
  }
  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string config_hash_of(const nlohmann::json& model_description) {
  return hex64(fnv1a64(model_description.at("config").dump()));
}

Checkpoint make_checkpoint(const TrainableModel& model) {
  Checkpoint c;
  c.model = model.describe();
  c.config_hash = config_hash_of(c.model);
  c.tensors = model.parameters();
  return c;
}

std::string checkpoint_manifest_path(const std::string& path) { return path + ".manifest"; }

std::string checkpoint_manifest(const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "schema_version: " << kCheckpointVersion << "\n";
  os << "kind: " << ckpt.model.value("kind", std::string("unknown")) << "\n";
  os << "config_hash: " << ckpt.config_hash << "\n";
  os << "epoch: " << ckpt.epoch << "\n";
  os << "parameters: " << ckpt.tensors.scalar_count() << "\n";
  os << "metrics: " << (ckpt.metrics.is_null() ? "{}" : ckpt.metrics.dump()) << "\n";
  return os.str();
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const nlohmann::json header = {{"model", ckpt.model},
                                 {"train_config", ckpt.train_config},
                                 {"epoch", ckpt.epoch},
                                 {"rng_state", ckpt.rng_state},
                                 {"metrics", ckpt.metrics},
                                 {"config_hash", ckpt.config_hash}};
  const std::string head = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, head.size());
  out += head;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
    const auto& name = ckpt.tensors.name(i);
    const auto& m = ckpt.tensors.value(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  put<std::uint64_t>(out, fnv1a64(out));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  std::ofstream mf(checkpoint_manifest_path(path));
  mf << checkpoint_manifest(ckpt);
  if (!f || !mf) throw ParseError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string data = ss.str();
  if (data.size() < sizeof(kMagic) + 4 || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IntegrityError("'" + path + "' is not a checkpoint (bad magic)");
  }
  Reader head_reader(data, data.size());
  head_reader.bytes(sizeof(kMagic));
  const auto version = head_reader.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IntegrityError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
  }
  if (data.size() < sizeof(kMagic) + 4 + 8 + 8) throw IntegrityError("checkpoint truncated");
  const std::size_t body = data.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + body, 8);
  if (stored != fnv1a64(std::string_view(data.data(), body))) {
    throw IntegrityError("checkpoint checksum mismatch (file truncated or corrupted)");
  }

  Reader r(data, body);
  r.bytes(sizeof(kMagic) + 4);
  const auto head_len = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(head_len)));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint header: ") + e.what());
  }
  Checkpoint c;
  c.model = header.at("model");
  c.train_config = header.at("train_config");
  c.epoch = header.at("epoch").get<int>();
  c.rng_state = header.at("rng_state");
  c.metrics = header.at("metrics");
  c.config_hash = header.at("config_hash").get<std::string>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    const auto ref = c.tensors.add(name, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    r.read_doubles(c.tensors.value(ref).data(), rows * cols);
  }
  if (r.pos() != body) throw IntegrityError("checkpoint has trailing bytes");
  return c;
}

std::unique_ptr<TrainableModel> restore_model(const Checkpoint& ckpt) {
  const std::string kind = ckpt.model.at("kind").get<std::string>();
  const auto layout = Standardizer::from_json(ckpt.model.at("layout_norm"));
  const auto mobile = Standardizer::from_json(ckpt.model.at("mobile_norm"));
  std::unique_ptr<TrainableModel> model;
  if (kind == "ltrajdiff") {
    auto m = std::make_unique<LTrajDiffModel>(ModelConfig::from_json(ckpt.model.at("config")), 0);
    m->set_normalization(layout, mobile);
    model = std::move(m);
  } else if (kind.rfind("baseline-", 0) == 0) {
    auto m = std::make_unique<Seq2SeqBaseline>(BaselineConfig::from_json(ckpt.model.at("config")), 0);
    m->set_normalization(layout, mobile);
    model = std::move(m);
  } else {
    throw ParseError("checkpoint holds unknown model kind '" + kind + "'");
  }
  auto& params = model->parameters();
  if (params.size() != ckpt.tensors.size()) {
    throw IntegrityError("checkpoint tensor count " + std::to_string(ckpt.tensors.size()) +
                         " does not match the model (" + std::to_string(params.size()) + ")");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto ref = ckpt.tensors.find(params.name(i));
    if (!ref) throw IntegrityError("checkpoint is missing tensor '" + params.name(i) + "'");
    const auto& src = ckpt.tensors.value(*ref);
    if (src.rows() != params.value(i).rows() || src.cols() != params.value(i).cols()) {
      throw IntegrityError("checkpoint tensor '" + params.name(i) + "' has the wrong shape");
    }
    params.value(i) = src;
  }
  return model;
}

std::optional<std::string> config_hash_warning(const Checkpoint& ckpt, const std::string& expected_hash) {
  if (expected_hash.empty() || expected_hash == ckpt.config_hash) return std::nullopt;
  return "checkpoint config hash " + ckpt.config_hash + " differs from the requested config " + expected_hash;
}

}  // namespace ltrajdiff
