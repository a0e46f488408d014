#include "lsa/training/config.hpp"

#include <set>

#include "lsa/errors.hpp"

namespace lsa::training {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "variant", "k", "alpha", "max_len", "batch", "lr", "eta_lr", "lambda", "lambda_star",
      "epochs", "seed", "no_dwa", "la_only", "ra_only", "backbone_only", "static_eta_l",
      "static_eta_r", "freeze_encoder", "d_model", "layers", "heads", "ff_dim", "train", "val",
      "test", "parses", "val_fraction"};
  return keys;
}

std::size_t kv_size(const KeyValues& kv, const std::string& key) {
  const auto v = kv_int(kv, key);
  if (v < 0) throw SchemaError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid config: " + what);
  };
  require(k >= 1, "k must be >= 1");
  require(alpha >= 0, "alpha must be >= 0");
  require(max_len >= 3, "max_len must be >= 3");
  require(batch >= 1, "batch must be >= 1");
  require(lr >= 0 && eta_lr >= 0, "learning rates must be >= 0");
  require(lambda >= 0 && lambda_star >= 0, "regularization weights must be >= 0");
  require(!(la_only && ra_only), "la_only and ra_only are mutually exclusive");
  require(d_model >= 1 && layers >= 1 && heads >= 1, "d_model, layers and heads must be >= 1");
  require(d_model % heads == 0, "d_model must be divisible by heads");
  require(val_fraction >= 0 && val_fraction < 1, "val_fraction must be in [0, 1)");
}

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv;
  kv["variant"] = std::string(window::variant_name(variant));
  kv["k"] = std::to_string(k);
  kv["alpha"] = format_double(alpha);
  kv["max_len"] = std::to_string(max_len);
  kv["batch"] = std::to_string(batch);
  kv["lr"] = format_double(lr);
  kv["eta_lr"] = format_double(eta_lr);
  kv["lambda"] = format_double(lambda);
  kv["lambda_star"] = format_double(lambda_star);
  kv["epochs"] = std::to_string(epochs);
  kv["seed"] = std::to_string(seed);
  kv["no_dwa"] = no_dwa ? "true" : "false";
  kv["la_only"] = la_only ? "true" : "false";
  kv["ra_only"] = ra_only ? "true" : "false";
  kv["backbone_only"] = backbone_only ? "true" : "false";
  kv["static_eta_l"] = format_double(static_eta_l);
  kv["static_eta_r"] = format_double(static_eta_r);
  kv["freeze_encoder"] = freeze_encoder ? "true" : "false";
  kv["d_model"] = std::to_string(d_model);
  kv["layers"] = std::to_string(layers);
  kv["heads"] = std::to_string(heads);
  kv["ff_dim"] = std::to_string(ff_dim);
  kv["train"] = train;
  kv["val"] = val;
  kv["test"] = test;
  kv["parses"] = parses;
  kv["val_fraction"] = format_double(val_fraction);
  return kv;
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv, TrainConfig c) {
  for (const auto& [key, value] : kv) {
    if (!known_keys().count(key)) throw SchemaError("unknown config key '" + key + "'");
  }
  auto has = [&](const char* key) { return kv.count(key) != 0; };
  if (has("variant")) c.variant = window::parse_variant(kv.at("variant"));
  if (has("k")) c.k = kv_size(kv, "k");
  if (has("alpha")) c.alpha = kv_double(kv, "alpha");
  if (has("max_len")) c.max_len = kv_size(kv, "max_len");
  if (has("batch")) c.batch = kv_size(kv, "batch");
  if (has("lr")) c.lr = kv_double(kv, "lr");
  if (has("eta_lr")) c.eta_lr = kv_double(kv, "eta_lr");
  if (has("lambda")) c.lambda = kv_double(kv, "lambda");
  if (has("lambda_star")) c.lambda_star = kv_double(kv, "lambda_star");
  if (has("epochs")) c.epochs = kv_size(kv, "epochs");
  if (has("seed")) c.seed = static_cast<std::uint64_t>(kv_size(kv, "seed"));
  if (has("no_dwa")) c.no_dwa = kv_bool(kv, "no_dwa");
  if (has("la_only")) c.la_only = kv_bool(kv, "la_only");
  if (has("ra_only")) c.ra_only = kv_bool(kv, "ra_only");
  if (has("backbone_only")) c.backbone_only = kv_bool(kv, "backbone_only");
  if (has("static_eta_l")) c.static_eta_l = kv_double(kv, "static_eta_l");
  if (has("static_eta_r")) c.static_eta_r = kv_double(kv, "static_eta_r");
  if (has("freeze_encoder")) c.freeze_encoder = kv_bool(kv, "freeze_encoder");
  if (has("d_model")) c.d_model = kv_size(kv, "d_model");
  if (has("layers")) c.layers = kv_size(kv, "layers");
  if (has("heads")) c.heads = kv_size(kv, "heads");
  if (has("ff_dim")) c.ff_dim = kv_size(kv, "ff_dim");
  if (has("train")) c.train = kv.at("train");
  if (has("val")) c.val = kv.at("val");
  if (has("test")) c.test = kv.at("test");
  if (has("parses")) c.parses = kv.at("parses");
  if (has("val_fraction")) c.val_fraction = kv_double(kv, "val_fraction");
  return c;
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv) { return from_key_values(kv, TrainConfig{}); }

std::string TrainConfig::to_text() const { return format_key_values(to_key_values()); }

std::string TrainConfig::hash() const { return fnv1a_hex(to_text()); }

window::ModelConfig TrainConfig::model_config(std::size_t vocab_size) const {
  window::ModelConfig m;
  m.encoder.vocab_size = vocab_size;
  m.encoder.d_model = d_model;
  m.encoder.layers = layers;
  m.encoder.heads = heads;
  m.encoder.ff_dim = ff_dim;
  m.encoder.max_len = max_len;
  m.variant = variant;
  m.k = k;
  m.alpha = alpha;
  m.sides = la_only ? window::WindowSides::kLeftOnly
                    : ra_only ? window::WindowSides::kRightOnly : window::WindowSides::kBoth;
  m.dwa = !no_dwa;
  m.backbone_only = backbone_only;
  m.static_eta_l = static_eta_l;
  m.static_eta_r = static_eta_r;
  return m;
}

}  // namespace lsa::training
