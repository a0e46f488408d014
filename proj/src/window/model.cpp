#include "lsa/window/model.hpp"

#include <algorithm>

#include "lsa/corpus/analysis.hpp"
#include "lsa/errors.hpp"

namespace lsa::window {

using ad::Tensor;

void ModelConfig::validate() const {
  encoder.validate();
  if (k == 0) throw UsageError("model: k must be at least 1");
  if (!(alpha >= 0)) throw UsageError("model: alpha must be non-negative");
  if (encoder.max_len < 3) throw UsageError("model: max_len must leave room for markers");
}

std::size_t PreparedDataset::pair_count() const {
  std::size_t n = 0;
  for (const auto& e : examples) n += e.aspects.size();
  return n;
}

PreparedDataset prepare_dataset(const corpus::Dataset& dataset, const encoder::Vocabulary& vocab,
                                const ModelConfig& config, const distance::ParseMap* parses) {
  config.validate();
  const std::size_t max_len = config.encoder.max_len;
  PreparedDataset out;
  out.examples.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    PreparedExample p;
    p.example = ex;
    const auto ids = vocab.encode(ex.tokens);
    const std::size_t n = std::min(ids.size(), max_len - 2);
    p.context_ids.reserve(n + 2);
    p.context_ids.push_back(encoder::Vocabulary::kCls);
    p.context_ids.insert(p.context_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
    p.context_ids.push_back(encoder::Vocabulary::kSep);

    const distance::DependencyTree* tree = nullptr;
    if (config.variant == Variant::kSyntax) {
      if (parses && ex.parse_ref) {
        auto it = parses->find(*ex.parse_ref);
        if (it != parses->end() && it->second.word_count() == ex.tokens.size()) tree = &it->second;
      }
      if (!tree) {
        p.syntax_fallback = true;
        ++out.syntax_fallbacks;
      }
    }
    const auto alignment = distance::TokenAlignment::identity(ex.tokens.size());
    const auto clusters = corpus::cluster_sizes(ex);
    for (std::size_t a = 0; a < ex.aspects.size(); ++a) {
      const auto& asp = ex.aspects[a];
      PreparedAspect pa;
      pa.gold = corpus::polarity_index(asp.polarity);
      pa.implicit = asp.implicit;
      pa.cluster_size = clusters[a];
      if (config.variant == Variant::kSpc) {
        const auto term_ids = vocab.encode(asp.term);
        pa.spc_ids = encoder::build_spc_input(ids, term_ids, max_len);
      } else {
        const auto distances = tree ? syntactic_distances(n, asp, *tree, alignment)
                                    : positional_distances(n, asp);
        pa.weights = position_weights(distances, config.alpha, n);
      }
      p.aspects.push_back(std::move(pa));
    }
    out.examples.push_back(std::move(p));
  }
  return out;
}

ad::ParameterSet LsaModel::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ad::ParameterSet params;
  const std::size_t d = config.encoder.d_model;
  const std::size_t ff = config.encoder.feed_forward_dim();
  encoder::Encoder::initialize(params, config.encoder, rng);
  encoder::SelfAttentionBlock::initialize(params, "head.local", d, ff, rng);
  const bool spc = config.variant == Variant::kSpc;
  if (!spc) encoder::SelfAttentionBlock::initialize(params, "head.global", d, ff, rng);
  const std::size_t in = config.window_slots() * d;
  params.add("head.wo", encoder::scaled_normal(in, d, rng));
  params.add("head.bo", Tensor::zeros({d}));
  const std::size_t head_in = spc ? d : 2 * d;
  params.add("head.wd", encoder::scaled_normal(head_in, corpus::kNumPolarities, rng));
  params.add("head.bd", Tensor::zeros({corpus::kNumPolarities}));
  params.add(kEtaLeft, Tensor::scalar(1.0));
  params.add(kEtaRight, Tensor::scalar(1.0));
  return params;
}

LsaModel::LsaModel(ModelConfig config, const ad::ParameterSet& params)
    : config_(std::move(config)), encoder_(encoder::Encoder::bind(params, config_.encoder)) {
  config_.validate();
  local_ = encoder::SelfAttentionBlock::bind(params, "head.local", config_.encoder.heads);
  if (config_.variant != Variant::kSpc) {
    global_ = encoder::SelfAttentionBlock::bind(params, "head.global", config_.encoder.heads);
  }
  wo_ = params.get("head.wo");
  bo_ = params.get("head.bo");
  wd_ = params.get("head.wd");
  bd_ = params.get("head.bd");
  eta_l_ = params.get(kEtaLeft);
  eta_r_ = params.get(kEtaRight);
  const std::size_t d = config_.encoder.d_model;
  const std::size_t head_in = config_.variant == Variant::kSpc ? d : 2 * d;
  if (wo_.shape() != ad::Shape{config_.window_slots() * d, d} ||
      wd_.shape() != ad::Shape{head_in, corpus::kNumPolarities}) {
    throw DimensionError("model parameters do not match the window configuration");
  }
}

std::vector<Tensor> LsaModel::aspect_features(const PreparedExample& example) const {
  std::vector<Tensor> features;
  features.reserve(example.aspects.size());
  if (config_.variant == Variant::kSpc) {
    for (const auto& a : example.aspects) features.push_back(aspect_feature_spc(encoder_, local_, a.spc_ids));
    return features;
  }
  if (example.aspects.empty()) return features;
  const Tensor hc = encoder_.encode(example.context_ids);
  for (const auto& a : example.aspects) features.push_back(aspect_feature_local(local_, hc, a.weights));
  return features;
}

Tensor LsaModel::global_feature(const PreparedExample& example) const {
  if (config_.variant == Variant::kSpc) return {};
  return global_.forward_head(encoder_.encode(example.context_ids));
}

Tensor LsaModel::head(const Tensor& aggregated, const Tensor& global) const {
  return logits(project_window(aggregated, wo_, bo_), global, wd_, bd_);
}

std::vector<Tensor> LsaModel::forward(const PreparedExample& example) const {
  std::vector<Tensor> out;
  if (example.aspects.empty()) return out;
  std::vector<Tensor> features;
  Tensor global;
  if (config_.variant == Variant::kSpc) {
    features = aspect_features(example);
  } else {
    // One encoder pass shared by every aspect and the global feature.
    const Tensor hc = encoder_.encode(example.context_ids);
    for (const auto& a : example.aspects) features.push_back(aspect_feature_local(local_, hc, a.weights));
    global = global_.forward_head(hc);
  }
  DwaWeights weights;
  if (config_.dwa) {
    weights.eta_l = &eta_l_;
    weights.eta_r = &eta_r_;
  } else {
    weights.static_l = config_.static_eta_l;
    weights.static_r = config_.static_eta_r;
  }
  out.reserve(features.size());
  for (std::size_t t = 0; t < features.size(); ++t) {
    const auto window = config_.backbone_only ? target_only_window(features[t], config_.k)
                                              : build_window(example.example, t, features, config_.k);
    out.push_back(head(apply_dwa(window, weights, config_.sides), global));
  }
  return out;
}

Tensor LsaModel::reference_mono_aspect(const PreparedExample& example) const {
  if (example.aspects.size() != 1) {
    throw UsageError("reference path needs a single-aspect example");
  }
  const Tensor target = aspect_features(example).front();
  const std::vector<Tensor> copies(config_.window_slots(), target);
  return head(ad::concat(copies), global_feature(example));
}

}  // namespace lsa::window
