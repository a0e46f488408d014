#include <doctest.h>

#include <cmath>

#include "lsa/autodiff/gradcheck.hpp"
#include "lsa/corpus/dataset_io.hpp"
#include "lsa/errors.hpp"
#include "lsa/util/rng.hpp"
#include "lsa/window/model.hpp"

using namespace lsa;
using namespace lsa::window;
using ad::Tensor;

namespace {

const std::string kFixtures = LSA_FIXTURE_DIR;

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, bool grad = false) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.normal();
  return Tensor::from({r, c}, std::move(v), grad);
}

Tensor random_vector(std::size_t n, Rng& rng, bool grad = false) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return Tensor::vector(std::move(v), grad);
}

corpus::Example example_with_aspects(std::size_t aspects) {
  corpus::Example ex;
  for (std::size_t i = 0; i < 3 * aspects + 2; ++i) ex.tokens.push_back("w" + std::to_string(i % 7));
  for (std::size_t a = 0; a < aspects; ++a) {
    const auto pos = 1 + 3 * a;
    ex.aspects.push_back({pos, pos + 1, {ex.tokens[pos]}, corpus::Polarity::kPositive, false});
  }
  return ex;
}

struct Fixture {
  ModelConfig config;
  encoder::Vocabulary vocab;
  ad::ParameterSet params;
  PreparedDataset data;
};

Fixture make_fixture(Variant variant = Variant::kToken, std::uint64_t seed = 1) {
  Fixture f;
  const auto d = corpus::load_dataset(kFixtures + "/mini_corpus.json");
  std::vector<std::vector<std::string>> lists;
  for (const auto& ex : d.examples) lists.push_back(ex.tokens);
  f.vocab = encoder::Vocabulary::build(lists);
  f.config.encoder.vocab_size = f.vocab.size();
  f.config.encoder.d_model = 8;
  f.config.encoder.layers = 1;
  f.config.encoder.heads = 2;
  f.config.encoder.max_len = 24;
  f.config.variant = variant;
  f.params = LsaModel::initialize(f.config, seed);
  f.data = prepare_dataset(d, f.vocab, f.config);
  return f;
}

}  // namespace

TEST_CASE("position weight") {
  CHECK(position_weight(2, 3, 10) == 1.0);
  CHECK(position_weight(3, 3, 10) == 1.0);
  CHECK(position_weight(5, 3, 10) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(position_weight(100, 3, 10) == 0.0);
  CHECK(parse_variant("lsa_s") == Variant::kSyntax);
  CHECK(variant_name(Variant::kSpc) == "lsa_p");
  CHECK_THROWS_AS(parse_variant("lsa_x"), UsageError);
}

TEST_CASE("distances cover the markers") {
  corpus::AspectAnnotation aspect{2, 4, {"a", "b"}, corpus::Polarity::kNeutral, false};
  const auto d = positional_distances(6, aspect);
  REQUIRE(d.size() == 8);
  CHECK(d.front() == 6.0);
  CHECK(d.back() == 6.0);
  CHECK(d[1] == 2.5);  // context token 0 against aspect tokens 2 and 3
  CHECK(d[3] == 0.5);
  const auto w = position_weights(d, 3, 6);
  CHECK(w.front() == 0.5);
  CHECK(w[1] == 1.0);
}

TEST_CASE("local aspect feature") {
  Rng rng(3);
  ad::ParameterSet ps;
  encoder::SelfAttentionBlock::initialize(ps, "b", 6, 12, rng);
  const auto block = encoder::SelfAttentionBlock::bind(ps, "b", 2);
  const auto hc = random_matrix(5, 6, rng);
  const std::vector<double> ones(5, 1.0);
  CHECK(vals(aspect_feature_local(block, hc, ones)) == vals(block.forward_head(hc)));

  std::vector<double> w = ones;
  w[3] = 0.8;
  std::vector<Tensor> rows;
  for (std::size_t r = 0; r < 5; ++r) {
    auto row = ad::slice_rows(hc, r, r + 1);
    rows.push_back(r == 3 ? ad::scale(row, 0.8) : row);
  }
  CHECK(vals(aspect_feature_local(block, hc, w)) == vals(block.forward_head(ad::concat(rows))));
  CHECK_THROWS_AS(aspect_feature_local(block, hc, std::vector<double>(4, 1.0)), DimensionError);

  // Weights never increase a row's norm.
  const auto scaled = ad::scale_rows(hc, w);
  for (std::size_t r = 0; r < 5; ++r) {
    double a = 0, b = 0;
    for (std::size_t c = 0; c < 6; ++c) {
      a += hc.at(r, c) * hc.at(r, c);
      b += scaled.at(r, c) * scaled.at(r, c);
    }
    CHECK(b <= a);
  }
}

TEST_CASE("SPC feature") {
  auto f = make_fixture(Variant::kSpc);
  LsaModel model(f.config, f.params);
  const auto& ex = f.data.examples[0];  // food / service
  const auto a = model.aspect_features(ex);
  REQUIRE(a.size() == 2);
  CHECK(a[0].shape() == ad::Shape{8});
  CHECK(vals(model.aspect_features(ex)[0]) == vals(a[0]));
  CHECK(vals(a[0]) != vals(a[1]));
  CHECK_FALSE(model.global_feature(ex).defined());
  CHECK(f.params.get("head.wd").shape() == ad::Shape{8, 3});
  CHECK_FALSE(f.params.contains("head.global.wq"));
}

TEST_CASE("window construction and padding") {
  Rng rng(4);
  std::vector<Tensor> feats;
  for (int i = 0; i < 3; ++i) feats.push_back(random_vector(4, rng));

  const auto one = example_with_aspects(1);
  auto w = build_window(one, 0, std::span(feats.data(), 1), 1);
  CHECK(w.slot_count() == 3);
  CHECK(vals(w.left[0]) == vals(feats[0]));
  CHECK(vals(w.right[0]) == vals(feats[0]));
  CHECK((w.left_padded[0] && w.right_padded[0]));

  const auto two = example_with_aspects(2);
  w = build_window(two, 0, std::span(feats.data(), 2), 1);
  CHECK(vals(w.left[0]) == vals(feats[0]));
  CHECK(vals(w.right[0]) == vals(feats[1]));
  CHECK(w.left_padded[0]);
  CHECK_FALSE(w.right_padded[0]);
  w = build_window(two, 1, std::span(feats.data(), 2), 1);
  CHECK(vals(w.left[0]) == vals(feats[0]));
  CHECK(vals(w.right[0]) == vals(feats[1]));
  CHECK(w.right_padded[0]);

  const auto three = example_with_aspects(3);
  w = build_window(three, 1, feats, 1);
  CHECK(vals(w.left[0]) == vals(feats[0]));
  CHECK(vals(w.target) == vals(feats[1]));
  CHECK(vals(w.right[0]) == vals(feats[2]));
  CHECK_FALSE((w.left_padded[0] || w.right_padded[0]));

  // Swapping the neighbours swaps the slots.
  std::vector<Tensor> swapped = {feats[2], feats[1], feats[0]};
  const auto ws = build_window(three, 1, swapped, 1);
  const auto a = vals(apply_dwa(w, {}));
  const auto b = vals(apply_dwa(ws, {}));
  CHECK(std::vector<double>(a.begin(), a.begin() + 4) == std::vector<double>(b.end() - 4, b.end()));
  CHECK(a != b);

  CHECK_THROWS(build_window(three, 1, std::span(feats.data(), 2), 1));

  const auto t = target_only_window(feats[1], 2);
  CHECK(t.slot_count() == 5);
  CHECK(vals(apply_dwa(t, {})) == vals(ad::concat({feats[1], feats[1], feats[1], feats[1], feats[1]})));
}

TEST_CASE("differential weighting") {
  Rng rng(5);
  const auto three = example_with_aspects(3);
  std::vector<Tensor> feats;
  for (int i = 0; i < 3; ++i) feats.push_back(random_vector(4, rng, true));
  const auto w = build_window(three, 1, feats, 1);
  const auto plain = ad::concat({feats[0], feats[1], feats[2]});

  auto eta_l = Tensor::scalar(1.0, true);
  auto eta_r = Tensor::scalar(1.0, true);
  CHECK(vals(apply_dwa(w, {&eta_l, &eta_r})) == vals(plain));
  CHECK(vals(apply_dwa(w, {})) == vals(plain));

  eta_l.mutable_values()[0] = 0.0;
  const auto zero_left = vals(apply_dwa(w, {&eta_l, &eta_r}));
  for (int i = 0; i < 4; ++i) CHECK(zero_left[i] == 0.0);
  const auto plain_values = vals(plain);
  CHECK(std::vector<double>(zero_left.begin() + 4, zero_left.end()) ==
        std::vector<double>(plain_values.begin() + 4, plain_values.end()));

  // Padding slots keep the target unscaled.
  const auto one = example_with_aspects(1);
  const auto pw = build_window(one, 0, std::span(feats.data(), 1), 1);
  CHECK(vals(apply_dwa(pw, {&eta_l, &eta_r})) == vals(ad::concat({feats[0], feats[0], feats[0]})));

  // Gradient wrt the left feature is linear in eta_l.
  const auto readout = random_vector(12, rng);
  auto left_grad = [&](double eta) {
    eta_l.mutable_values()[0] = eta;
    feats[0].zero_grad();
    ad::Tape tape;
    {
      ad::TapeScope scope(tape);
      tape.backward(ad::sum(ad::mul(apply_dwa(w, {&eta_l, &eta_r}), readout)));
    }
    return std::vector<double>(feats[0].grad().begin(), feats[0].grad().end());
  };
  const auto g1 = left_grad(1.0);
  const auto gh = left_grad(0.5);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(gh[i] - 0.5 * g1[i]) <= 1e-8);

  const auto report = ad::check_gradients([&] { return ad::sum(ad::mul(apply_dwa(w, {&eta_l, &eta_r}), readout)); },
                                          {{"eta_l", eta_l}, {"eta_r", eta_r}, {"left", feats[0]}});
  CHECK(report.max_relative_error <= 1e-5);

  // LA / RA windows drop the other side.
  eta_l.mutable_values()[0] = 1.0;
  CHECK(vals(apply_dwa(w, {&eta_l, &eta_r}, WindowSides::kLeftOnly)) == vals(ad::concat({feats[0], feats[1]})));
  CHECK(vals(apply_dwa(w, {&eta_l, &eta_r}, WindowSides::kRightOnly)) == vals(ad::concat({feats[1], feats[2]})));
}

TEST_CASE("projection and classification") {
  Rng rng(6);
  const auto wo = random_matrix(12, 4, rng, true);
  const auto bo = random_vector(4, rng, true);
  CHECK(vals(project_window(Tensor::zeros({12}), wo, bo)) == vals(bo));
  const auto x = random_vector(12, rng);
  const auto f0 = vals(project_window(Tensor::zeros({12}), wo, bo));
  const auto f1 = vals(project_window(x, wo, bo));
  const auto f2 = vals(project_window(ad::scale(x, 2.0), wo, bo));
  for (int i = 0; i < 4; ++i) CHECK(std::abs((f2[i] - f1[i]) - (f1[i] - f0[i])) <= 1e-12);
  CHECK_THROWS_AS(project_window(Tensor::zeros({11}), wo, bo), DimensionError);
  const auto readout = random_vector(4, rng);
  const auto report =
      ad::check_gradients([&] { return ad::sum(ad::mul(project_window(x, wo, bo), readout)); }, {{"wo", wo}, {"bo", bo}});
  CHECK(report.max_relative_error <= 1e-5);

  const auto wd = random_matrix(8, 3, rng);
  const auto bd = random_vector(3, rng);
  const auto h = random_vector(4, rng);
  const auto g = random_vector(4, rng);
  const auto p = classify(h, g, wd, bd);
  REQUIRE(p.size() == 3);
  CHECK(std::abs(p.at(0) + p.at(1) + p.at(2) - 1.0) <= 1e-12);
  const auto shifted = classify(h, g, wd, ad::add(bd, Tensor::filled({3}, 7.5)));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(shifted.at(i) - p.at(i)) <= 1e-12);
  auto argmax = [](const Tensor& t) {
    return std::max_element(t.values().begin(), t.values().end()) - t.values().begin();
  };
  CHECK(argmax(shifted) == argmax(p));
}

TEST_CASE("model forward") {
  for (auto variant : {Variant::kSpc, Variant::kToken, Variant::kSyntax}) {
    auto f = make_fixture(variant);
    LsaModel model(f.config, f.params);
    CHECK(model.eta_l().item() == 1.0);
    CHECK(model.eta_r().item() == 1.0);
    for (const auto& ex : f.data.examples) {
      const auto logits = model.forward(ex);
      CHECK(logits.size() == ex.aspects.size());
      for (const auto& l : logits) {
        CHECK(l.shape() == ad::Shape{3});
        for (double v : l.values()) CHECK(std::isfinite(v));
      }
      if (ex.aspects.size() == 1) CHECK(vals(logits[0]) == vals(model.reference_mono_aspect(ex)));
    }
  }
}

TEST_CASE("mono-aspect output depends only on its own example") {
  auto f = make_fixture();
  LsaModel model(f.config, f.params);
  const auto& battery = f.data.examples[1];
  const auto before = vals(model.forward(battery)[0]);
  f.data.examples[0].context_ids.back() = 5;
  f.data.examples.erase(f.data.examples.begin() + 2);
  CHECK(vals(model.forward(f.data.examples[1])[0]) == before);
}

TEST_CASE("static weights at one equal the learned path at initialization") {
  auto f = make_fixture();
  LsaModel learned(f.config, f.params);
  auto fixed_config = f.config;
  fixed_config.dwa = false;
  LsaModel fixed(fixed_config, f.params);
  for (const auto& ex : f.data.examples) {
    const auto a = learned.forward(ex);
    const auto b = fixed.forward(ex);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(vals(a[i]) == vals(b[i]));
  }
}

TEST_CASE("ablation shapes") {
  auto f = make_fixture();
  auto la = f.config;
  la.sides = WindowSides::kLeftOnly;
  const auto ps = LsaModel::initialize(la, 2);
  CHECK(ps.get("head.wo").shape() == ad::Shape{16, 8});
  CHECK(f.params.get("head.wo").shape() == ad::Shape{24, 8});
  CHECK(f.params.get("head.wd").shape() == ad::Shape{16, 3});
  LsaModel model(la, ps);
  CHECK(model.forward(f.data.examples[2]).size() == 3);
  CHECK_THROWS(LsaModel(f.config, ps));
}

TEST_CASE("full model gradient check") {
  auto f = make_fixture(Variant::kToken, 9);
  LsaModel model(f.config, f.params);
  const auto& ex = f.data.examples[7];  // three aspects, mixed polarity
  auto loss = [&] {
    const auto logits = model.forward(ex);
    Tensor total;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const auto ce = ad::cross_entropy(ad::softmax(logits[i]), ex.aspects[i].gold);
      total = total.defined() ? ad::add(total, ce) : ce;
    }
    return total;
  };
  std::vector<std::pair<std::string, Tensor>> params(f.params.entries().begin(), f.params.entries().end());
  const auto report = ad::check_gradients(loss, params);
  INFO(report.worst_parameter);
  CHECK(report.max_relative_error <= 1e-5);
}
