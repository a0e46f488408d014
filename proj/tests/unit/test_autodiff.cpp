#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lsa/autodiff/checkpoint.hpp"
#include "lsa/autodiff/gradcheck.hpp"
#include "lsa/autodiff/ops.hpp"
#include "lsa/autodiff/optimizer.hpp"
#include "lsa/autodiff/parameters.hpp"
#include "lsa/errors.hpp"
#include "lsa/util/rng.hpp"

using namespace lsa;
using namespace lsa::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Tensor::from(std::move(shape), std::move(v));
}

// sum(op(inputs) * R) for a fixed random R, so every output coordinate matters.
double check_op(const std::function<Tensor(const std::vector<Tensor>&)>& op, std::vector<Tensor> inputs,
                Rng& rng) {
  const Tensor probe = op(inputs);
  const Tensor readout = random_tensor(probe.shape(), rng);
  std::vector<std::pair<std::string, Tensor>> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace_back("in" + std::to_string(i), inputs[i]);
  const auto report = check_gradients([&] { return sum(mul(op(inputs), readout)); }, params);
  return report.max_relative_error;
}

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("matmul examples") {
  const auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  const auto m = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(vals(matmul(eye, m)) == std::vector<double>{1, 2, 3, 4});
  CHECK(vals(matmul(Tensor::from({1, 2}, {1, 0}), Tensor::from({2, 1}, {0, 5}))) == std::vector<double>{0});
  Rng rng(7);
  CHECK(check_op([](const auto& in) { return matmul(in[0], in[1]); },
                 {random_tensor({4, 3}, rng), random_tensor({3, 2}, rng)}, rng) <= 1e-6);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL("expected a DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("concat") {
  CHECK(vals(concat({Tensor::vector({1}), Tensor::vector({2})})) == std::vector<double>{1, 2});
  const auto three = concat({Tensor::zeros({4}), Tensor::zeros({4}), Tensor::zeros({4})});
  CHECK(three.shape() == Shape{12});
  CHECK_THROWS_AS(concat({}), DimensionError);
  CHECK_THROWS_AS(concat({Tensor::zeros({2, 2}), Tensor::zeros({2, 3})}, 0), DimensionError);

  auto a = Tensor::vector({1, 2}, true);
  auto b = Tensor::vector({3}, true);
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(sum(concat({a, b})));
  }
  CHECK(vals(Tensor::vector({a.grad()[0], a.grad()[1], b.grad()[0]})) == std::vector<double>{1, 1, 1});
}

TEST_CASE("scale by a learnable scalar") {
  const auto t = Tensor::vector({1, 2, 3});
  CHECK(vals(scale(t, Tensor::scalar(0))) == std::vector<double>{0, 0, 0});
  CHECK(vals(scale(t, Tensor::scalar(1))) == std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(scale(t, Tensor::vector({1, 2})), DimensionError);

  auto s = Tensor::scalar(0.7, true);
  const auto x = Tensor::vector({1, 2});
  const auto numeric = finite_difference_gradient([&] { return sum(scale(x, s)).item(); }, s);
  CHECK(numeric[0] == doctest::Approx(3.0).epsilon(1e-9));
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(sum(scale(x, s)));
  }
  CHECK(s.grad()[0] == doctest::Approx(3.0));
}

TEST_CASE("softmax") {
  const auto u = softmax(Tensor::vector({0, 0, 0}));
  for (double p : u.values()) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto big = softmax(Tensor::vector({1000, 0, 0}));
  CHECK(big.at(0) == doctest::Approx(1.0));
  CHECK(std::isfinite(big.at(1)));
  CHECK(big.at(1) < 1e-300);

  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_tensor({5}, rng, 3.0);
    const auto p = softmax(v);
    double total = 0;
    for (double x : p.values()) {
      CHECK(x > 0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    const double c = rng.uniform(-50, 50);
    const auto q = softmax(add(v, Tensor::filled({5}, c)));
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(p.at(i) - q.at(i)) <= 1e-12);
  }
  CHECK(check_op([](const auto& in) { return softmax(in[0]); }, {random_tensor({4}, rng)}, rng) <= 1e-6);
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy(Tensor::vector({1, 0, 0}), 0).item() == 0.0);
  CHECK(cross_entropy(Tensor::vector({1.0 / 3, 1.0 / 3, 1.0 / 3}), 2).item() ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
  // The clamp keeps a zero probability finite.
  CHECK(cross_entropy(Tensor::vector({1, 0, 0}), 1).item() == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(cross_entropy(Tensor::vector({0.5, 0.5}), 2), Error);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = softmax(random_tensor({3}, rng));
    const std::size_t gold = rng.uniform_index(3);
    CHECK(cross_entropy(p, gold).item() == doctest::Approx(-std::log(p.at(gold))).epsilon(1e-14));
  }
}

TEST_CASE("backward accumulates and rejects misuse") {
  auto x = Tensor::scalar(2.0, true);
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(x);
  }
  CHECK(x.grad()[0] == 1.0);

  x.zero_grad();
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = add(x, x);
  }
  tape.backward(y);
  CHECK(x.grad()[0] == 2.0);
  CHECK_THROWS_AS(tape.backward(y), TapeError);

  Tape t2;
  Tensor v;
  {
    TapeScope scope(t2);
    v = scale(Tensor::vector({1, 2}), x);
  }
  CHECK_THROWS_AS(t2.backward(v), TapeError);

  Tape t3, t4;
  Tensor z;
  {
    TapeScope scope(t3);
    z = mul(x, x);
  }
  CHECK_THROWS_AS(t4.backward(z), TapeError);
}

TEST_CASE("two backward orders agree") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto w = random_tensor({3, 3}, rng);
    auto b = random_tensor({3}, rng);
    w.set_requires_grad(true);
    b.set_requires_grad(true);
    auto run = [&](BackwardOrder order) {
      w.zero_grad();
      b.zero_grad();
      Tape tape;
      Tensor loss;
      {
        TapeScope scope(tape);
        const auto x = random_tensor({4, 3}, rng);
        auto h = gelu(linear(x, w, b));
        h = layer_norm(add(h, linear(h, w, b)), Tensor::filled({3}, 1.0), b);
        loss = sum(mul(softmax(h), h));
      }
      tape.backward(loss, order);
      return std::make_pair(vals(Tensor::from({3, 3}, std::vector<double>(w.grad().begin(), w.grad().end()))),
                            std::vector<double>(b.grad().begin(), b.grad().end()));
    };
    const auto seed_state = rng;
    const auto a = run(BackwardOrder::kRecorded);
    rng = seed_state;
    const auto d = run(BackwardOrder::kDepthFirst);
    for (std::size_t i = 0; i < a.first.size(); ++i) CHECK(std::abs(a.first[i] - d.first[i]) <= 1e-10);
    for (std::size_t i = 0; i < a.second.size(); ++i) CHECK(std::abs(a.second[i] - d.second[i]) <= 1e-10);
  }
}

TEST_CASE("every primitive passes the gradient check over 100 seeds") {
  using Op = std::function<Tensor(const std::vector<Tensor>&)>;
  struct Case {
    const char* name;
    Op op;
    std::vector<Shape> shapes;
  };
  const std::vector<double> row_weights = {1.0, 0.8, 0.3, 0.0};
  const std::vector<std::int32_t> ids = {2, 0, 2, 1};
  const std::vector<Case> cases = {
      {"matmul", [](const auto& in) { return matmul(in[0], in[1]); }, {{3, 4}, {4, 2}}},
      {"matmul_vec", [](const auto& in) { return matmul(in[0], in[1]); }, {{4}, {4, 2}}},
      {"linear", [](const auto& in) { return linear(in[0], in[1], in[2]); }, {{3, 4}, {4, 2}, {2}}},
      {"add", [](const auto& in) { return add(in[0], in[1]); }, {{2, 3}, {2, 3}}},
      {"sub", [](const auto& in) { return sub(in[0], in[1]); }, {{2, 3}, {2, 3}}},
      {"mul", [](const auto& in) { return mul(in[0], in[1]); }, {{2, 3}, {2, 3}}},
      {"scale", [](const auto& in) { return scale(in[0], in[1]); }, {{2, 3}, {1}}},
      {"scale_const", [](const auto& in) { return scale(in[0], -1.7); }, {{5}}},
      {"scale_rows", [&](const auto& in) { return scale_rows(in[0], row_weights); }, {{4, 3}}},
      {"concat0", [](const auto& in) { return concat({in[0], in[1]}, 0); }, {{2, 3}, {1, 3}}},
      {"concat1", [](const auto& in) { return concat({in[0], in[1]}, 1); }, {{2, 3}, {2, 1}}},
      {"row", [](const auto& in) { return row(in[0], 1); }, {{3, 2}}},
      {"slice_rows", [](const auto& in) { return slice_rows(in[0], 1, 3); }, {{4, 2}}},
      {"reshape", [](const auto& in) { return reshape(in[0], {6}); }, {{2, 3}}},
      {"transpose", [](const auto& in) { return transpose(in[0]); }, {{2, 3}}},
      {"squared_norm", [](const auto& in) { return squared_norm(in[0]); }, {{2, 3}}},
      {"gelu", [](const auto& in) { return gelu(in[0]); }, {{2, 3}}},
      {"tanh", [](const auto& in) { return tanh(in[0]); }, {{2, 3}}},
      {"softmax_rows", [](const auto& in) { return softmax(in[0]); }, {{3, 4}}},
      {"layer_norm", [](const auto& in) { return layer_norm(in[0], in[1], in[2]); }, {{3, 4}, {4}, {4}}},
      {"cross_entropy", [](const auto& in) { return cross_entropy(softmax(in[0]), 1); }, {{3}}},
      {"embedding", [&](const auto& in) { return embedding(in[0], ids); }, {{3, 2}}},
      {"attention", [](const auto& in) { return attention(in[0], in[1], in[2], 2); }, {{3, 4}, {5, 4}, {5, 4}}},
      {"attention_masked", [](const auto& in) { return attention(in[0], in[1], in[2], 2, 3); },
       {{2, 4}, {5, 4}, {5, 4}}},
  };
  for (const auto& c : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      Rng rng(seed);
      std::vector<Tensor> inputs;
      for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng));
      const std::vector<std::vector<double>> before = [&] {
        std::vector<std::vector<double>> out;
        for (const auto& t : inputs) out.push_back(vals(t));
        return out;
      }();
      worst = std::max(worst, check_op(c.op, inputs, rng));
      for (std::size_t i = 0; i < inputs.size(); ++i) CHECK(vals(inputs[i]) == before[i]);
    }
    INFO(c.name);
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("finite differences") {
  auto x = Tensor::scalar(3.0);
  const auto g = finite_difference_gradient([&] { return x.item() * x.item(); }, x);
  CHECK(std::abs(g[0] - 6.0) <= 1e-6);
  CHECK(x.item() == 3.0);
  const auto zero = finite_difference_gradient([] { return 4.2; }, x);
  CHECK(zero[0] == 0.0);

  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto w1 = random_tensor({3, 3}, rng), w2 = random_tensor({3, 2}, rng);
    auto b1 = random_tensor({3}, rng), b2 = random_tensor({2}, rng);
    const auto in = random_tensor({2, 3}, rng);
    const auto report = check_gradients([&] { return sum(linear(linear(in, w1, b1), w2, b2)); },
                                        {{"w1", w1}, {"b1", b1}, {"w2", w2}, {"b2", b2}});
    CHECK(report.max_relative_error <= 1e-6);
    CHECK(report.coordinates == 9 + 3 + 6 + 2);
  }
}

TEST_CASE("tensor shape contract") {
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor::from({2, 0}, {}), DimensionError);
  CHECK_THROWS_AS(Tensor::from({1, 1, 1}, {1}), DimensionError);
  auto t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  t.zero_grad();
  CHECK(t.grad().size() == t.values().size());
}

#ifndef NDEBUG
TEST_CASE("non-finite results from finite inputs are caught in debug builds") {
  CHECK_THROWS_AS(mul(Tensor::vector({1e200}), Tensor::vector({1e200})), NumericError);
}
#endif

TEST_CASE("AdamW") {
  SUBCASE("zero gradient and zero decay leave parameters unchanged") {
    auto p = Tensor::vector({0.5, -1.0}, true);
    p.zero_grad();
    AdamW opt({{"g", {p}, 0.1, 0.0}});
    opt.step();
    CHECK(vals(p) == std::vector<double>{0.5, -1.0});
  }
  SUBCASE("one step reproduces the hand computation") {
    auto p = Tensor::scalar(2.0, true);
    p.mutable_grad()[0] = 0.5;
    const double lr = 0.1, wd = 0.01;
    AdamW opt({{"g", {p}, lr, wd}});
    opt.step();
    const double decayed = 2.0 * (1 - lr * wd);
    const double m = 0.1 * 0.5, v = 0.001 * 0.25;
    const double mhat = m / (1 - 0.9), vhat = v / (1 - 0.999);
    CHECK(p.item() == doctest::Approx(decayed - lr * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-15));
    CHECK(opt.step_count() == 1);
    CHECK(opt.first_moment(0, 0)[0] == doctest::Approx(m));
  }
  SUBCASE("groups step with their own learning rates") {
    auto enc = Tensor::scalar(1.0, true);
    auto eta = Tensor::scalar(1.0, true);
    enc.mutable_grad()[0] = 1.0;
    eta.mutable_grad()[0] = 1.0;
    AdamW opt({{"encoder", {enc}, 1e-3, 0.0}, {"eta", {eta}, 0.01, 0.0}});
    opt.step();
    // The first bias-corrected Adam step has magnitude lr (up to ε).
    CHECK(1.0 - enc.item() == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(1.0 - eta.item() == doctest::Approx(0.01).epsilon(1e-6));
  }
  SUBCASE("missing gradients are an error") {
    auto p = Tensor::scalar(1.0, true);
    AdamW opt({{"g", {p}, 0.1, 0.0}});
    CHECK_THROWS_AS(opt.step(), TapeError);
  }
}

TEST_CASE("parameter set") {
  ParameterSet ps;
  ps.add("a", Tensor::vector({1, 2}));
  CHECK(ps.get("a").requires_grad());
  CHECK_THROWS_AS(ps.add("a", Tensor::vector({1})), Error);
  CHECK_THROWS_AS(ps.get("missing"), Error);
  auto copy = ps.clone();
  copy.get("a").node()->value[0] = 9;
  CHECK(ps.get("a").at(0) == 1.0);
}

TEST_CASE("checkpoint round trip is byte exact") {
  Rng rng(9);
  Checkpoint ck;
  ck.parameters.add("w", random_tensor({3, 2}, rng));
  ck.parameters.add("b", Tensor::vector({0.1, -0.0, 1e-300}));
  ck.metadata = {{"note", "x"}, {"n", 3}};
  const auto bytes = serialize_checkpoint(ck);
  const auto back = deserialize_checkpoint(bytes);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(vals(back.parameters.get("w")) == vals(ck.parameters.get("w")));
  CHECK(std::signbit(back.parameters.get("b").at(1)));
  CHECK(back.metadata == ck.metadata);

  auto corrupt = bytes;
  corrupt[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(corrupt), Error);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(deserialize_checkpoint(truncated), Error);
}
