#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "posegen/error.hpp"
#include "posegen/tape.hpp"

using namespace posegen;
using Id = Tape<double>::Id;

namespace {

Tensor<double> randt(std::vector<std::size_t> shape, std::mt19937_64& gen, double s = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(-s, s);
  for (auto& v : t.data) v = u(gen);
  return t;
}

using Builder = std::function<Id(Tape<double>&, std::vector<Id>&)>;

// Checks d(sum(out * r))/d(inputs) against central differences.
double max_fd_error(std::vector<Parameter<double>>& inputs, const Builder& build,
                    std::mt19937_64& gen) {
  Tensor<double> r;
  auto eval = [&](bool grad) {
    Tape<double> tape;
    std::vector<Id> ids;
    for (auto& p : inputs) ids.push_back(tape.param(p));
    const Id out = build(tape, ids);
    if (r.empty()) r = randt(tape.value(out).shape, gen);
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += tape.value(out).data[i] * r.data[i];
    if (grad) tape.backward(out, r);
    return s;
  };
  for (auto& p : inputs) p.grad.zero();
  eval(true);
  const double h = 1e-5;
  double worst = 0;
  for (auto& p : inputs) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.value.data[i];
      p.value.data[i] = orig + h;
      const double up = eval(false);
      p.value.data[i] = orig - h;
      const double down = eval(false);
      p.value.data[i] = orig;
      const double num = (up - down) / (2 * h);
      const double ana = p.grad.data[i];
      const double denom = std::max({std::abs(num), std::abs(ana), 1e-6});
      worst = std::max(worst, std::abs(num - ana) / denom);
    }
  }
  return worst;
}

Parameter<double> make(const std::string& name, Tensor<double> t) {
  Parameter<double> p(name, t.shape);
  p.value = std::move(t);
  return p;
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("affine examples") {
  Tape<double> tape;
  const Id x = tape.constant(Tensor<double>({1, 2}, {1, 2}));
  const Id w = tape.constant(Tensor<double>({2, 2}, {1, 0, 0, 1}));
  const Id b = tape.constant(Tensor<double>({2}, {3, 3}));
  CHECK(tape.value(tape.affine(x, w, b)).data == std::vector<double>{4, 5});

  Parameter<double> bias("b", {3});
  Tape<double> t2;
  const Id y = t2.affine(t2.constant(Tensor<double>({4, 2}, 0.5)),
                         t2.constant(Tensor<double>({2, 3}, 1.0)), t2.param(bias));
  t2.backward(y, Tensor<double>({4, 3}, 1.0));
  // Summed over 4 rows.
  for (double g : bias.grad.data) CHECK(g == 4.0);

  Tape<double> t3;
  CHECK_THROWS_AS(t3.affine(t3.constant(Tensor<double>({1, 3})), t3.constant(Tensor<double>({2, 2})),
                            t3.constant(Tensor<double>({2}))),
                  ShapeError);
}

TEST_CASE("gelu examples") {
  CHECK(gelu_value(0.0) == 0.0);
  CHECK(std::abs(gelu_value(10.0) - 10.0) < 1e-6);
  CHECK(gelu_value(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  // Independent: x * 0.5 * erfc(-x / sqrt 2).
  for (double x = -6; x <= 6; x += 0.25) {
    CHECK(gelu_value(x) == doctest::Approx(x * 0.5 * std::erfc(-x / std::sqrt(2.0))).epsilon(1e-12));
  }
  for (double x = -0.75; x < 6; x += 0.01) CHECK(gelu_value(x + 0.01) > gelu_value(x));
}

TEST_CASE("layer_norm examples") {
  Tape<double> tape;
  const Id g = tape.constant(Tensor<double>({2}, 1.0));
  const Id b = tape.constant(Tensor<double>({2}, 0.0));
  auto out = tape.value(tape.layer_norm(tape.constant(Tensor<double>({1, 2}, {3, 3})), g, b));
  CHECK(out.data == std::vector<double>{0, 0});
  out = tape.value(tape.layer_norm(tape.constant(Tensor<double>({1, 2}, {1, -1})), g, b));
  CHECK(out.data[0] == doctest::Approx(1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-12));
  CHECK(out.data[1] == doctest::Approx(-1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-12));

  const Id g0 = tape.constant(Tensor<double>({3}, 0.0));
  const Id b3 = tape.constant(Tensor<double>({3}, {0.1, 0.2, 0.6}));
  out = tape.value(tape.layer_norm(tape.constant(Tensor<double>({1, 3}, {5, -2, 9})), g0, b3));
  CHECK((out.data[0] + out.data[1] + out.data[2]) / 3 == doctest::Approx(0.3));
}

TEST_CASE("softmax examples") {
  Tape<double> tape;
  auto sm = [&](std::vector<double> v) {
    const std::size_t n = v.size();
    return tape.value(tape.softmax(tape.constant(Tensor<double>({1, n}, std::move(v))))).data;
  };
  for (double p : sm({2, 2, 2, 2})) CHECK(p == doctest::Approx(0.25));
  const auto big = sm({1000, 1000});
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);
  const auto l3 = sm({0, std::log(3.0)});
  CHECK(l3[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(l3[1] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("attention with a single token returns its value row") {
  std::mt19937_64 gen(5);
  Tape<double> tape;
  const auto q = randt({3, 8}, gen), k = randt({3, 8}, gen), v = randt({3, 8}, gen);
  const Id out = tape.attention(tape.constant(q), tape.constant(k), tape.constant(v), 1, 4);
  CHECK(tape.value(out).data == v.data);
  CHECK_THROWS_AS(tape.attention(tape.constant(q), tape.constant(k), tape.constant(v), 1, 3),
                  ConfigError);
}

TEST_CASE("attention is equivariant to swapping identical tokens") {
  std::mt19937_64 gen(6);
  auto x = randt({3, 8}, gen);
  for (std::size_t j = 0; j < 8; ++j) x.data[8 + j] = x.data[16 + j];
  Tape<double> tape;
  const Id xi = tape.constant(x);
  const auto y = tape.value(tape.attention(xi, xi, xi, 3, 2));
  Tensor<double> xs = x;
  for (std::size_t j = 0; j < 8; ++j) std::swap(xs.data[j], xs.data[8 + j]);
  const Id xsi = tape.constant(xs);
  const auto ys = tape.value(tape.attention(xsi, xsi, xsi, 3, 2));
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(ys.data[8 + j] == doctest::Approx(y.data[j]).epsilon(1e-14));
    CHECK(ys.data[j] == doctest::Approx(y.data[8 + j]).epsilon(1e-14));
    CHECK(ys.data[16 + j] == doctest::Approx(y.data[16 + j]).epsilon(1e-14));
  }
}

TEST_CASE("multi-head attention gradients on a 2x16 input with 4 heads") {
  std::mt19937_64 gen(7);
  std::vector<Parameter<double>> ps;
  ps.push_back(make("x", randt({2, 16}, gen)));
  for (const char* n : {"wq", "wk", "wv", "wo"}) ps.push_back(make(n, randt({16, 16}, gen, 0.5)));
  for (const char* n : {"bq", "bk", "bv", "bo"}) ps.push_back(make(n, randt({16}, gen, 0.1)));
  const double err = max_fd_error(ps, [](Tape<double>& t, std::vector<Id>& id) {
    const Id q = t.affine(id[0], id[1], id[5]);
    const Id k = t.affine(id[0], id[2], id[6]);
    const Id v = t.affine(id[0], id[3], id[7]);
    return t.affine(t.attention(q, k, v, 2, 4), id[4], id[8]);
  }, gen);
  CHECK(err < 1e-4);
}

TEST_CASE("primitive gradients match finite differences over 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 gen(100 + seed);
    const std::size_t rows = 1 + gen() % 4, d = 2 + gen() % 7;

    std::vector<Parameter<double>> lin{make("x", randt({rows, d}, gen)),
                                       make("w", randt({d, d + 1}, gen)),
                                       make("b", randt({d + 1}, gen))};
    CHECK(max_fd_error(lin, [](Tape<double>& t, std::vector<Id>& id) {
      return t.affine(id[0], id[1], id[2]);
    }, gen) < 1e-4);

    std::vector<Parameter<double>> g{make("x", randt({rows, d}, gen, 3.0))};
    CHECK(max_fd_error(g, [](Tape<double>& t, std::vector<Id>& id) { return t.gelu(id[0]); }, gen) <
          1e-4);

    std::vector<Parameter<double>> ln{make("x", randt({rows, d}, gen)), make("g", randt({d}, gen)),
                                      make("b", randt({d}, gen))};
    CHECK(max_fd_error(ln, [](Tape<double>& t, std::vector<Id>& id) {
      return t.layer_norm(id[0], id[1], id[2]);
    }, gen) < 1e-4);

    std::vector<Parameter<double>> sm{make("x", randt({rows, d}, gen, 2.0))};
    CHECK(max_fd_error(sm, [](Tape<double>& t, std::vector<Id>& id) { return t.softmax(id[0]); },
                       gen) < 1e-4);

    const std::size_t seq = 1 + gen() % 3, heads = 1 + gen() % 2;
    std::vector<Parameter<double>> at{make("q", randt({2 * seq, 4 * heads}, gen)),
                                      make("k", randt({2 * seq, 4 * heads}, gen)),
                                      make("v", randt({2 * seq, 4 * heads}, gen))};
    CHECK(max_fd_error(at, [&](Tape<double>& t, std::vector<Id>& id) {
      return t.attention(id[0], id[1], id[2], seq, heads);
    }, gen) < 1e-4);

    std::vector<Parameter<double>> dr{make("x", randt({rows, d}, gen))};
    CHECK(max_fd_error(dr, [seed](Tape<double>& t, std::vector<Id>& id) {
      Rng rng(seed);
      return t.dropout(id[0], 0.3, true, rng);
    }, gen) < 1e-4);

    std::vector<Parameter<double>> misc{make("x", randt({2 * (seq + 1), d}, gen)),
                                        make("r", randt({d}, gen)),
                                        make("tok", randt({seq, d}, gen))};
    CHECK(max_fd_error(misc, [&](Tape<double>& t, std::vector<Id>& id) {
      const Id base = t.add_row(t.mean_pool(id[0], seq + 1), id[1]);
      const Id pre = t.prepend_tokens(base, id[2]);
      return t.l2_normalize(t.add(pre, pre));
    }, gen) < 1e-4);
  }
}

TEST_CASE("clamp passes gradient only inside the box") {
  Parameter<double> x("x", {1, 4});
  x.value.data = {-2.0, -0.5, 0.5, 2.0};
  Tape<double> tape;
  const Id y = tape.clamp(tape.param(x), -1.5, 1.5);
  CHECK(tape.value(y).data == std::vector<double>{-1.5, -0.5, 0.5, 1.5});
  tape.backward(y, Tensor<double>({1, 4}, 1.0));
  CHECK(x.grad.data == std::vector<double>{0, 1, 1, 0});
}

TEST_CASE("dropout") {
  std::mt19937_64 gen(8);
  const auto x = randt({4, 5}, gen);
  Rng rng(1);
  Tape<double> tape;
  const Id xi = tape.constant(x);
  CHECK(tape.value(tape.dropout(xi, 0.0, true, rng)).data == x.data);
  CHECK(tape.value(tape.dropout(xi, 0.0, false, rng)).data == x.data);
  CHECK(tape.value(tape.dropout(xi, 0.7, false, rng)).data == x.data);
  CHECK_THROWS_AS(tape.dropout(xi, 1.0, true, rng), ConfigError);

  // Expected value over 1e5 trials.
  const std::size_t n = 100000;
  Tape<double> big;
  Rng r2(99);
  const auto& y = big.value(big.dropout(big.constant(Tensor<double>({1, n}, 1.0)), 0.5, true, r2));
  double mean = 0;
  std::size_t zeros = 0;
  for (double v : y.data) {
    mean += v;
    zeros += v == 0.0;
    CHECK((v == 0.0 || v == 2.0));
  }
  mean /= n;
  CHECK(std::abs(mean - 1.0) < 0.02);
  CHECK(zeros > n / 2 - 1000);
  CHECK(zeros < n / 2 + 1000);

  Rng a(3), b(3);
  Tape<double> ta, tb;
  CHECK(ta.value(ta.dropout(ta.constant(x), 0.4, true, a)).data ==
        tb.value(tb.dropout(tb.constant(x), 0.4, true, b)).data);
}

TEST_CASE("non-finite values raise NumericError naming the scope") {
  Tape<double> tape;
  tape.set_scope("encoder.0.ffn");
  Tensor<double> x({1, 2}, {1.0, std::numeric_limits<double>::infinity()});
  const Id w = tape.constant(Tensor<double>({2, 2}, 1.0));
  const Id b = tape.constant(Tensor<double>({2}, 0.0));
  CHECK_THROWS_WITH_AS(tape.affine(tape.constant(x), w, b), doctest::Contains("encoder.0.ffn"),
                       NumericError);
}

TEST_CASE("parameter gradients accumulate until cleared by the caller") {
  Parameter<double> w("w", {2, 1});
  w.value.data = {1, 1};
  for (int rep = 0; rep < 2; ++rep) {
    Tape<double> tape;
    const Id y = tape.affine(tape.constant(Tensor<double>({1, 2}, {3, 4})), tape.param(w),
                             tape.constant(Tensor<double>({1}, 0.0)));
    tape.backward(y, Tensor<double>({1, 1}, 1.0));
  }
  CHECK(w.grad.data == std::vector<double>{6, 8});
}

}  // TEST_SUITE
