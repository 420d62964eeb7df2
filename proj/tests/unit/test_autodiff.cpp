// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "skelgen/autodiff/adam.hpp"
#include "skelgen/autodiff/checkpoint.hpp"
#include "skelgen/autodiff/grad_check.hpp"
#include "skelgen/autodiff/kernels.hpp"
#include "skelgen/autodiff/layers.hpp"
#include "skelgen/autodiff/ops.hpp"
#include "skelgen/error.hpp"
#include "test_support.hpp"

using namespace skelgen;
using namespace skelgen::ad;
using skelgen::test::random_tensor;

namespace {

std::vector<double> values(Var v) {
  auto d = v.value().data();
  return {d.begin(), d.end()};
}

// Contracts an op's output with a fixed random weight so every output entry
// contributes a distinct amount to the scalar loss.
Var probe(Var out, std::uint64_t seed) {
  Rng rng(seed ^ 0xabcdef);
  return sum(mul(out, out.tape().constant(random_tensor(rng, out.shape()))));
}

struct OpCase {
  const char* name;
  // Fills the store with inputs and returns the loss closure.
  std::function<LossClosure(ParamStore&, Rng&)> build;
};

std::vector<OpCase> op_cases() {
  std::vector<OpCase> cases;
  cases.push_back({"matmul", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {3, 4}));
    s.set("b", random_tensor(r, {4, 2}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(matmul(p("a"), p("b")), 1);
    });
  }});
  cases.push_back({"bmm", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 3, 4}));
    s.set("b", random_tensor(r, {2, 4, 2}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(bmm(p("a"), p("b")), 2);
    });
  }});
  cases.push_back({"transpose_last2", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 3, 4}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(transpose_last2(p("a")), 3);
    });
  }});
  cases.push_back({"add", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {3, 2}));
    s.set("b", random_tensor(r, {3, 2}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(add(p("a"), p("b")), 4);
    });
  }});
  cases.push_back({"add_bias", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {3, 4}));
    s.set("b", random_tensor(r, {4}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(add_bias(p("a"), p("b")), 5);
    });
  }});
  cases.push_back({"mul", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {3, 2}));
    s.set("b", random_tensor(r, {3, 2}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(mul(p("a"), p("b")), 6);
    });
  }});
  cases.push_back({"scale", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 3}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(scale(p("a"), -1.7), 7);
    });
  }});
  cases.push_back({"weighted_sum", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 3}));
    s.set("b", random_tensor(r, {2, 3}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(weighted_sum(p("a"), 0.3, p("b"), 0.7), 8);
    });
  }});
  cases.push_back({"sum", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 3}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return scale(sum(p("a")), 0.5);
    });
  }});
  cases.push_back({"sigmoid", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {3, 3}, -3, 3));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(sigmoid(p("a")), 9);
    });
  }});
  cases.push_back({"tanh", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {3, 3}, -2, 2));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(tanh(p("a")), 10);
    });
  }});
  cases.push_back({"concat_cols", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 3}));
    s.set("b", random_tensor(r, {2, 1}));
    s.set("c", random_tensor(r, {2, 2}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      const Var parts[] = {p("a"), p("b"), p("c")};
      return probe(concat_cols(parts), 11);
    });
  }});
  cases.push_back({"slice_cols", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {3, 5}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(slice_cols(p("a"), 1, 3), 12);
    });
  }});
  cases.push_back({"reshape", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 6}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      return probe(tanh(reshape(p("a"), {3, 2, 2})), 13);
    });
  }});
  cases.push_back({"gather_rows", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {4, 3}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      const std::size_t idx[] = {2, 0, 2, 3, 1};
      return probe(gather_rows(p("a"), idx), 14);
    });
  }});
  cases.push_back({"stack_select", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 3}));
    s.set("b", random_tensor(r, {2, 3}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      const Var steps[] = {p("a"), p("b"), tanh(p("a"))};
      Var st = stack_steps(steps);
      return add(probe(st, 15), probe(select_step(st, 1), 16));
    });
  }});
  cases.push_back({"where_rows", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {4, 2}));
    s.set("b", random_tensor(r, {4, 2}));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      const std::uint8_t keep[] = {1, 0, 0, 1};
      return probe(where_rows(keep, p("a"), p("b")), 17);
    });
  }});
  for (std::size_t axis = 0; axis < 3; ++axis) {
    cases.push_back({"softmax", [axis](ParamStore& s, Rng& r) {
      s.set("a", random_tensor(r, {2, 3, 4}, -2, 2));
      return LossClosure([&s, axis](Tape& t) {
        ParamBinding p(t, s);
        return probe(softmax(p("a"), axis), 18 + axis);
      });
    }});
  }
  cases.push_back({"softmax_masked", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {2, 4, 3}, -2, 2));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      std::vector<std::uint8_t> mask(24, 1);
      for (std::size_t j = 0; j < 3; ++j) mask[12 + 3 * 3 + j] = 0;  // last word of batch 1
      return probe(softmax(p("a"), 1, mask), 21);
    });
  }});
  cases.push_back({"cross_entropy", [](ParamStore& s, Rng& r) {
    s.set("a", random_tensor(r, {4, 5}, -2, 2));
    return LossClosure([&s](Tape& t) {
      ParamBinding p(t, s);
      const std::int64_t y[] = {1, -1, 4, 0};
      return cross_entropy(p("a"), y, -1);
    });
  }});
  cases.push_back({"lstm_step", [](ParamStore& s, Rng& r) {
    LstmCell cell{"cell", 3, 2};
    cell.init(s, r.below(1000));
    s.set("x", random_tensor(r, {2, 3}));
    s.set("h", random_tensor(r, {2, 2}));
    s.set("c", random_tensor(r, {2, 2}));
    return LossClosure([&s, cell](Tape& t) {
      ParamBinding p(t, s);
      auto st = lstm_step(p, cell, p("x"), {p("h"), p("c")});
      return add(probe(st.h, 22), probe(st.c, 23));
    });
  }});
  cases.push_back({"bilstm_encode", [](ParamStore& s, Rng& r) {
    BiLstm net{"enc", 2, 2, 2};
    net.init(s, r.below(1000));
    for (int i = 0; i < 3; ++i) s.set("x" + std::to_string(i), random_tensor(r, {2, 2}));
    return LossClosure([&s, net](Tape& t) {
      ParamBinding p(t, s);
      const Var seq[] = {p("x0"), p("x1"), p("x2")};
      const std::size_t lengths[] = {3, 2};
      auto out = bilstm_encode(p, net, seq, lengths);
      return add(probe(stack_steps(out.steps), 24), probe(out.fwd_final, 25));
    });
  }});
  return cases;
}

}  // namespace

TEST_CASE("bmm examples") {
  Tape t;
  auto a = t.constant(Tensor({1, 2, 2}, {1, 0, 0, 1}));
  auto b = t.constant(Tensor({1, 2, 1}, {3, 4}));
  CHECK(values(bmm(a, b)) == std::vector<double>{3, 4});
  auto c = t.constant(Tensor({1, 1, 2}, {1, 2}));
  CHECK(values(bmm(c, b)) == std::vector<double>{11});
  CHECK_THROWS_AS(bmm(b, b), ShapeError);
}

TEST_CASE("bmm matches a naive triple loop") {
  Rng rng(3);
  Tape t;
  auto a = random_tensor(rng, {2, 3, 4});
  auto b = random_tensor(rng, {2, 4, 5});
  auto out = bmm(t.constant(a), t.constant(b));
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        double acc = 0;
        for (std::size_t k = 0; k < 4; ++k) acc += a[z * 12 + i * 4 + k] * b[z * 20 + k * 5 + j];
        CHECK(out.value()[z * 15 + i * 5 + j] == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("shape errors name both shapes") {
  Tape t;
  auto a = t.constant(Tensor({2, 3}));
  auto b = t.constant(Tensor({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("softmax examples") {
  Tape t;
  CHECK(values(softmax(t.constant(Tensor({4}, {0, 0, 0, 0})), 0)) ==
        std::vector<double>{0.25, 0.25, 0.25, 0.25});
  auto big = values(softmax(t.constant(Tensor({2}, {1000, 1000})), 0));
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);
  auto s = values(softmax(t.constant(Tensor({3}, {1, 2, 3})), 0));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(std::exp(i + 1.0) / z).epsilon(1e-12));
  CHECK(s[0] == doctest::Approx(0.09003).epsilon(1e-4));
  CHECK(s[1] == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(s[2] == doctest::Approx(0.66524).epsilon(1e-4));
}

TEST_CASE("softmax slices sum to one and stay in [0,1]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    Tape t;
    auto x = t.constant(random_tensor(rng, {3, 4, 5}, -50, 50));
    const std::size_t axis = seed % 3;
    auto y = softmax(x, axis).value();
    const std::size_t dims[] = {3, 4, 5};
    const std::size_t strides[] = {20, 5, 1};
    for (std::size_t base = 0; base < 60; ++base) {
      if ((base / strides[axis]) % dims[axis] != 0) continue;
      double total = 0;
      for (std::size_t k = 0; k < dims[axis]; ++k) {
        const double v = y[base + k * strides[axis]];
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("masked softmax zeroes masked entries") {
  Tape t;
  const std::uint8_t mask[] = {1, 1, 0, 0, 0, 0};
  auto y = values(softmax(t.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6})), 1, mask));
  CHECK(y[2] == 0.0);
  CHECK(y[0] + y[1] == doctest::Approx(1.0));
  CHECK(y[3] == 0.0);
  CHECK(y[4] == 0.0);
  CHECK(y[5] == 0.0);
}

TEST_CASE("cross entropy examples") {
  {
    Tape t;
    const std::int64_t y[] = {0};
    CHECK(cross_entropy(t.constant(Tensor({1, 2}, {10, -10})), y).value().item() < 1e-4);
  }
  {
    Tape t;
    const std::int64_t y[] = {2};
    CHECK(cross_entropy(t.constant(Tensor({1, 4})), y).value().item() ==
          doctest::Approx(std::log(4.0)).epsilon(1e-9));
  }
  {
    ParamStore s;
    s.set("z", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Tape t;
    ParamBinding p(t, s);
    const std::int64_t y[] = {-1, -1};
    auto loss = cross_entropy(p("z"), y, -1);
    CHECK(loss.value().item() == 0.0);
    t.backward(loss);
    for (double g : s.at("z").grad()) CHECK(g == 0.0);
  }
  {
    Tape t;
    const std::int64_t y[] = {3};
    CHECK_THROWS_AS(cross_entropy(t.constant(Tensor({1, 3})), y), ValidationError);
  }
}

TEST_CASE("non-finite values raise an error naming the op") {
  Tape t;
  auto a = t.constant(Tensor({1}, {1e300}));
  try {
    mul(a, a);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("mul") != std::string::npos);
  }
}

TEST_CASE("every op matches central differences over 100 seeds") {
  for (const auto& c : op_cases()) {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed * 7919 + 1);
      ParamStore store;
      auto loss = c.build(store, rng);
      worst = std::max(worst, grad_check(loss, store).max_rel_error());
    }
    INFO(c.name << " worst relative error " << worst);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("linear model gradient equals the input") {
  ParamStore s;
  s.set("w", Tensor({3, 1}, {0.5, -1, 2}));
  Tape t;
  ParamBinding p(t, s);
  auto y = matmul(t.constant(Tensor({1, 3}, {1.5, -2, 4})), p("w"));
  t.backward(y);
  CHECK(values(y) == std::vector<double>{0.75 + 2 + 8});
  auto g = s.at("w").grad();
  CHECK(g[0] == 1.5);
  CHECK(g[1] == -2);
  CHECK(g[2] == 4);
}

TEST_CASE("fault injection is caught by the gradient checker") {
  for (auto f : {testing::Fault::kTanhBackward, testing::Fault::kSigmoidBackward,
                 testing::Fault::kMatmulBackward}) {
    Rng rng(11);
    ParamStore s;
    LstmCell cell{"cell", 3, 4};
    cell.init(s, 5);
    s.set("x", random_tensor(rng, {2, 3}));
    auto loss = [&](Tape& t) {
      ParamBinding p(t, s);
      auto st = lstm_step(p, cell, p("x"), cell.zero_state(t, 2));
      return probe(st.h, 1);
    };
    CHECK(grad_check(loss, s).max_rel_error() < 1e-4);
    testing::set_fault(f);
    const double err = grad_check(loss, s).max_rel_error();
    testing::set_fault(testing::Fault::kNone);
    CHECK(err > 1e-1);
  }
}

TEST_CASE("grad check sampling keeps the largest gradient entry") {
  ParamStore s;
  Rng rng(2);
  s.set("a", random_tensor(rng, {10, 10}));
  auto loss = [&](Tape& t) {
    ParamBinding p(t, s);
    return probe(tanh(p("a")), 3);
  };
  GradCheckOptions opts;
  opts.max_entries = 5;
  auto report = grad_check(loss, s, opts);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].checked == 5);
  CHECK(report.passed(1e-4));
}

TEST_CASE("lstm step examples") {
  ParamStore s;
  LstmCell cell{"cell", 3, 2};
  s.set("cell.Wx", Tensor({3, 8}));
  s.set("cell.Wh", Tensor({2, 8}));
  s.set("cell.b", Tensor({8}));
  Tape t;
  ParamBinding p(t, s);
  auto st = lstm_step(p, cell, t.constant(Tensor({1, 3})), cell.zero_state(t, 1));
  CHECK(values(st.h) == std::vector<double>{0, 0});

  ParamStore s2;
  cell.init(s2, 42);
  auto b = s2.at("cell.b").data();
  for (std::size_t j = 2; j < 4; ++j) CHECK(b[j] == 1.0);

  auto run = [&]() {
    Tape tt;
    ParamBinding pp(tt, std::as_const(s2));
    Rng rng(9);
    auto h = lstm_step(pp, cell, tt.constant(random_tensor(rng, {2, 3})), cell.zero_state(tt, 2)).h;
    return values(h);
  };
  CHECK(run() == run());
}

TEST_CASE("bilstm shapes and reversal symmetry") {
  ParamStore s;
  BiLstm net{"enc", 3, 4, 1};
  net.init(s, 1);
  // Share parameters between directions so reversing the input swaps halves.
  for (auto suffix : {".Wx", ".Wh", ".b"})
    s.set("enc.l0.bwd" + std::string(suffix), s.at("enc.l0.fwd" + std::string(suffix)));
  Rng rng(4);
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(random_tensor(rng, {1, 3}));

  auto encode = [&](bool reversed) {
    Tape t;
    ParamBinding p(t, std::as_const(s));
    std::vector<Var> seq;
    for (int i = 0; i < 3; ++i) seq.push_back(t.constant(xs[reversed ? 2 - i : i]));
    std::vector<std::vector<double>> out;
    for (auto v : bilstm_encode(p, net, seq).steps) {
      CHECK(v.dim(1) == 8);
      out.push_back(values(v));
    }
    return out;
  };
  auto fwd = encode(false);
  auto rev = encode(true);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(fwd[i][j] == rev[2 - i][4 + j]);
      CHECK(fwd[i][4 + j] == rev[2 - i][j]);
    }

  // Single step: forward and backward halves agree.
  Tape t;
  ParamBinding p(t, std::as_const(s));
  const Var one[] = {t.constant(xs[0])};
  auto single = values(bilstm_encode(p, net, one).steps[0]);
  for (int j = 0; j < 4; ++j) CHECK(single[j] == single[4 + j]);

  Tape t2;
  ParamBinding p2(t2, std::as_const(s));
  CHECK_THROWS_AS(bilstm_encode(p2, net, std::span<const Var>{}), ShapeError);
}

TEST_CASE("adam examples") {
  AdamConfig cfg;
  std::vector<double> w{0.5}, m{0}, v{0};
  const std::vector<double> zero{0.0}, one{1.0};
  adam_update(w, zero, m, v, 1, cfg);
  CHECK(w[0] == 0.5);

  w = {0.5};
  m = {0};
  v = {0};
  adam_update(w, one, m, v, 1, cfg);
  CHECK(w[0] - 0.5 == doctest::Approx(-0.001).epsilon(1e-6));

  // Constant gradient: the bias-corrected step stays at lr.
  w = {0.0};
  m = {0};
  v = {0};
  double last = 0;
  for (std::size_t step = 1; step <= 1000; ++step) {
    const double before = w[0];
    adam_update(w, std::vector<double>{0.3}, m, v, step, cfg);
    last = before - w[0];
  }
  CHECK(last == doctest::Approx(cfg.lr).epsilon(1e-4));

  ParamStore s;
  s.set("w", Tensor({2}));
  Adam adam;
  CHECK_THROWS_AS(adam.step(s), ValidationError);
}

TEST_CASE("serial and OpenMP kernels are bit-identical") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.below(70), k = 1 + rng.below(70), m = 1 + rng.below(70);
    auto a = random_tensor(rng, {n, k});
    auto b = random_tensor(rng, {k, m});
    auto g = random_tensor(rng, {n, m});
    std::vector<double> o1(n * m), o2(n * m);
    kernels::matmul_serial(a.data(), b.data(), o1, n, k, m);
    kernels::matmul(a.data(), b.data(), o2, n, k, m);
    CHECK(o1 == o2);
    std::vector<double> ga1(n * k, 0.5), ga2(n * k, 0.5);
    kernels::matmul_nt_acc_serial(g.data(), b.data(), ga1, n, k, m);
    kernels::matmul_nt_acc(g.data(), b.data(), ga2, n, k, m);
    CHECK(ga1 == ga2);
    std::vector<double> gb1(k * m, -0.25), gb2(k * m, -0.25);
    kernels::matmul_tn_acc_serial(a.data(), g.data(), gb1, n, k, m);
    kernels::matmul_tn_acc(a.data(), g.data(), gb2, n, k, m);
    CHECK(gb1 == gb2);
    std::vector<double> s1(n * k), s2(n * k);
    kernels::sigmoid_serial(a.data(), s1);
    kernels::sigmoid(a.data(), s2);
    CHECK(s1 == s2);
    kernels::tanh_serial(a.data(), s1);
    kernels::tanh(a.data(), s2);
    CHECK(s1 == s2);
  }
  // One problem large enough to cross the parallel threshold.
  Rng rng(99);
  auto a = random_tensor(rng, {64, 96});
  auto b = random_tensor(rng, {96, 80});
  std::vector<double> o1(64 * 80), o2(64 * 80);
  kernels::matmul_serial(a.data(), b.data(), o1, 64, 96, 80);
  kernels::matmul(a.data(), b.data(), o2, 64, 96, 80);
  CHECK(o1 == o2);
}

TEST_CASE("forward and backward are byte-identical across runs") {
  auto run = [] {
    ParamStore s;
    BiLstm net{"enc", 3, 4, 2};
    net.init(s, 17);
    Rng rng(5);
    std::vector<Tensor> xs;
    for (int i = 0; i < 4; ++i) xs.push_back(random_tensor(rng, {2, 3}));
    Tape t;
    ParamBinding p(t, s);
    std::vector<Var> seq;
    for (auto& x : xs) seq.push_back(t.constant(x));
    auto loss = probe(stack_steps(bilstm_encode(p, net, seq).steps), 2);
    t.backward(loss);
    std::vector<double> all = values(loss);
    for (auto& [name, tensor] : s) all.insert(all.end(), tensor.grad().begin(), tensor.grad().end());
    return all;
  };
  CHECK(run() == run());
}

TEST_CASE("parameter init is uniform within fan-in bounds and name-seeded") {
  ParamStore a, b;
  a.create("x.W", {50, 40}, 50, 7);
  b.create("other", {3}, 3, 7);
  b.create("x.W", {50, 40}, 50, 7);
  CHECK(std::vector<double>(a.at("x.W").data().begin(), a.at("x.W").data().end()) ==
        std::vector<double>(b.at("x.W").data().begin(), b.at("x.W").data().end()));
  const double bound = 1.0 / std::sqrt(50.0);
  for (double v : a.at("x.W").data()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("checkpoint round trip and validation") {
  ParamStore s;
  s.set("a", Tensor({2, 3}, {1, 2, 3, 4, 5, 6.5}));
  s.set("b.bias", Tensor({4}, {-1, 0.25, 1e-3, 7}));
  const std::string cfg = R"({"variant":"glocal"})";
  auto bytes = encode_checkpoint(cfg, s);
  CHECK(bytes.substr(0, 4) == "SKLG");
  auto ck = decode_checkpoint(bytes);
  CHECK(ck.config == cfg);
  CHECK(ck.params.names() == s.names());
  CHECK(ck.params.at("a").shape() == Shape{2, 3});
  CHECK(ck.params.at("b.bias")[2] == static_cast<double>(1e-3f));

  auto dir = test::scratch_dir("ckpt");
  save_checkpoint(dir / "m.sklg", cfg, s);
  CHECK(load_checkpoint(dir / "m.sklg").params.at("a")[5] == 6.5);

  CHECK_THROWS_AS(decode_checkpoint("XXXX" + bytes.substr(4)), IoError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), IoError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), IoError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), IoError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.sklg"), IoError);
}
