#include <doctest.h>

#include <cmath>
#include <sstream>

#include "daept/adam.hpp"
#include "daept/error.hpp"
#include "daept/loss.hpp"
#include "daept/network.hpp"
#include "daept/serialize.hpp"
#include "daept/training.hpp"
#include "oracles.hpp"

using namespace daept;

namespace {

Network dense_net(Matrix w, Matrix b, Activation act) {
  std::vector<Layer> layers;
  const std::size_t in = w.rows();
  layers.push_back(make_dense(std::move(w), std::move(b), act));
  return Network(in, std::move(layers));
}

}  // namespace

TEST_CASE("forward examples") {
  RngStream rng(1, 0);
  Network id = dense_net(Matrix::identity(3), Matrix(1, 3, 0.0), Activation::Linear);
  const Matrix x = rand_normal(rng, 4, 3, 0, 1);
  CHECK(forward(id, x, Mode::Train, rng).output == x);

  std::vector<Layer> drop;
  drop.push_back(make_dropout(0.5));
  Network dn(3, std::move(drop));
  CHECK(forward(dn, x, Mode::Eval, rng).output == x);
  CHECK(infer(dn, x) == x);

  Network sig = dense_net(Matrix{{1}}, Matrix{{0}}, Activation::Sigmoid);
  CHECK(infer(sig, Matrix{{0}})(0, 0) == 0.5);

  CHECK_THROWS_AS(infer(id, Matrix(2, 4)), ConfigError);
  CHECK_THROWS_AS(infer(id, Matrix(0, 3)), ConfigError);
}

TEST_CASE("activation ranges") {
  RngStream rng(2, 0);
  const Matrix x = rand_normal(rng, 50, 4, 0, 30);
  Network s = dense_net(Matrix::identity(4), Matrix(1, 4, 0.0), Activation::Sigmoid);
  Network r = dense_net(Matrix::identity(4), Matrix(1, 4, 0.0), Activation::ReLU);
  for (double v : infer(s, x).values()) REQUIRE((v > 0.0 && v < 1.0));
  for (double v : infer(r, x).values()) REQUIRE(v >= 0.0);
}

TEST_CASE("loss examples") {
  const Matrix x{{1, -2}, {0.5, 3}};
  CHECK(loss(LossKind::MSE, x, x).value == 0.0);
  CHECK(loss(LossKind::BinaryCrossEntropy, Matrix{{0.5}}, Matrix{{1}}).value ==
        doctest::Approx(0.693147).epsilon(1e-6));
  const LossResult m = loss(LossKind::MSE, Matrix{{0, 0}}, Matrix{{3, 4}});
  CHECK(m.value == 12.5);
  CHECK(m.gradient == Matrix{{-3, -4}});
  CHECK_THROWS_AS(loss(LossKind::BinaryCrossEntropy, Matrix{{1.2}}, Matrix{{1}}), ConfigError);
  CHECK(std::isfinite(loss(LossKind::BinaryCrossEntropy, Matrix{{0.0}}, Matrix{{1}}).value));
}

TEST_CASE("loss gradients match finite differences") {
  RngStream rng(3, 0);
  const Matrix t = bernoulli_mask(rng, 3, 2, 0.5);
  const Matrix p = rand_uniform(rng, 3, 2, 0.1, 0.9);
  for (LossKind k : {LossKind::MSE, LossKind::BinaryCrossEntropy}) {
    const LossResult r = loss(k, p, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
      Matrix up = p, down = p;
      up.values()[i] += 1e-6;
      down.values()[i] -= 1e-6;
      const double fd = (loss_value(k, up, t) - loss_value(k, down, t)) / 2e-6;
      CHECK(r.gradient.values()[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("backward on a 10-4-1 network matches finite differences") {
  RngStream rng(4, 0);
  std::vector<Layer> layers;
  layers.push_back(make_dense(10, 4, Activation::ReLU, rng));
  layers.push_back(make_dense(4, 1, Activation::Sigmoid, rng));
  Network net(10, std::move(layers));
  const Matrix x = rand_normal(rng, 8, 10, 0, 1);
  const oracle::GradCheck g = oracle::check_gradients(net, x, rng.derive(1), rand_normal(rng, 8, 1, 0, 1));
  CHECK(g.shapes_ok);
  CHECK(g.checked == 49);
  CHECK(g.relu_margin > 1e-4);
  CHECK(g.max_rel < 1e-4);
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
  RngStream rng(5, 0);
  Network net = oracle::random_network(rng, 4);
  const Matrix x = rand_normal(rng, 6, 4, 0, 1);
  ForwardResult fr = forward(net, x, Mode::Train, rng);
  const Gradients g = backward(net, fr.tape, Matrix(fr.output.rows(), fr.output.cols(), 0.0));
  for (const auto& layer : g.layers) {
    for (const Matrix& m : layer) CHECK(m == Matrix(m.rows(), m.cols(), 0.0));
  }
}

TEST_CASE("frozen dense layer is skipped but still propagates") {
  RngStream rng(6, 0);
  std::vector<Layer> layers;
  layers.push_back(make_dense(5, 4, Activation::Linear, rng));
  layers.push_back(make_dense(4, 3, Activation::ReLU, rng));
  layers.push_back(make_dense(3, 1, Activation::Linear, rng));
  layers[1].trainable = false;
  Network net(5, std::move(layers));
  const Matrix x = rand_normal(rng, 7, 5, 0, 1);
  const oracle::GradCheck g = oracle::check_gradients(net, x, rng.derive(1), Matrix(7, 1, 1.0));
  CHECK(g.frozen_ok);
  CHECK(g.checked == 5 * 4 + 4 + 3 + 1);
  CHECK(g.max_rel < 1e-4);
}

TEST_CASE("stale tapes are rejected") {
  RngStream rng(7, 0);
  std::vector<Layer> layers;
  layers.push_back(make_dense(2, 2, Activation::Linear, rng));
  Network net(2, std::move(layers));
  const Matrix x = rand_normal(rng, 3, 2, 0, 1);
  ForwardResult first = forward(net, x, Mode::Train, rng);
  ForwardResult second = forward(net, x, Mode::Train, rng);
  CHECK_THROWS_AS(backward(net, first.tape, Matrix(3, 2, 1.0)), ConfigError);
  CHECK_NOTHROW(backward(net, second.tape, Matrix(3, 2, 1.0)));
  ForwardResult ev = forward(net, x, Mode::Eval, rng);
  CHECK_THROWS_AS(backward(net, ev.tape, Matrix(3, 2, 1.0)), ConfigError);
}

TEST_CASE("adam steps") {
  SUBCASE("first step is about -lr") {
    Network net = dense_net(Matrix{{0.25}}, Matrix{{0.0}}, Activation::Linear);
    AdamState adam;
    Gradients g;
    g.layers.push_back({Matrix{{1.0}}, Matrix{{0.0}}});
    adam_step(adam, net, g);
    const double w = std::get<Dense>(net.layer(0).kind).weights(0, 0);
    CHECK(w - 0.25 == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(std::get<Dense>(net.layer(0).kind).bias(0, 0) == 0.0);
    CHECK(adam.step_count() == 1);
  }
  SUBCASE("zero gradient leaves parameters and advances t") {
    RngStream rng(8, 0);
    std::vector<Layer> layers;
    layers.push_back(make_dense(3, 2, Activation::ReLU, rng));
    Network net(3, std::move(layers));
    const Network before = net;
    AdamState adam;
    Gradients g;
    g.layers.push_back({Matrix(3, 2, 0.0), Matrix(1, 2, 0.0)});
    for (int i = 0; i < 3; ++i) adam_step(adam, net, g);
    CHECK(net == before);
    CHECK(adam.step_count() == 3);
  }
  SUBCASE("shape drift is rejected") {
    Network net = dense_net(Matrix{{0.25}}, Matrix{{0.0}}, Activation::Linear);
    AdamState adam;
    Gradients g;
    g.layers.push_back({Matrix{{1.0}}, Matrix{{0.0}}});
    adam_step(adam, net, g);
    Network other = dense_net(Matrix{{0.25, 1.0}}, Matrix{{0.0, 0.0}}, Activation::Linear);
    Gradients g2;
    g2.layers.push_back({Matrix{{1.0, 1.0}}, Matrix{{0.0, 0.0}}});
    CHECK_THROWS_AS(adam_step(adam, other, g2), ConfigError);
  }
}

TEST_CASE("glorot init") {
  RngStream rng(9, 0);
  const std::size_t in = 300, out = 400;
  const Matrix w = glorot_init(rng, in, out);
  const double bound = std::sqrt(6.0 / double(in + out));
  double ss = 0;
  for (double v : w.values()) {
    REQUIRE(std::fabs(v) <= bound);
    ss += v * v;
  }
  const double var = ss / double(w.size());
  const double expected = 2.0 / double(in + out);
  CHECK(std::fabs(var - expected) <= 0.05 * expected);
  RngStream a(9, 5), b(9, 5);
  CHECK(glorot_init(a, 4, 3) == glorot_init(b, 4, 3));
  RngStream c(9, 6);
  const Layer l = make_dense(4, 3, Activation::ReLU, c);
  CHECK(std::get<Dense>(l.kind).bias == Matrix(1, 3, 0.0));
}

TEST_CASE("batchnorm normalises with batch statistics in train mode") {
  RngStream rng(10, 0);
  std::vector<Layer> layers;
  layers.push_back(make_batchnorm(6));
  Network net(6, std::move(layers));
  Matrix x = rand_normal(rng, 40, 6, 3.0, 10.0);
  const ForwardResult fr = forward(net, x, Mode::Train, rng);
  const Matrix& xh = fr.tape.caches[0].normalized;
  const Matrix m = column_means(xh);
  const Matrix v = column_variances(xh);
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(std::fabs(m(0, c)) <= 1e-9);
    CHECK(std::fabs(v(0, c) - 1.0) <= 1e-6);
  }
  // running = momentum * running + (1 - momentum) * batch
  const auto& bn = std::get<BatchNorm>(net.layer(0).kind);
  const Matrix bm = column_means(x), bv = column_variances(x);
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(bn.running_mean(0, c) == doctest::Approx(0.01 * bm(0, c)).epsilon(1e-12));
    CHECK(bn.running_var(0, c) == doctest::Approx(0.99 + 0.01 * bv(0, c)).epsilon(1e-12));
  }
  // Eval uses the running statistics.
  const Matrix e = infer(net, Matrix{{0, 0, 0, 0, 0, 0}});
  for (std::size_t c = 0; c < 6; ++c) {
    CHECK(e(0, c) == doctest::Approx((0 - bn.running_mean(0, c)) /
                                     std::sqrt(bn.running_var(0, c) + 1e-5)));
  }
}

TEST_CASE("inverted dropout preserves the expectation") {
  RngStream rng(11, 0);
  const double rate = 0.3, keep = 0.7;
  std::vector<Layer> layers;
  layers.push_back(make_dropout(rate));
  Network net(50, std::move(layers));
  const Matrix x(100, 50, 1.0);
  double total = 0;
  const int draws = 40;
  for (int i = 0; i < draws; ++i) total += sum(forward(net, x, Mode::Train, rng).output);
  const double n = double(draws) * double(x.size());
  const double avg = total / n;
  const double sigma = std::sqrt(keep * (1 - keep) / n) / keep;
  CHECK(std::fabs(avg - 1.0) <= 5 * sigma);
}

TEST_CASE("frozen layers are bit-identical across training") {
  RngStream rng(12, 0);
  std::vector<Layer> layers;
  layers.push_back(make_dense(6, 5, Activation::ReLU, rng));
  layers.push_back(make_batchnorm(5));
  layers.push_back(make_dense(5, 1, Activation::Sigmoid, rng));
  layers[0].trainable = false;
  Network net(6, std::move(layers));
  const Layer before = net.layer(0);
  const Layer head_before = net.layer(2);
  const Matrix x = rand_normal(rng, 30, 6, 0, 1);
  const Matrix y = bernoulli_mask(rng, 30, 1, 0.5);
  AdamState adam;
  for (std::size_t e = 0; e < 20; ++e) {
    train_epoch(net, adam, x, y, LossKind::BinaryCrossEntropy, 8, rng.derive(e), e);
  }
  CHECK(net.layer(0) == before);
  CHECK_FALSE(net.layer(2) == head_before);
  CHECK(adam.step_count() == 20 * 4);
}

TEST_CASE("train_epoch is deterministic and keeps the short batch") {
  RngStream rng(13, 0);
  std::vector<Layer> layers;
  layers.push_back(make_dropout(0.2));
  layers.push_back(make_dense(4, 3, Activation::ReLU, rng));
  layers.push_back(make_dense(3, 4, Activation::Linear, rng));
  const Network init(4, std::move(layers));
  const Matrix x = rand_normal(rng, 23, 4, 0, 1);
  Network a = init, b = init;
  AdamState sa, sb;
  const EpochLoss la = train_epoch(a, sa, x, x, LossKind::MSE, 10, RngStream(1, 2), 0);
  const EpochLoss lb = train_epoch(b, sb, x, x, LossKind::MSE, 10, RngStream(1, 2), 0);
  CHECK(la.batches == 3);
  CHECK(la.mean_loss == lb.mean_loss);
  CHECK(a == b);
}

TEST_CASE("DAEPT round trip is exact") {
  RngStream rng(14, 0);
  Network net = oracle::random_network(rng, 5);
  forward(net, rand_normal(rng, 9, 5, 0, 1), Mode::Train, rng);  // non-trivial running stats
  std::stringstream ss;
  write_network(ss, net, {{"kind", "test"}, {"note", "x"}});
  CHECK(ss.str().rfind("DAEPT v1\n", 0) == 0);
  const NetworkFile back = read_network(ss);
  CHECK(back.network == net);
  CHECK(back.meta.at("kind") == "test");

  std::stringstream bad("DAEPT v2\n");
  CHECK_THROWS_AS(read_network(bad), DataError);
  CHECK(format_real(0.1) == "0.10000000000000001");
}
