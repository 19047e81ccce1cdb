#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "objn/net/checkpoint.hpp"
#include "objn/net/model.hpp"
#include "objn/train/loss.hpp"

namespace fs = std::filesystem;
using namespace objn;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "objn_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

NetConfig tiny_net(int levels = 2, int base = 4, int tconvs = 2, int in_ch = 3,
                   int classes = 4) {
  NetConfig c;
  c.levels = levels;
  c.base_channels = base;
  c.temporal_convs = tconvs;
  c.in_channels = in_ch;
  c.out_classes = classes;
  return c;
}

template <class S>
Tensor<S> random_input(const NetConfig& cfg, int hw, std::uint64_t seed) {
  Tensor<S> x(cfg.temporal_window(), cfg.in_channels, hw, hw);
  Rng rng(seed);
  for (auto& v : x.v) v = static_cast<S>(rng.uniform());
  return x;
}

}  // namespace

TEST_CASE("temporal window and divisor derive from the config", "[net]") {
  CHECK(mbs_net_config().temporal_window() == 5);
  CHECK(asp_net_config().temporal_window() == 7);
  CHECK(tiny_net(4).spatial_divisor() == 8);
  CHECK(tiny_net(2).spatial_divisor() == 2);

  // One temporal conv per level from the shallow end; excess stacks deepest.
  NetConfig c = tiny_net(4, 4, 2);
  CHECK(c.temporal_convs_at(0) == 1);
  CHECK(c.temporal_convs_at(1) == 1);
  CHECK(c.temporal_convs_at(2) == 0);
  CHECK(c.temporal_convs_at(3) == 0);
  c = tiny_net(2, 4, 3);
  CHECK(c.temporal_convs_at(0) == 1);
  CHECK(c.temporal_convs_at(1) == 2);

  NetConfig bad = tiny_net();
  bad.levels = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_net();
  bad.out_classes = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("forward emits one softmaxed frame at the input size", "[net]") {
  const NetConfig cfg = tiny_net();
  R21UNet<float> net(cfg, 1);
  for (int hw : {16, 32}) {
    const auto prob = net.forward(random_input<float>(cfg, hw, 3));
    REQUIRE(prob.t == 1);
    REQUIRE(prob.c == 4);
    REQUIRE(prob.h == hw);
    REQUIRE(prob.w == hw);
    for (int y = 0; y < hw; ++y)
      for (int x = 0; x < hw; ++x) {
        double sum = 0;
        for (int c = 0; c < 4; ++c) {
          const float p = prob.at(0, c, y, x);
          REQUIRE(p >= 0.0f);
          sum += p;
        }
        REQUIRE(sum == Catch::Approx(1.0).margin(1e-5));
      }
  }
}

TEST_CASE("forward rejects inputs that break the contract by name", "[net]") {
  const NetConfig cfg = tiny_net();
  R21UNet<float> net(cfg, 1);

  auto expect_mentions = [&](const Tensor<float>& x, const char* needle) {
    try {
      net.forward(x);
      FAIL("expected an error");
    } catch (const std::exception& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_mentions(Tensor<float>(4, 3, 16, 16), "window");       // wants T = 5
  expect_mentions(Tensor<float>(5, 2, 16, 16), "axis C");       // wants 3
  expect_mentions(Tensor<float>(5, 3, 15, 16), "multiple of");  // divisor 2
}

TEST_CASE("weights are seed-deterministic", "[net]") {
  const NetConfig cfg = tiny_net();
  R21UNet<float> a(cfg, 7), b(cfg, 7), c(cfg, 8);
  CHECK(weight_hash(a) == weight_hash(b));
  CHECK(weight_hash(a) != weight_hash(c));
}

TEST_CASE("clone_model is an independent copy", "[net]") {
  const NetConfig cfg = tiny_net();
  R21UNet<float> net(cfg, 5);
  auto clone = clone_model(net);
  CHECK(weight_hash(*clone) == weight_hash(net));
  const auto x = random_input<float>(cfg, 16, 2);
  CHECK(net.forward(x).v == clone->forward(x).v);

  clone->params()[0]->w[0] += 1.0f;
  CHECK(weight_hash(*clone) != weight_hash(net));
}

TEST_CASE("periodic padding gives exact shift covariance", "[net]") {
  NetConfig cfg = tiny_net(2, 4);
  cfg.padding = PadKind::periodic;
  R21UNet<float> net(cfg, 3);
  const int hw = 16;
  const auto x = random_input<float>(cfg, hw, 9);

  // Circular shift by a multiple of the spatial divisor.
  const int sy = 4, sx = 6;
  Tensor<float> xs(x.t, x.c, hw, hw);
  for (int t = 0; t < x.t; ++t)
    for (int c = 0; c < x.c; ++c)
      for (int y = 0; y < hw; ++y)
        for (int xx = 0; xx < hw; ++xx)
          xs.at(t, c, (y + sy) % hw, (xx + sx) % hw) = x.at(t, c, y, xx);

  const auto a = net.forward(x);
  const auto b = net.forward(xs);
  for (int c = 0; c < a.c; ++c)
    for (int y = 0; y < hw; ++y)
      for (int xx = 0; xx < hw; ++xx)
        REQUIRE(b.at(0, c, (y + sy) % hw, (xx + sx) % hw) ==
                Catch::Approx(a.at(0, c, y, xx)).margin(2e-5));
}

TEST_CASE("softmax ties sum to one and keep order", "[net]") {
  Tensor<double> logits(1, 3, 1, 2);
  logits.at(0, 0, 0, 0) = 2.0;
  logits.at(0, 1, 0, 0) = 2.0;
  logits.at(0, 2, 0, 0) = -1.0;
  logits.at(0, 0, 0, 1) = 100.0;
  logits.at(0, 1, 0, 1) = 0.0;
  logits.at(0, 2, 0, 1) = -100.0;
  const auto p = R21UNet<double>::softmax(logits);
  CHECK(p.at(0, 0, 0, 0) == Catch::Approx(p.at(0, 1, 0, 0)));
  CHECK(p.at(0, 0, 0, 0) + p.at(0, 1, 0, 0) + p.at(0, 2, 0, 0) == Catch::Approx(1.0));
  CHECK(p.at(0, 0, 0, 1) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("predict_sequence slides a stride-1 window", "[net]") {
  const NetConfig cfg = tiny_net();
  R21UNet<float> net(cfg, 11);
  const int frames = 9, hw = 16;
  Tensor<float> seq(frames, cfg.in_channels, hw, hw);
  Rng rng(4);
  for (auto& v : seq.v) v = static_cast<float>(rng.uniform());

  const auto out = predict_sequence(net, seq);
  REQUIRE(out.t == frames - cfg.temporal_window() + 1);
  REQUIRE(out.c == 4);

  // Window 2 of the sequence equals a direct forward pass.
  const auto direct = net.forward(time_slice(seq, 2, cfg.temporal_window()));
  for (int c = 0; c < 4; ++c)
    for (int y = 0; y < hw; ++y)
      for (int x = 0; x < hw; ++x)
        REQUIRE(out.at(2, c, y, x) == direct.at(0, c, y, x));

  CHECK_THROWS_AS(predict_sequence(net, Tensor<float>(3, 3, hw, hw)), DataError);
}

TEST_CASE("asp input stacking validates shapes and keeps channel order", "[net]") {
  const int t = 7, hw = 8;
  Tensor<float> luma(t, 1, hw, hw, 0.25f);
  Tensor<float> mbs(t, 3, hw, hw);
  Tensor<float> att(t, 1, hw, hw, 0.75f);
  for (int i = 0; i < t; ++i)
    for (int c = 0; c < 3; ++c) mbs.at(i, c, 2, 3) = 0.1f * static_cast<float>(c + 1);

  const auto x = stack_asp_inputs(luma, mbs, att);
  REQUIRE(x.t == t);
  REQUIRE(x.c == 5);
  CHECK(x.at(1, 0, 2, 3) == Catch::Approx(0.1).margin(1e-6));   // boundary fg
  CHECK(x.at(1, 1, 2, 3) == Catch::Approx(0.2).margin(1e-6));   // boundary bg
  CHECK(x.at(1, 2, 2, 3) == Catch::Approx(0.3).margin(1e-6));   // boundary both
  CHECK(x.at(1, 3, 0, 0) == Catch::Approx(0.25).margin(1e-6));  // luma
  CHECK(x.at(1, 4, 0, 0) == Catch::Approx(0.75).margin(1e-6));  // attention

  CHECK_THROWS_AS(stack_asp_inputs(Tensor<float>(t - 1, 1, hw, hw), mbs, att), DataError);
  CHECK_THROWS_AS(stack_asp_inputs(luma, Tensor<float>(t, 4, hw, hw), att), DataError);
}

TEST_CASE("mbs probability channels drop the background class", "[net]") {
  Tensor<float> prob(2, 4, 1, 1);
  for (int t = 0; t < 2; ++t)
    for (int c = 0; c < 4; ++c) prob.at(t, c, 0, 0) = 0.1f * static_cast<float>(c + t);
  const auto ch = mbs_prob_to_channels(prob);
  REQUIRE(ch.t == 2);
  REQUIRE(ch.c == 3);
  CHECK(ch.at(0, 0, 0, 0) == Catch::Approx(0.1).margin(1e-6));
  CHECK(ch.at(1, 2, 0, 0) == Catch::Approx(0.4).margin(1e-6));
}

TEST_CASE("checkpoints round-trip weights, config and metadata", "[net]") {
  const auto dir = temp_dir("ckpt");
  const NetConfig cfg = tiny_net();
  R21UNet<float> net(cfg, 21);
  Json meta{{"task", "mbs"}, {"note", "unit"}};
  save_checkpoint(dir / "m.ckpt", net, meta);

  const auto loaded = load_checkpoint<float>(dir / "m.ckpt");
  CHECK(loaded.metadata.at("task") == "mbs");
  CHECK(loaded.config.levels == cfg.levels);
  CHECK(weight_hash(*loaded.model) == weight_hash(net));
  const auto x = random_input<float>(cfg, 16, 6);
  CHECK(loaded.model->forward(x).v == net.forward(x).v);
}

TEST_CASE("checkpoint loader rejects damaged files", "[net]") {
  const auto dir = temp_dir("ckpt_bad");
  const NetConfig cfg = tiny_net();
  R21UNet<float> net(cfg, 1);
  save_checkpoint(dir / "m.ckpt", net, Json::object());

  SECTION("wrong magic") {
    auto bytes = [&] {
      std::ifstream in(dir / "m.ckpt", std::ios::binary);
      return std::string((std::istreambuf_iterator<char>(in)), {});
    }();
    bytes[0] = 'X';
    std::ofstream(dir / "m.ckpt", std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint<float>(dir / "m.ckpt"), DataError);
  }
  SECTION("truncated payload") {
    auto bytes = [&] {
      std::ifstream in(dir / "m.ckpt", std::ios::binary);
      return std::string((std::istreambuf_iterator<char>(in)), {});
    }();
    bytes.resize(bytes.size() - 64);
    std::ofstream(dir / "m.ckpt", std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_checkpoint<float>(dir / "m.ckpt"), DataError);
  }
  SECTION("dtype mismatch") {
    try {
      load_checkpoint<double>(dir / "m.ckpt");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("f32") != std::string::npos);
    }
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_checkpoint<float>(dir / "absent.ckpt"), DataError);
  }
}

TEST_CASE("backward after an inference-mode forward is rejected", "[net]") {
  const NetConfig cfg = tiny_net();
  R21UNet<float> net(cfg, 2);
  const auto prob = net.forward(random_input<float>(cfg, 8, 3));
  Tensor<float> dlogits(prob.t, prob.c, prob.h, prob.w, 0.1f);
  CHECK_THROWS_AS(net.backward(dlogits), RuntimeError);
}

TEST_CASE("analytic gradients agree with finite differences", "[net]") {
  // Small double-precision model; the acceptance harness runs the full-size
  // version of this check with hundreds of sampled parameters.
  const NetConfig cfg = tiny_net(2, 4, 2, 3, 4);
  R21UNet<double> net(cfg, 13);
  const auto x = random_input<double>(cfg, 8, 17);
  Mask gt(8, 8);
  Rng grng(23);
  for (auto& g : gt.v) g = static_cast<std::uint8_t>(grng.index(4));

  net.zero_grad();
  Tensor<double> dlogits;
  const auto prob = net.forward(x, true);
  weighted_ce_grad(prob, gt, kMbsClassWeights, 1.0, dlogits);
  net.backward(dlogits);

  auto params = net.params();
  Rng pick(31);
  int checked = 0;
  for (int s = 0; s < 40; ++s) {
    Param<double>* p = params[pick.index(params.size())];
    const std::size_t i = pick.index(p->w.size());
    const double analytic = p->g[i];
    const double h = 1e-5 * std::max(1.0, std::abs(p->w[i]));
    const double keep = p->w[i];
    p->w[i] = keep + h;
    const double up = weighted_ce(net.forward(x), gt, kMbsClassWeights);
    p->w[i] = keep - h;
    const double dn = weighted_ce(net.forward(x), gt, kMbsClassWeights);
    p->w[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    INFO(p->name << "[" << i << "] analytic " << analytic << " numeric " << numeric);
    REQUIRE(std::abs(analytic - numeric) / scale < 1e-3);
    ++checked;
  }
  CHECK(checked == 40);
}
