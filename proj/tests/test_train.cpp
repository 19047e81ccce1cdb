#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "objn/train/adam.hpp"
#include "objn/train/augment.hpp"
#include "objn/train/loss.hpp"
#include "objn/train/onecycle.hpp"
#include "objn/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace objn;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "objn_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Tensor<double> uniform_prob(int classes, int hw) {
  return Tensor<double>(1, classes, hw, hw, 1.0 / classes);
}

NetConfig unit_net(int in_ch, int classes, int tconvs) {
  NetConfig c;
  c.levels = 2;
  c.base_channels = 4;
  c.temporal_convs = tconvs;
  c.in_channels = in_ch;
  c.out_classes = classes;
  return c;
}

// A dataset of a few tiny scenes shared by the loop tests.
DatasetManifest tiny_dataset(const fs::path& root, int frames = 11) {
  GenConfig g;
  g.frames = frames;
  g.height = 16;
  g.width = 16;
  g.max_layers = 2;
  BuildConfig bc;
  bc.train_count = 3;
  bc.val_count = 2;
  bc.test_count = 1;
  bc.gen = g;
  return build_dataset(root, bc, 31, ShapeLibrary::builtin());
}

}  // namespace

TEST_CASE("uniform predictions hit the closed-form losses", "[train]") {
  Mask gt3(12, 12, 1, 3);  // every pixel class 3
  CHECK(std::abs(mbs_loss(uniform_prob(4, 12), gt3) - 3.0 * std::log(4.0)) < 1e-9);
  Mask gt1(12, 12, 1, 1);  // every pixel class 1
  CHECK(std::abs(asp_loss(uniform_prob(3, 12), gt1) - 4.0 * std::log(3.0)) < 1e-9);
}

TEST_CASE("unit class weights reduce to plain cross entropy", "[train]") {
  Rng rng(3);
  Tensor<double> prob(1, 4, 6, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      double sum = 0;
      for (int c = 0; c < 4; ++c) {
        prob.at(0, c, y, x) = rng.uniform() + 0.05;
        sum += prob.at(0, c, y, x);
      }
      for (int c = 0; c < 4; ++c) prob.at(0, c, y, x) /= sum;
    }
  Mask gt(6, 6);
  for (auto& g : gt.v) g = static_cast<std::uint8_t>(rng.index(4));

  double manual = 0;
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) manual += -std::log(prob.at(0, gt.at(y, x), y, x));
  manual /= 36.0;
  CHECK(weighted_ce(prob, gt, {1, 1, 1, 1}) == Catch::Approx(manual).margin(1e-12));
}

TEST_CASE("loss gradient matches finite differences on raw logits", "[train]") {
  Rng rng(7);
  Tensor<double> logits(1, 3, 4, 4);
  for (auto& v : logits.v) v = rng.uniform(-2.0, 2.0);
  Mask gt(4, 4);
  for (auto& g : gt.v) g = static_cast<std::uint8_t>(rng.index(3));

  auto loss_of = [&](const Tensor<double>& lg) {
    return weighted_ce(R21UNet<double>::softmax(lg), gt, kAspClassWeights);
  };

  Tensor<double> dlogits;
  weighted_ce_grad(R21UNet<double>::softmax(logits), gt, kAspClassWeights, 1.0, dlogits);

  for (std::size_t i = 0; i < logits.v.size(); ++i) {
    const double h = 1e-6;
    const double keep = logits.v[i];
    logits.v[i] = keep + h;
    const double up = loss_of(logits);
    logits.v[i] = keep - h;
    const double dn = loss_of(logits);
    logits.v[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    REQUIRE(dlogits.v[i] == Catch::Approx(numeric).margin(1e-6));
  }
}

TEST_CASE("loss validates its inputs", "[train]") {
  Mask gt(4, 4);
  CHECK_THROWS_AS(mbs_loss(uniform_prob(3, 4), gt), RuntimeError);  // 3 channels, wants 4
  Mask bad_gt(4, 4, 1, 5);
  CHECK_THROWS_AS(mbs_loss(uniform_prob(4, 4), bad_gt), DataError);
  Tensor<double> nan_prob = uniform_prob(4, 4);
  nan_prob.v[7] = std::nan("");
  CHECK_THROWS_AS(mbs_loss(nan_prob, gt), NumericError);

  Tensor<double> buf(1, 4, 2, 2);
  CHECK_THROWS_AS(weighted_ce_grad(uniform_prob(4, 4), gt, kMbsClassWeights, 1.0, buf),
                  RuntimeError);
}

TEST_CASE("adam reproduces a hand-computed first step", "[train]") {
  Param<double> p;
  p.init("w", {2});
  p.w = {1.0, -2.0};
  p.g = {0.5, -1.0};
  Adam<double> opt({&p});
  opt.step(0.01);

  // First step: mhat = g, vhat = g^2, so the update is lr * g / (|g| + eps).
  const double eps = 1e-8;
  CHECK(p.w[0] == Catch::Approx(1.0 - 0.01 * 0.5 / (0.5 + eps)).margin(1e-12));
  CHECK(p.w[1] == Catch::Approx(-2.0 + 0.01 * 1.0 / (1.0 + eps)).margin(1e-12));

  // Second step with the same gradient keeps moving the same way.
  opt.step(0.01);
  CHECK(p.w[0] < 1.0 - 0.009);
  CHECK(opt.steps() == 2);
}

TEST_CASE("one-cycle rises to the peak then anneals to the floor", "[train]") {
  const int total = 100;
  OneCycle sched(1e-4, 1e-3, 1e-6, total);
  CHECK(sched.lr_at(0) == Catch::Approx(1e-4));
  CHECK(sched.lr_at(total - 1) == Catch::Approx(1e-6));
  CHECK(sched.lr_at(-5) == Catch::Approx(1e-4));
  CHECK(sched.lr_at(total + 5) == Catch::Approx(1e-6));

  double peak = 0;
  int peak_at = 0;
  double prev = 0;
  bool rising = true;
  for (int s = 0; s < total; ++s) {
    const double lr = sched.lr_at(s);
    CHECK(lr <= 1e-3 * (1 + 1e-12));
    CHECK(lr >= 1e-6 * (1 - 1e-12));
    if (s > 0) {
      if (rising && lr < prev) rising = false;
      else if (!rising)
        CHECK(lr <= prev * (1 + 1e-12));  // never rises again after the peak
    }
    if (lr > peak) {
      peak = lr;
      peak_at = s;
    }
    prev = lr;
  }
  CHECK(peak == Catch::Approx(1e-3));
  // pct_start 0.3 puts the peak 30% of the way in.
  CHECK(std::abs(peak_at - 30) <= 1);

  CHECK_THROWS_AS(OneCycle(1e-3, 1e-4, 1e-6, 10), ConfigError);  // start above max
  CHECK_THROWS_AS(OneCycle(0.0, 1e-3, 1e-6, 10), ConfigError);
  CHECK_THROWS_AS(OneCycle(1e-4, 1e-3, 1e-6, 0), ConfigError);
}

TEST_CASE("temporal boundary dropout has the pinned frequency profile", "[train]") {
  MbsDropoutConfig cfg;
  Rng rng(99);
  Tensor<float> preds(11, 3, 4, 4, 1.0f);
  double total_zeroed = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    Tensor<float> copy = preds;
    const auto zeroed = temporal_mbs_dropout(copy, rng, cfg);
    REQUIRE(zeroed.size() <= 6);
    total_zeroed += static_cast<double>(zeroed.size());
    std::set<int> z(zeroed.begin(), zeroed.end());
    REQUIRE(z.size() == zeroed.size());
    for (int t = 0; t < 11; ++t) {
      float sum = 0;
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
          for (int x = 0; x < 4; ++x) sum += copy.at(t, c, y, x);
      if (z.count(t)) REQUIRE(sum == 0.0f);
      else REQUIRE(sum == 48.0f);
    }
  }
  // Binomial(6, 0.583) has mean 3.498; allow generous sampling noise.
  const double mean = total_zeroed / draws;
  CHECK(mean > 3.3);
  CHECK(mean < 3.7);

  MbsDropoutConfig off;
  off.enabled = false;
  Tensor<float> copy = preds;
  CHECK(temporal_mbs_dropout(copy, rng, off).empty());
  CHECK(copy.v == preds.v);
}

TEST_CASE("attention dropout follows its per-frame probability", "[train]") {
  AttDropoutConfig cfg;
  cfg.enabled = true;
  Rng rng(5);
  Tensor<float> att(7, 1, 2, 2, 1.0f);

  cfg.frame_prob = 0.0;
  {
    Tensor<float> copy = att;
    CHECK(temporal_attention_dropout(copy, rng, cfg).empty());
  }
  cfg.frame_prob = 1.0;
  {
    Tensor<float> copy = att;
    const auto zeroed = temporal_attention_dropout(copy, rng, cfg);
    CHECK(zeroed.size() == 7);
    for (float v : copy.v) REQUIRE(v == 0.0f);
  }
}

TEST_CASE("train config json round-trips and rejects unknown keys", "[train]") {
  TrainConfig tc = asp_train_defaults();
  tc.epochs = 3;
  tc.all_windows = true;
  tc.mbs_dropout.frame_prob = 0.4;
  const Json j = train_config_to_json(tc);
  const TrainConfig back = train_config_from_json(j);
  CHECK(back.epochs == 3);
  CHECK(back.all_windows);
  CHECK(back.lr_max == Catch::Approx(tc.lr_max));
  CHECK(back.mbs_dropout.frame_prob == Catch::Approx(0.4));

  Json bad = j;
  bad["learning_rate"] = 0.1;
  CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);

  TrainConfig invalid;
  invalid.lr_start = invalid.lr_max = 1e-3;
  CHECK_THROWS_AS(invalid.validate(), ConfigError);
}

TEST_CASE("a short boundary training run is reproducible end to end", "[train]") {
  const auto data = temp_dir("loop_data");
  const DatasetManifest man = tiny_dataset(data);

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 2;
  tc.seed = 9;
  tc.cache_scenes = true;
  const NetConfig net = unit_net(3, 4, 2);

  const auto out_a = temp_dir("loop_a");
  const TrainResult a = train_mbsnet<float>(man, net, tc, out_a);
  CHECK(fs::exists(a.checkpoint));
  CHECK(std::isfinite(a.final_loss));
  // 3 scenes, batch 2: two steps per epoch, two epochs.
  CHECK(a.steps == 4);

  // The JSONL log matches the step count and the one-cycle schedule.
  std::ifstream log(out_a / "train_log.jsonl");
  std::string line;
  int lines = 0;
  OneCycle sched(tc.lr_start, tc.lr_max, tc.lr_final, 4);
  while (std::getline(log, line)) {
    const Json rec = Json::parse(line);
    CHECK(rec.at("lr").get<double>() == Catch::Approx(sched.lr_at(lines)));
    CHECK(rec.at("step").get<int>() == lines);
    CHECK(std::isfinite(rec.at("loss").get<double>()));
    ++lines;
  }
  CHECK(lines == 4);
  CHECK(fs::exists(out_a / "ckpt_epoch_000.ckpt"));
  CHECK(fs::exists(out_a / "ckpt_epoch_001.ckpt"));

  const auto out_b = temp_dir("loop_b");
  const TrainResult b = train_mbsnet<float>(man, net, tc, out_b);
  CHECK(a.weight_hash == b.weight_hash);
  CHECK(a.final_loss == b.final_loss);

  TrainConfig other = tc;
  other.seed = 10;
  const TrainResult c = train_mbsnet<float>(man, net, other, temp_dir("loop_c"));
  CHECK(a.weight_hash != c.weight_hash);
}

TEST_CASE("surface training keeps the frozen boundary net untouched", "[train]") {
  const auto data = temp_dir("asp_data");
  const DatasetManifest man = tiny_dataset(data, 13);

  R21UNet<float> frozen(unit_net(3, 4, 2), 5);
  const std::string before = weight_hash(frozen);

  TrainConfig tc = asp_train_defaults();
  tc.epochs = 1;
  tc.batch_size = 4;
  tc.seed = 3;
  const TrainResult r =
      train_aspnet<float>(man, unit_net(5, 3, 3), frozen, tc, temp_dir("asp_out"));
  CHECK(fs::exists(r.checkpoint));
  CHECK(std::isfinite(r.final_loss));
  CHECK(weight_hash(frozen) == before);

  const auto ck = load_checkpoint<float>(r.checkpoint);
  CHECK(ck.config.in_channels == 5);
  CHECK(ck.config.out_classes == 3);
}

TEST_CASE("diverged training aborts with a usable snapshot", "[train]") {
  const auto data = temp_dir("diverge_data");
  const DatasetManifest man = tiny_dataset(data);

  TrainConfig tc;
  tc.lr_start = 1e9;
  tc.lr_max = 1e12;
  tc.lr_final = 1e6;
  tc.epochs = 4;
  tc.batch_size = 1;
  tc.seed = 1;
  const auto out = temp_dir("diverge_out");
  try {
    train_mbsnet<float>(man, unit_net(3, 4, 2), tc, out);
    WARN("training with an absurd learning rate did not diverge; contract untested");
  } catch (const RuntimeError& e) {
    CHECK(std::string(e.what()).find("model_aborted.ckpt") != std::string::npos);
    REQUIRE(fs::exists(out / "model_aborted.ckpt"));
    const auto ck = load_checkpoint<float>(out / "model_aborted.ckpt");
    CHECK(ck.metadata.contains("aborted_at_step"));
    // The restored snapshot is finite everywhere.
    for (const Param<float>* p : ck.model->params())
      for (float v : p->w) REQUIRE(std::isfinite(v));
  }
}
