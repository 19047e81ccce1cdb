#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "objn/attention/attention.hpp"
#include "objn/core/error.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/core/rng.hpp"
#include "objn/datasetio/dataset.hpp"
#include "objn/datasetio/scene_record.hpp"
#include "objn/datasetio/tensors.hpp"
#include "objn/net/checkpoint.hpp"
#include "objn/net/model.hpp"
#include "objn/train/adam.hpp"
#include "objn/train/augment.hpp"
#include "objn/train/loss.hpp"
#include "objn/train/onecycle.hpp"

namespace objn {

struct TrainConfig {
  double lr_start = 3e-4;
  double lr_max = 3e-3;
  double lr_final = 3e-6;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int epochs = 8;
  int batch_size = 8;
  bool all_windows = false;  // every window of every scene per epoch, not one
  MbsDropoutConfig mbs_dropout;
  AttDropoutConfig attention_dropout;
  AttentionMode attention_mode = AttentionMode::center;
  bool attention_jitter = true;
  std::uint64_t seed = 0;
  bool cache_scenes = false;  // hold decoded scenes in RAM (small runs only)
  bool cache_mbs = true;      // per-scene frozen-MBS predictions (ASP runs)
  int log_every = 1;

  void validate() const {
    if (!(lr_start < lr_max)) throw ConfigError("train config: lr_start must be below lr_max");
    if (lr_start <= 0 || lr_final <= 0) throw ConfigError("train config: rates must be positive");
    if (epochs < 1 || batch_size < 1)
      throw ConfigError("train config: epochs and batch_size must be at least 1");
    if (mbs_dropout.max_frames < 0 || mbs_dropout.frame_prob < 0 || mbs_dropout.frame_prob > 1 ||
        attention_dropout.frame_prob < 0 || attention_dropout.frame_prob > 1)
      throw ConfigError("train config: dropout parameters out of range");
    if (log_every < 1) throw ConfigError("train config: log_every must be at least 1");
  }
};

inline TrainConfig mbs_train_defaults() { return TrainConfig{}; }

inline TrainConfig asp_train_defaults() {
  TrainConfig tc;
  tc.lr_start = 3e-5;
  tc.lr_max = 3e-4;
  tc.lr_final = 3e-7;
  return tc;
}

inline Json train_config_to_json(const TrainConfig& tc) {
  return Json{{"lr_start", tc.lr_start},
              {"lr_max", tc.lr_max},
              {"lr_final", tc.lr_final},
              {"beta1", tc.beta1},
              {"beta2", tc.beta2},
              {"adam_eps", tc.adam_eps},
              {"epochs", tc.epochs},
              {"batch_size", tc.batch_size},
              {"all_windows", tc.all_windows},
              {"mbs_dropout",
               {{"enabled", tc.mbs_dropout.enabled},
                {"max_frames", tc.mbs_dropout.max_frames},
                {"frame_prob", tc.mbs_dropout.frame_prob}}},
              {"attention_dropout",
               {{"enabled", tc.attention_dropout.enabled},
                {"frame_prob", tc.attention_dropout.frame_prob}}},
              {"attention_mode", to_string(tc.attention_mode)},
              {"attention_jitter", tc.attention_jitter},
              {"seed", tc.seed},
              {"cache_scenes", tc.cache_scenes},
              {"cache_mbs", tc.cache_mbs},
              {"log_every", tc.log_every}};
}

// Fields present in `j` override `base`; unknown keys are rejected.
inline TrainConfig train_config_from_json(const Json& j, TrainConfig base = {}) {
  static const char* known[] = {"lr_start",       "lr_max",       "lr_final",
                                "beta1",          "beta2",        "adam_eps",
                                "epochs",         "batch_size",   "all_windows",
                                "mbs_dropout",    "attention_dropout", "attention_mode",
                                "attention_jitter", "seed",       "cache_scenes",
                                "cache_mbs",      "log_every"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("train config: unknown key \"" + it.key() + "\"");
  }
  TrainConfig tc = base;
  tc.lr_start = json_get_or(j, "lr_start", tc.lr_start);
  tc.lr_max = json_get_or(j, "lr_max", tc.lr_max);
  tc.lr_final = json_get_or(j, "lr_final", tc.lr_final);
  tc.beta1 = json_get_or(j, "beta1", tc.beta1);
  tc.beta2 = json_get_or(j, "beta2", tc.beta2);
  tc.adam_eps = json_get_or(j, "adam_eps", tc.adam_eps);
  tc.epochs = json_get_or(j, "epochs", tc.epochs);
  tc.batch_size = json_get_or(j, "batch_size", tc.batch_size);
  tc.all_windows = json_get_or(j, "all_windows", tc.all_windows);
  if (j.contains("mbs_dropout")) {
    const Json& d = j.at("mbs_dropout");
    tc.mbs_dropout.enabled = json_get_or(d, "enabled", tc.mbs_dropout.enabled);
    tc.mbs_dropout.max_frames = json_get_or(d, "max_frames", tc.mbs_dropout.max_frames);
    tc.mbs_dropout.frame_prob = json_get_or(d, "frame_prob", tc.mbs_dropout.frame_prob);
  }
  if (j.contains("attention_dropout")) {
    const Json& d = j.at("attention_dropout");
    tc.attention_dropout.enabled = json_get_or(d, "enabled", tc.attention_dropout.enabled);
    tc.attention_dropout.frame_prob =
        json_get_or(d, "frame_prob", tc.attention_dropout.frame_prob);
  }
  if (j.contains("attention_mode"))
    tc.attention_mode = attention_mode_from_string(json_get<std::string>(j, "attention_mode"));
  tc.attention_jitter = json_get_or(j, "attention_jitter", tc.attention_jitter);
  tc.seed = json_get_or(j, "seed", tc.seed);
  tc.cache_scenes = json_get_or(j, "cache_scenes", tc.cache_scenes);
  tc.cache_mbs = json_get_or(j, "cache_mbs", tc.cache_mbs);
  tc.log_every = json_get_or(j, "log_every", tc.log_every);
  tc.validate();
  return tc;
}

struct TrainResult {
  std::filesystem::path checkpoint;  // final model file
  double final_loss = 0.0;
  long long steps = 0;
  std::string weight_hash;
};

namespace detail {

// Per-class correct/total pixel counts for the training log.
struct ClassTally {
  std::vector<long long> correct, total;
  explicit ClassTally(std::size_t k) : correct(k, 0), total(k, 0) {}
  void add(const Mask& pred, const Mask& gt) {
    for (std::size_t i = 0; i < gt.v.size(); ++i) {
      ++total[gt.v[i]];
      if (pred.v[i] == gt.v[i]) ++correct[gt.v[i]];
    }
  }
  Json to_json() const {
    Json acc = Json::array();
    for (std::size_t c = 0; c < total.size(); ++c)
      acc.push_back(total[c] ? static_cast<double>(correct[c]) / static_cast<double>(total[c])
                             : 0.0);
    return Json{{"correct", correct}, {"total", total}, {"acc", acc}};
  }
};

// Loads scene records from a manifest split, optionally keeping all of them
// in memory. With keep=false the reference stays valid until the next get().
class SceneCache {
 public:
  SceneCache(const DatasetManifest& man, Split split, bool keep)
      : man_(man), split_(split), keep_(keep) {
    if (keep_) slots_.resize(man.split(split).size());
    else slots_.resize(1);
    loaded_.assign(slots_.size(), false);
  }

  std::size_t size() const { return man_.split(split_).size(); }

  const SceneContent& get(std::size_t i) {
    const std::size_t slot = keep_ ? i : 0;
    if (!keep_ || !loaded_[slot]) {
      if (!keep_ && loaded_[0] && current_ == i) return slots_[0];
      const SceneEntry& e = man_.split(split_)[i];
      slots_[slot] = read_scene(man_.scene_dir(split_, e));
      loaded_[slot] = true;
      current_ = i;
    }
    return slots_[slot];
  }

 private:
  const DatasetManifest& man_;
  Split split_;
  bool keep_;
  std::vector<SceneContent> slots_;
  std::vector<bool> loaded_;
  std::size_t current_ = static_cast<std::size_t>(-1);
};

// One training visit: run forward/backward for (scene, window) and return
// the loss contribution. window < 0 means draw it from rng.
template <class S>
using VisitFn = std::function<double(std::size_t scene, int window, Rng& rng,
                                     std::uint64_t visit_seed, double scale, ClassTally& tally)>;

template <class S>
TrainResult run_training_loop(R21UNet<S>& model, SceneCache& scenes,
                              const std::function<int(std::size_t)>& windows_of,
                              const TrainConfig& tc, std::size_t n_classes,
                              const std::filesystem::path& out_dir, Json meta,
                              const VisitFn<S>& visit) {
  tc.validate();
  if (scenes.size() == 0) throw DataError("training split is empty");
  std::filesystem::create_directories(out_dir);

  // Visit list for one epoch: (scene, window) with window = -1 when the
  // window is drawn at visit time.
  std::vector<std::pair<std::size_t, int>> plan;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (tc.all_windows) {
      const int nw = windows_of(i);
      for (int w = 0; w < nw; ++w) plan.emplace_back(i, w);
    } else {
      plan.emplace_back(i, -1);
    }
  }
  const long long visits_per_epoch = static_cast<long long>(plan.size());
  const long long steps_per_epoch = (visits_per_epoch + tc.batch_size - 1) / tc.batch_size;
  const long long total_steps = steps_per_epoch * tc.epochs;
  OneCycle sched(tc.lr_start, tc.lr_max, tc.lr_final, total_steps);

  Adam<S> opt(model.params(), tc.beta1, tc.beta2, tc.adam_eps);
  std::ofstream log(out_dir / "train_log.jsonl", std::ios::trunc);
  if (!log) throw DataError("cannot write " + (out_dir / "train_log.jsonl").string());

  // Last-finite weight snapshot, so divergence still leaves a usable model.
  auto snapshot = [&] {
    std::vector<std::vector<S>> s;
    for (const Param<S>* p : model.params()) s.push_back(p->w);
    return s;
  };
  std::vector<std::vector<S>> last_finite = snapshot();

  meta["train_config"] = train_config_to_json(tc);
  meta["total_steps"] = total_steps;

  long long step = 0;
  double last_loss = 0.0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    auto order = plan;
    Rng erng(derive_seed(tc.seed, {0xE70C5ull, static_cast<std::uint64_t>(epoch)}));
    erng.shuffle(order.begin(), order.end());
    long long visit_idx = 0;
    while (visit_idx < visits_per_epoch) {
      const long long b =
          std::min<long long>(tc.batch_size, visits_per_epoch - visit_idx);
      // Divergence leaves a usable model: restore the last finite weights and
      // save them next to the log before giving up.
      auto abort_diverged = [&](const std::string& why) -> RuntimeError {
        for (std::size_t i = 0; i < last_finite.size(); ++i)
          model.params()[i]->w = last_finite[i];
        const auto abort_path = out_dir / "model_aborted.ckpt";
        Json m = meta;
        m["aborted_at_step"] = step;
        save_checkpoint(abort_path, model, m);
        return RuntimeError("training diverged (" + why + ") at step " + std::to_string(step) +
                            "; last finite state saved to " + abort_path.string());
      };

      model.zero_grad();
      double batch_loss = 0.0;
      ClassTally tally(n_classes);
      for (long long k = 0; k < b; ++k, ++visit_idx) {
        const auto [scene, window] = order[static_cast<std::size_t>(visit_idx)];
        const std::uint64_t vseed =
            derive_seed(tc.seed, {0x115177ull, static_cast<std::uint64_t>(epoch),
                                  static_cast<std::uint64_t>(visit_idx)});
        Rng vrng(vseed);
        try {
          batch_loss += visit(scene, window, vrng, vseed, 1.0 / static_cast<double>(b),
                              tally) /
                        static_cast<double>(b);
        } catch (const NumericError& e) {
          throw abort_diverged(e.what());
        }
      }
      if (!std::isfinite(batch_loss)) throw abort_diverged("loss not finite");
      const double lr = sched.lr_at(step);
      opt.step(lr);
      last_finite = snapshot();
      last_loss = batch_loss;
      if (step % tc.log_every == 0) {
        Json line{{"step", step}, {"epoch", epoch}, {"lr", lr}, {"loss", batch_loss}};
        line["classes"] = tally.to_json();
        log << line.dump() << "\n";
      }
      ++step;
    }
    char name[48];
    std::snprintf(name, sizeof name, "ckpt_epoch_%03d.ckpt", epoch);
    Json m = meta;
    m["epoch"] = epoch;
    save_checkpoint(out_dir / name, model, m);
  }
  log.flush();

  TrainResult res;
  res.checkpoint = out_dir / "model.ckpt";
  Json m = meta;
  m["epoch"] = tc.epochs - 1;
  save_checkpoint(res.checkpoint, model, m);
  res.final_loss = last_loss;
  res.steps = step;
  res.weight_hash = weight_hash(model);
  return res;
}

}  // namespace detail

// Boundary-sense training: windows of raw RGB frames against the boundary
// labels of the window's center frame.
template <class S = float>
TrainResult train_mbsnet(const DatasetManifest& man, const NetConfig& net_cfg,
                         const TrainConfig& tc, const std::filesystem::path& out_dir) {
  NetConfig cfg = net_cfg;
  cfg.validate();
  if (cfg.out_classes != kMbsClasses || cfg.in_channels != 3)
    throw ConfigError("train_mbsnet: net config must take 3 input channels and emit 4 classes");
  R21UNet<S> model(cfg, derive_seed(tc.seed, {0x31ull}));
  detail::SceneCache scenes(man, Split::train, tc.cache_scenes);
  const int win = cfg.temporal_window();

  auto windows_of = [&](std::size_t i) {
    const int n = static_cast<int>(scenes.get(i).frames.rgb.size()) - win + 1;
    if (n < 1)
      throw DataError("scene " + man.split(Split::train)[i].id + " has too few frames for a " +
                      std::to_string(win) + "-frame window");
    return n;
  };

  detail::VisitFn<S> visit = [&](std::size_t scene, int window, Rng& rng, std::uint64_t,
                                 double scale, detail::ClassTally& tally) {
    const SceneContent& c = scenes.get(scene);
    const int nw = static_cast<int>(c.frames.rgb.size()) - win + 1;
    if (nw < 1)
      throw DataError("scene " + man.split(Split::train)[scene].id +
                      " has too few frames for the temporal window");
    const int w = window >= 0 ? window : static_cast<int>(rng.index(static_cast<std::size_t>(nw)));
    const Tensor<S> x = rgb_window_tensor<S>(c.frames.rgb, w, win);
    const Mask& gt = c.mbs.labels[static_cast<std::size_t>(w + (win - 1) / 2)];
    const Tensor<S> prob = model.forward(x, true);
    Tensor<S> dlogits;
    const double loss = weighted_ce_grad(prob, gt, kMbsClassWeights, scale, dlogits);
    model.backward(dlogits);
    tally.add(argmax_frame(prob, 0), gt);
    return loss;
  };

  Json meta{{"task", "mbs"},
            {"seed", tc.seed},
            {"dataset_root", man.root.string()},
            {"dataset_seed", man.global_seed},
            {"split", "train"}};
  return detail::run_training_loop<S>(model, scenes, windows_of, tc, kMbsClasses, out_dir,
                                      std::move(meta), visit);
}

// Attended-surface training against a frozen boundary model: per visit the
// target layer is drawn uniformly, attention is synthesized fresh with
// jitter, frozen-model predictions are fetched (cached per scene), temporal
// dropout is applied, and the 5-channel stack feeds the surface net.
template <class S = float>
TrainResult train_aspnet(const DatasetManifest& man, const NetConfig& net_cfg,
                         R21UNet<S>& frozen_mbs, const TrainConfig& tc,
                         const std::filesystem::path& out_dir) {
  NetConfig cfg = net_cfg;
  cfg.validate();
  if (cfg.out_classes != kAspClasses || cfg.in_channels != 5)
    throw ConfigError("train_aspnet: net config must take 5 input channels and emit 3 classes");
  if (frozen_mbs.config().out_classes != kMbsClasses)
    throw ConfigError("train_aspnet: frozen model does not emit 4 boundary classes");
  const std::string frozen_hash = weight_hash(frozen_mbs);

  R21UNet<S> model(cfg, derive_seed(tc.seed, {0xA5ull}));
  detail::SceneCache scenes(man, Split::train, tc.cache_scenes);
  const int mbs_win = frozen_mbs.config().temporal_window();
  const int asp_win = cfg.temporal_window();
  const int mbs_off = (mbs_win - 1) / 2;

  std::unordered_map<std::size_t, Tensor<S>> mbs_cache;
  auto mbs_preds = [&](std::size_t i, const SceneContent& c) -> Tensor<S> {
    if (tc.cache_mbs) {
      auto it = mbs_cache.find(i);
      if (it != mbs_cache.end()) return it->second;
    }
    const Tensor<S> all = rgb_window_tensor<S>(c.frames.rgb, 0,
                                               static_cast<int>(c.frames.rgb.size()));
    Tensor<S> ch = mbs_prob_to_channels(predict_sequence(frozen_mbs, all));
    if (tc.cache_mbs) mbs_cache.emplace(i, ch);
    return ch;
  };

  auto asp_windows = [&](const SceneContent& c, const char* id) {
    const int n_m = static_cast<int>(c.frames.rgb.size()) - mbs_win + 1;
    const int nw = n_m - asp_win + 1;
    if (nw < 1)
      throw DataError("scene " + std::string(id) + " has too few frames for stacked windows (" +
                      std::to_string(c.frames.rgb.size()) + " frames, need " +
                      std::to_string(mbs_win + asp_win - 1) + ")");
    return nw;
  };

  auto windows_of = [&](std::size_t i) {
    return asp_windows(scenes.get(i), man.split(Split::train)[i].id.c_str());
  };

  detail::VisitFn<S> visit = [&](std::size_t scene, int window, Rng& rng,
                                 std::uint64_t visit_seed, double scale,
                                 detail::ClassTally& tally) {
    const SceneContent& c = scenes.get(scene);
    const char* id = man.split(Split::train)[scene].id.c_str();
    const int nw = asp_windows(c, id);
    const int n_m = nw + asp_win - 1;
    const int w = window >= 0 ? window : static_cast<int>(rng.index(static_cast<std::size_t>(nw)));
    const int target = static_cast<int>(rng.index(c.spec.layers.size()));

    Tensor<S> preds = mbs_preds(scene, c);
    temporal_mbs_dropout(preds, rng, tc.mbs_dropout);

    const JitterConfig jit = tc.attention_jitter ? JitterConfig{} : JitterConfig{0.0, 0.0};
    const int k = 2 + static_cast<int>(rng.index(3));
    const AttentionSequence att = make_attention(c.spec, target, tc.attention_mode, k, jit,
                                                 derive_seed(visit_seed, {0xA77ull}));
    Tensor<S> att_t = heat_window_tensor<S>(att.heat, mbs_off, n_m);
    temporal_attention_dropout(att_t, rng, tc.attention_dropout);

    const Tensor<S> x = stack_asp_inputs(
        luma_window_tensor<S>(c.frames.luma, mbs_off + w, asp_win), time_slice(preds, w, asp_win),
        time_slice(att_t, w, asp_win));
    const Mask& gt =
        c.asp[static_cast<std::size_t>(target)].labels[static_cast<std::size_t>(
            w + mbs_off + (asp_win - 1) / 2)];
    const Tensor<S> prob = model.forward(x, true);
    Tensor<S> dlogits;
    const double loss = weighted_ce_grad(prob, gt, kAspClassWeights, scale, dlogits);
    model.backward(dlogits);
    tally.add(argmax_frame(prob, 0), gt);
    return loss;
  };

  Json meta{{"task", "asp"},
            {"seed", tc.seed},
            {"dataset_root", man.root.string()},
            {"dataset_seed", man.global_seed},
            {"split", "train"},
            {"frozen_mbs_hash", frozen_hash}};
  TrainResult res = detail::run_training_loop<S>(model, scenes, windows_of, tc, kAspClasses,
                                                 out_dir, std::move(meta), visit);
  if (weight_hash(frozen_mbs) != frozen_hash)
    throw RuntimeError("frozen boundary model was mutated during surface training");
  return res;
}

}  // namespace objn
