// objn: layered-scene dataset generation, spatio-temporal training, and
// evaluation in one binary. Every subcommand echoes its resolved config and
// drops a run-manifest.json into its output directory, so any artifact can
// be reproduced from what sits next to it.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "objn/attention/attention.hpp"
#include "objn/core/gif.hpp"
#include "objn/core/hash.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/core/parallel.hpp"
#include "objn/core/png_io.hpp"
#include "objn/core/version.hpp"
#include "objn/datasetio/dataset.hpp"
#include "objn/datasetio/ingest.hpp"
#include "objn/datasetio/scene_record.hpp"
#include "objn/datasetio/tensors.hpp"
#include "objn/eval/metrics.hpp"
#include "objn/eval/overlay.hpp"
#include "objn/net/checkpoint.hpp"
#include "objn/net/model.hpp"
#include "objn/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace objn;

namespace {

fs::path data_root_or_env(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("OBJN_DATA_ROOT")) return env;
  throw ConfigError("no dataset given: pass --data or set OBJN_DATA_ROOT");
}

Json input_entry(const fs::path& p) {
  return Json{{"path", p.string()}, {"hash", file_hash_hex(p)}};
}

void write_run_manifest(const fs::path& out_dir, const std::string& command, const Json& config,
                        std::uint64_t seed, const Json& inputs) {
  fs::create_directories(out_dir);
  Json m{{"command", command},
         {"app_version", kAppVersion},
         {"generator_version", kGeneratorVersion},
         {"seed", seed},
         {"jobs", job_count()},
         {"config", config},
         {"inputs", inputs}};
  save_json(out_dir / "run-manifest.json", m);
}

Json load_config_file(const std::string& path) {
  if (path.empty()) return Json::object();
  return load_json(path);
}

void echo_config(const Json& c) { std::cout << canonical_dump(c); }

Checkpoint<float> load_model_checked(const fs::path& path, int in_channels, int out_classes,
                                     const char* what) {
  Checkpoint<float> ck = load_checkpoint<float>(path);
  if (ck.config.in_channels != in_channels || ck.config.out_classes != out_classes)
    throw ConfigError(std::string(what) + " checkpoint " + path.string() + " has " +
                      std::to_string(ck.config.in_channels) + " input channels and " +
                      std::to_string(ck.config.out_classes) + " classes, expected " +
                      std::to_string(in_channels) + "/" + std::to_string(out_classes));
  return ck;
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split \"" + s + "\" (train, val, test)");
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config, out, shapes;
  std::uint64_t seed = 0;
};

void run_generate(const GenerateArgs& a) {
  BuildConfig bc;
  const Json cj = load_config_file(a.config);
  if (!cj.empty()) bc = build_config_from_json(cj);
  ShapeLibrary lib =
      a.shapes.empty() ? ShapeLibrary::builtin() : ShapeLibrary::load_dir(a.shapes);
  const Json resolved = build_config_to_json(bc);
  echo_config(resolved);
  const DatasetManifest man = build_dataset(a.out, bc, a.seed, lib);
  Json inputs = Json::object();
  if (!a.shapes.empty()) inputs["shapes"] = Json{{"path", a.shapes}};
  write_run_manifest(a.out, "generate", resolved, a.seed, inputs);
  std::cout << "wrote " << (man.split(Split::train).size() + man.split(Split::val).size() +
                            man.split(Split::test).size())
            << " scenes under " << a.out << "\n";
}

// ------------------------------------------------------------- train-mbs

struct TrainArgs {
  std::string config, data, out, frozen_mbs;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs, batch_size, levels, base_channels;
  std::optional<std::string> norm, attention_mode;
  bool cache_scenes = false;
  bool all_windows = false;
};

NetConfig resolve_net(const TrainArgs& a, NetConfig cfg) {
  if (a.levels) cfg.levels = *a.levels;
  if (a.base_channels) cfg.base_channels = *a.base_channels;
  if (a.norm) cfg.norm = norm_from_string(*a.norm);
  cfg.validate();
  return cfg;
}

TrainConfig resolve_train(const TrainArgs& a, TrainConfig base) {
  TrainConfig tc = train_config_from_json(load_config_file(a.config), base);
  if (a.seed) tc.seed = *a.seed;
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.cache_scenes) tc.cache_scenes = true;
  if (a.all_windows) tc.all_windows = true;
  if (a.attention_mode) tc.attention_mode = attention_mode_from_string(*a.attention_mode);
  tc.validate();
  return tc;
}

void run_train_mbs(const TrainArgs& a) {
  const fs::path root = data_root_or_env(a.data);
  const DatasetManifest man = load_manifest(root);
  const NetConfig net = resolve_net(a, mbs_net_config());
  const TrainConfig tc = resolve_train(a, mbs_train_defaults());
  Json resolved{{"net", net_config_to_json(net)}, {"train", train_config_to_json(tc)}};
  echo_config(resolved);
  const TrainResult res = train_mbsnet<float>(man, net, tc, a.out);
  write_run_manifest(a.out, "train-mbs", resolved, tc.seed,
                     Json{{"manifest", input_entry(root / "manifest.json")}});
  std::cout << "trained " << res.steps << " steps, final loss " << res.final_loss << ", model "
            << res.checkpoint.string() << "\n";
}

void run_train_asp(const TrainArgs& a) {
  const fs::path root = data_root_or_env(a.data);
  const DatasetManifest man = load_manifest(root);
  Checkpoint<float> frozen = load_model_checked(a.frozen_mbs, 3, kMbsClasses, "boundary model");
  const NetConfig net = resolve_net(a, asp_net_config());
  const TrainConfig tc = resolve_train(a, asp_train_defaults());
  Json resolved{{"net", net_config_to_json(net)}, {"train", train_config_to_json(tc)}};
  echo_config(resolved);
  const TrainResult res = train_aspnet<float>(man, net, *frozen.model, tc, a.out);
  write_run_manifest(a.out, "train-asp", resolved, tc.seed,
                     Json{{"manifest", input_entry(root / "manifest.json")},
                          {"frozen_mbs", input_entry(a.frozen_mbs)}});
  std::cout << "trained " << res.steps << " steps, final loss " << res.final_loss << ", model "
            << res.checkpoint.string() << "\n";
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string task, data, out, split = "test", frozen_mbs, attention_mode = "center";
  std::vector<std::string> models;  // "name=path" or bare path
  int attention_k = 3;
  bool one_layer = false;
  std::size_t limit = 0;
};

void run_eval(const EvalArgs& a) {
  const fs::path root = data_root_or_env(a.data);
  const DatasetManifest man = load_manifest(root);
  const Split split = split_from_string(a.split);
  if (a.models.empty()) throw ConfigError("eval: at least one --model is required");

  std::vector<std::string> names;
  std::vector<fs::path> paths;
  for (const std::string& m : a.models) {
    const auto eq = m.find('=');
    if (eq == std::string::npos) {
      names.push_back(fs::path(m).stem().string());
      paths.emplace_back(m);
    } else {
      names.push_back(m.substr(0, eq));
      paths.emplace_back(m.substr(eq + 1));
    }
  }

  EvalAttention att;
  att.mode = attention_mode_from_string(a.attention_mode);
  att.k = a.attention_k;

  Json resolved{{"task", a.task},
                {"split", a.split},
                {"attention_mode", a.attention_mode},
                {"attention_k", a.attention_k},
                {"all_layers", !a.one_layer},
                {"limit", a.limit}};
  echo_config(resolved);
  const fs::path out_dir = a.out;
  fs::create_directories(out_dir);

  Json inputs{{"manifest", input_entry(root / "manifest.json")}};
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    EvalReport r;
    if (a.task == "mbs") {
      Checkpoint<float> ck = load_model_checked(paths[i], 3, kMbsClasses, "boundary model");
      r = evaluate_mbs(*ck.model, man, split, a.limit);
    } else if (a.task == "asp") {
      Checkpoint<float> frozen =
          load_model_checked(a.frozen_mbs, 3, kMbsClasses, "boundary model");
      Checkpoint<float> ck = load_model_checked(paths[i], 5, kAspClasses, "surface model");
      r = evaluate_asp(*ck.model, *frozen.model, man, split, att, !a.one_layer, a.limit);
    } else {
      throw ConfigError("eval: task must be mbs or asp");
    }
    reports.push_back(r);
    save_json(out_dir / (names[i] + "_report.json"), eval_report_to_json(r));
    write_png(out_dir / (names[i] + "_matrix.png"), matrix_heatmap(r.cm));
    inputs["model_" + names[i]] = input_entry(paths[i]);
    std::cout << names[i] << ": " << r.cm.total() << " pixels";
    for (int c = 0; c < r.cm.k; ++c) {
      const auto rec = r.cm.recall(c);
      std::cout << " r" << c << "=" << (rec ? std::to_string(*rec).substr(0, 5) : "n/a");
    }
    std::cout << "\n";
  }
  if (reports.size() > 1) {
    const Comparison cmp = compare_models(names, reports);
    save_json(out_dir / "comparison.json", cmp.table);
    std::ofstream csv(out_dir / "comparison.csv", std::ios::trunc);
    csv << cmp.csv;
  }
  if (!a.frozen_mbs.empty()) inputs["frozen_mbs"] = input_entry(a.frozen_mbs);
  write_run_manifest(a.out, "eval", resolved, 0, inputs);
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string task = "mbs", model, frozen_mbs, scene, frames, out;
  std::string attention_mode = "center";
  int attention_k = 3;
  int layer = 0;
};

void write_labels_and_overlays(const fs::path& out, const std::string& stem,
                               const std::vector<Mask>& labels,
                               const std::vector<const RgbU8*>& frames,
                               const std::vector<OverlayColor>& colors) {
  std::unique_ptr<GifWriter> gif;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu.png", stem.c_str(), i);
    write_png(out / buf, labels[i]);
    const RgbU8 ov = overlay_labels(*frames[i], labels[i], colors);
    std::snprintf(buf, sizeof buf, "%s_overlay_%03zu.png", stem.c_str(), i);
    write_png(out / buf, ov);
    if (!gif) gif = std::make_unique<GifWriter>(out / (stem + ".gif"), ov.w, ov.h);
    gif->add_frame(ov);
  }
  if (gif) gif->finish();
}

// Center crop to the largest size the net accepts; external footage rarely
// arrives in multiples of the pooling factor.
void crop_to_divisor(FrameSequence& seq, int div, bool& cropped) {
  const int h = seq.rgb[0].h, w = seq.rgb[0].w;
  const int ch = (h / div) * div, cw = (w / div) * div;
  cropped = ch != h || cw != w;
  if (!cropped) return;
  if (ch == 0 || cw == 0)
    throw DataError("frames are smaller than the pooling factor " + std::to_string(div));
  const int y0 = (h - ch) / 2, x0 = (w - cw) / 2;
  for (std::size_t i = 0; i < seq.rgb.size(); ++i) {
    RgbU8 r(ch, cw, 3);
    GrayU8 g(ch, cw, 1);
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        for (int c = 0; c < 3; ++c)
          r.v[(static_cast<std::size_t>(y) * cw + x) * 3 + c] =
              seq.rgb[i].v[(static_cast<std::size_t>(y + y0) * w + (x + x0)) * 3 + c];
        g.v[static_cast<std::size_t>(y) * cw + x] =
            seq.luma[i].v[static_cast<std::size_t>(y + y0) * w + (x + x0)];
      }
    seq.rgb[i] = std::move(r);
    seq.luma[i] = std::move(g);
  }
}

std::vector<Mask> mbs_predict_masks(R21UNet<float>& model, const std::vector<RgbU8>& rgb) {
  const Tensor<float> x = rgb_window_tensor<float>(rgb, 0, static_cast<int>(rgb.size()));
  const Tensor<float> prob = predict_sequence(model, x);
  std::vector<Mask> out;
  for (int t = 0; t < prob.t; ++t) out.push_back(argmax_frame(prob, t));
  return out;
}

void run_predict(const PredictArgs& a) {
  fs::create_directories(a.out);
  Json inputs{{"model", input_entry(a.model)}};
  Json resolved{{"task", a.task}};

  if (a.task == "mbs") {
    Checkpoint<float> ck = load_model_checked(a.model, 3, kMbsClasses, "boundary model");
    FrameSequence seq;
    std::uint64_t seed = 0;
    if (!a.scene.empty()) {
      const SceneContent c = read_scene(a.scene);
      seq = c.frames;
      seed = c.spec.seed;
      inputs["scene"] = input_entry(fs::path(a.scene) / "spec.json");
    } else if (!a.frames.empty()) {
      bool cropped = false;
      IngestResult ing = ingest_external_frames(a.frames, ck.config.temporal_window());
      seq = std::move(ing.frames);
      crop_to_divisor(seq, ck.config.spatial_divisor(), cropped);
      resolved["cropped"] = cropped;
      inputs["frames"] = Json{{"path", a.frames}};
    } else {
      throw ConfigError("predict: give --scene or --frames");
    }
    echo_config(resolved);
    const std::vector<Mask> masks = mbs_predict_masks(*ck.model, seq.rgb);
    const int off = (ck.config.temporal_window() - 1) / 2;
    std::vector<const RgbU8*> frames;
    for (std::size_t i = 0; i < masks.size(); ++i)
      frames.push_back(&seq.rgb[i + static_cast<std::size_t>(off)]);
    write_labels_and_overlays(a.out, "mbs_pred", masks, frames, kMbsOverlay);
    write_run_manifest(a.out, "predict", resolved, seed, inputs);
    std::cout << "wrote " << masks.size() << " boundary maps to " << a.out << "\n";
    return;
  }

  if (a.task != "asp") throw ConfigError("predict: task must be mbs or asp");
  if (a.scene.empty()) throw ConfigError("predict: surface prediction needs --scene");
  Checkpoint<float> frozen = load_model_checked(a.frozen_mbs, 3, kMbsClasses, "boundary model");
  Checkpoint<float> ck = load_model_checked(a.model, 5, kAspClasses, "surface model");
  const SceneContent c = read_scene(a.scene);
  if (a.layer < 0 || a.layer >= static_cast<int>(c.spec.layers.size()))
    throw ConfigError("predict: layer " + std::to_string(a.layer) + " out of range, scene has " +
                      std::to_string(c.spec.layers.size()) + " layers");
  inputs["scene"] = input_entry(fs::path(a.scene) / "spec.json");
  inputs["frozen_mbs"] = input_entry(a.frozen_mbs);
  resolved["layer"] = a.layer;
  resolved["attention_mode"] = a.attention_mode;
  resolved["attention_k"] = a.attention_k;
  echo_config(resolved);

  const int mbs_win = frozen.config.temporal_window();
  const int asp_win = ck.config.temporal_window();
  const int mbs_off = (mbs_win - 1) / 2;
  const int n_m = static_cast<int>(c.frames.rgb.size()) - mbs_win + 1;
  const int nw = n_m - asp_win + 1;
  if (nw < 1)
    throw DataError("scene has too few frames for stacked windows (" +
                    std::to_string(c.frames.rgb.size()) + ")");

  const Tensor<float> preds = mbs_prob_to_channels(predict_sequence(
      *frozen.model,
      rgb_window_tensor<float>(c.frames.rgb, 0, static_cast<int>(c.frames.rgb.size()))));
  const AttentionSequence att = make_attention(
      c.spec, a.layer, attention_mode_from_string(a.attention_mode), a.attention_k,
      JitterConfig{0.0, 0.0}, derive_seed(c.spec.seed, {0xE7A77ull, std::uint64_t(a.layer)}));
  const Tensor<float> att_t = heat_window_tensor<float>(att.heat, mbs_off, n_m);

  std::vector<Mask> asp_masks;
  std::vector<const RgbU8*> frames;
  std::vector<RgbU8> grid_rows;
  for (int w = 0; w < nw; ++w) {
    const Tensor<float> x = stack_asp_inputs(
        luma_window_tensor<float>(c.frames.luma, mbs_off + w, asp_win),
        time_slice(preds, w, asp_win), time_slice(att_t, w, asp_win));
    const Tensor<float> prob = ck.model->forward(x, false);
    asp_masks.push_back(argmax_frame(prob, 0));
    const int orig = w + mbs_off + (asp_win - 1) / 2;  // frame the output describes
    frames.push_back(&c.frames.rgb[static_cast<std::size_t>(orig)]);

    const int pred_idx = w + (asp_win - 1) / 2;
    GrayF mbs_any(preds.h, preds.w, 1);
    const std::size_t plane = preds.plane();
    for (std::size_t i = 0; i < plane; ++i) {
      const float s = preds.frame(pred_idx)[i] + preds.frame(pred_idx)[plane + i] +
                      preds.frame(pred_idx)[2 * plane + i];
      mbs_any.v[i] = std::min(1.0f, s);
    }
    GridRowInput row;
    row.frame = frames.back();
    row.attention = &att.heat[static_cast<std::size_t>(orig)];
    row.luma = &c.frames.luma[static_cast<std::size_t>(orig)];
    const Mask mbs_mask = mbs_channels_argmax(preds, pred_idx);
    row.mbs_pred = &mbs_mask;
    row.mbs_gt = &c.mbs.labels[static_cast<std::size_t>(orig)];
    row.mbs_any = &mbs_any;
    row.asp_gt = &c.asp[static_cast<std::size_t>(a.layer)].labels[static_cast<std::size_t>(orig)];
    row.asp_pred = &asp_masks.back();
    grid_rows.push_back(render_grid_row(row));
  }
  write_labels_and_overlays(a.out, "asp_pred", asp_masks, frames, kAspOverlay);
  for (std::size_t i = 0; i < grid_rows.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "grid_%03zu.png", i);
    write_png(fs::path(a.out) / buf, grid_rows[i]);
  }
  write_run_manifest(a.out, "predict", resolved, c.spec.seed, inputs);
  std::cout << "wrote " << asp_masks.size() << " surface maps to " << a.out << "\n";
}

// ----------------------------------------------------------------- ingest

struct IngestArgs {
  std::string dir, model, out;
};

void run_ingest(const IngestArgs& a) {
  Checkpoint<float> ck = load_model_checked(a.model, 3, kMbsClasses, "boundary model");
  IngestResult ing = ingest_external_frames(a.dir, ck.config.temporal_window());
  bool cropped = false;
  crop_to_divisor(ing.frames, ck.config.spatial_divisor(), cropped);
  Json resolved{{"frames", static_cast<int>(ing.frames.rgb.size())}, {"cropped", cropped}};
  echo_config(resolved);
  fs::create_directories(a.out);
  const std::vector<Mask> masks = mbs_predict_masks(*ck.model, ing.frames.rgb);
  const int off = (ck.config.temporal_window() - 1) / 2;
  std::vector<const RgbU8*> frames;
  for (std::size_t i = 0; i < masks.size(); ++i)
    frames.push_back(&ing.frames.rgb[i + static_cast<std::size_t>(off)]);
  write_labels_and_overlays(a.out, "mbs_pred", masks, frames, kMbsOverlay);
  write_run_manifest(a.out, "ingest", resolved, 0,
                     Json{{"model", input_entry(a.model)}, {"frames", Json{{"path", a.dir}}}});
  std::cout << "wrote " << masks.size() << " boundary maps to " << a.out << "\n";
}

// ----------------------------------------------------------------- render

struct RenderArgs {
  std::string config, spec, out;
  std::uint64_t seed = 0;
};

void run_render(const RenderArgs& a) {
  SceneSpec spec;
  Json resolved;
  if (!a.spec.empty()) {
    spec = scene_from_json(load_json(a.spec));
    resolved = Json{{"spec", a.spec}};
  } else {
    GenConfig gc;
    const Json cj = load_config_file(a.config);
    if (!cj.empty()) gc = gen_config_from_json(cj);
    spec = sample_scene(a.seed, gc, ShapeLibrary::builtin());
    resolved = gen_config_to_json(gc);
  }
  echo_config(resolved);
  const SceneContent content = materialize_scene(spec);
  write_scene(fs::path(a.out) / "scene", content);

  std::unique_ptr<GifWriter> gif;
  for (std::size_t t = 0; t < content.frames.rgb.size(); ++t) {
    const RgbU8 ov = overlay_labels(content.frames.rgb[t], content.mbs.labels[t], kMbsOverlay);
    char buf[32];
    std::snprintf(buf, sizeof buf, "boundary_%03zu.png", t);
    write_png(fs::path(a.out) / buf, ov);
    if (!gif) gif = std::make_unique<GifWriter>(fs::path(a.out) / "scene.gif", ov.w, ov.h);
    gif->add_frame(ov);
  }
  if (gif) gif->finish();
  write_run_manifest(a.out, "render", resolved, spec.seed, Json::object());
  std::cout << "rendered scene " << spec.seed << " (" << content.frames.rgb.size()
            << " frames) to " << a.out << "\n";
}

// ------------------------------------------------------- demo-multiobject

struct DemoArgs {
  std::string scene, model, frozen_mbs, out;
  std::string attention_mode = "center";
  int attention_k = 3;
};

void run_demo(const DemoArgs& a) {
  Checkpoint<float> frozen = load_model_checked(a.frozen_mbs, 3, kMbsClasses, "boundary model");
  Checkpoint<float> ck = load_model_checked(a.model, 5, kAspClasses, "surface model");
  const SceneContent c = read_scene(a.scene);
  const int n_layers = static_cast<int>(c.spec.layers.size());
  Json resolved{{"attention_mode", a.attention_mode},
                {"attention_k", a.attention_k},
                {"layers", n_layers}};
  echo_config(resolved);
  fs::create_directories(a.out);

  const int mbs_win = frozen.config.temporal_window();
  const int asp_win = ck.config.temporal_window();
  const int mbs_off = (mbs_win - 1) / 2;
  const int n_m = static_cast<int>(c.frames.rgb.size()) - mbs_win + 1;
  const int nw = n_m - asp_win + 1;
  if (nw < 1) throw DataError("scene has too few frames for stacked windows");
  const Tensor<float> preds = mbs_prob_to_channels(predict_sequence(
      *frozen.model,
      rgb_window_tensor<float>(c.frames.rgb, 0, static_cast<int>(c.frames.rgb.size()))));

  // Per output frame: one row per layer of [attention | prediction overlay],
  // every row driven by the same frames; only the attention cue changes.
  std::vector<std::vector<RgbU8>> rows(static_cast<std::size_t>(nw));
  for (int layer = 0; layer < n_layers; ++layer) {
    const AttentionSequence att = make_attention(
        c.spec, layer, attention_mode_from_string(a.attention_mode), a.attention_k,
        JitterConfig{0.0, 0.0}, derive_seed(c.spec.seed, {0xE7A77ull, std::uint64_t(layer)}));
    const Tensor<float> att_t = heat_window_tensor<float>(att.heat, mbs_off, n_m);
    for (int w = 0; w < nw; ++w) {
      const Tensor<float> x = stack_asp_inputs(
          luma_window_tensor<float>(c.frames.luma, mbs_off + w, asp_win),
          time_slice(preds, w, asp_win), time_slice(att_t, w, asp_win));
      const Tensor<float> prob = ck.model->forward(x, false);
      const Mask pred = argmax_frame(prob, 0);
      const int orig = w + mbs_off + (asp_win - 1) / 2;
      rows[static_cast<std::size_t>(w)].push_back(hstack_tiles(
          {heat_to_rgb_image(att.heat[static_cast<std::size_t>(orig)]),
           overlay_labels(c.frames.rgb[static_cast<std::size_t>(orig)], pred, kAspOverlay)}));
    }
  }
  std::unique_ptr<GifWriter> gif;
  for (int w = 0; w < nw; ++w) {
    const RgbU8 panel = vstack_tiles(rows[static_cast<std::size_t>(w)]);
    char buf[32];
    std::snprintf(buf, sizeof buf, "panel_%03d.png", w);
    write_png(fs::path(a.out) / buf, panel);
    if (!gif) gif = std::make_unique<GifWriter>(fs::path(a.out) / "panel.gif", panel.w, panel.h);
    gif->add_frame(panel);
  }
  if (gif) gif->finish();
  write_run_manifest(a.out, "demo-multiobject", resolved, c.spec.seed,
                     Json{{"model", input_entry(a.model)},
                          {"frozen_mbs", input_entry(a.frozen_mbs)},
                          {"scene", input_entry(fs::path(a.scene) / "spec.json")}});
  std::cout << "wrote " << nw << " panels covering " << n_layers << " layers to " << a.out
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layered-scene motion-boundary and attended-surface lab"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "worker thread bound")->capture_default_str();

  GenerateArgs gen;
  auto* sc_gen = app.add_subcommand("generate", "build a scene dataset");
  sc_gen->fallthrough();
  sc_gen->add_option("--config", gen.config, "build config JSON");
  sc_gen->add_option("--seed", gen.seed, "global dataset seed")->capture_default_str();
  sc_gen->add_option("--out", gen.out, "dataset root")->required();
  sc_gen->add_option("--shapes", gen.shapes, "external shape mask directory");

  auto add_train_opts = [](CLI::App* sc, TrainArgs& t) {
    sc->add_option("--config", t.config, "train config JSON");
    sc->add_option("--data", t.data, "dataset root (or OBJN_DATA_ROOT)");
    sc->add_option("--out", t.out, "output directory")->required();
    sc->add_option("--seed", t.seed, "training seed (overrides config)");
    sc->add_option("--epochs", t.epochs, "epoch count override");
    sc->add_option("--batch-size", t.batch_size, "batch size override");
    sc->add_option("--levels", t.levels, "U-Net level count");
    sc->add_option("--base-channels", t.base_channels, "channels at the top level");
    sc->add_option("--norm", t.norm, "normalization: instance, batch, none");
    sc->add_flag("--cache-scenes", t.cache_scenes, "keep decoded scenes in memory");
    sc->add_flag("--all-windows", t.all_windows, "train on every window per scene visit");
  };

  TrainArgs tmbs;
  auto* sc_tm = app.add_subcommand("train-mbs", "train the boundary-sense model");
  sc_tm->fallthrough();
  add_train_opts(sc_tm, tmbs);

  TrainArgs tasp;
  auto* sc_ta = app.add_subcommand("train-asp", "train the attended-surface model");
  sc_ta->fallthrough();
  add_train_opts(sc_ta, tasp);
  sc_ta->add_option("--frozen-mbs", tasp.frozen_mbs, "frozen boundary checkpoint")->required();
  sc_ta->add_option("--attention-mode", tasp.attention_mode,
                    "training cue: center, constellation, both");

  EvalArgs ev;
  auto* sc_ev = app.add_subcommand("eval", "evaluate checkpoints on a split");
  sc_ev->fallthrough();
  sc_ev->add_option("--task", ev.task, "mbs or asp")->required();
  sc_ev->add_option("--model", ev.models, "checkpoint, repeatable, name=path form allowed")
      ->required();
  sc_ev->add_option("--data", ev.data, "dataset root (or OBJN_DATA_ROOT)");
  sc_ev->add_option("--split", ev.split, "train, val or test")->capture_default_str();
  sc_ev->add_option("--out", ev.out, "report directory")->required();
  sc_ev->add_option("--frozen-mbs", ev.frozen_mbs, "frozen boundary checkpoint (asp)");
  sc_ev->add_option("--attention-mode", ev.attention_mode, "center, constellation, both")
      ->capture_default_str();
  sc_ev->add_option("--attention-k", ev.attention_k, "constellation point count")
      ->capture_default_str();
  sc_ev->add_flag("--one-layer", ev.one_layer, "attend one seeded layer per scene, not all");
  sc_ev->add_option("--limit", ev.limit, "cap evaluated scenes (0 = all)");

  PredictArgs pr;
  auto* sc_pr = app.add_subcommand("predict", "run a model over a scene or frame directory");
  sc_pr->fallthrough();
  sc_pr->add_option("--task", pr.task, "mbs or asp")->capture_default_str();
  sc_pr->add_option("--model", pr.model, "checkpoint")->required();
  sc_pr->add_option("--frozen-mbs", pr.frozen_mbs, "frozen boundary checkpoint (asp)");
  sc_pr->add_option("--scene", pr.scene, "scene record directory");
  sc_pr->add_option("--frames", pr.frames, "external PNG frame directory (mbs only)");
  sc_pr->add_option("--layer", pr.layer, "target layer (asp)")->capture_default_str();
  sc_pr->add_option("--attention-mode", pr.attention_mode, "center, constellation, both")
      ->capture_default_str();
  sc_pr->add_option("--attention-k", pr.attention_k, "constellation point count")
      ->capture_default_str();
  sc_pr->add_option("--out", pr.out, "output directory")->required();

  IngestArgs ing;
  auto* sc_in = app.add_subcommand("ingest", "boundary inference on external footage");
  sc_in->fallthrough();
  sc_in->add_option("--dir", ing.dir, "PNG frame directory")->required();
  sc_in->add_option("--model", ing.model, "boundary checkpoint")->required();
  sc_in->add_option("--out", ing.out, "output directory")->required();

  RenderArgs ren;
  auto* sc_re = app.add_subcommand("render", "render one scene with its ground truth");
  sc_re->fallthrough();
  sc_re->add_option("--config", ren.config, "scene generation config JSON");
  sc_re->add_option("--spec", ren.spec, "existing scene spec JSON (skips sampling)");
  sc_re->add_option("--seed", ren.seed, "scene seed")->capture_default_str();
  sc_re->add_option("--out", ren.out, "output directory")->required();

  DemoArgs demo;
  auto* sc_de = app.add_subcommand("demo-multiobject",
                                   "one scene, attention switched across every layer");
  sc_de->fallthrough();
  sc_de->add_option("--scene", demo.scene, "scene record directory")->required();
  sc_de->add_option("--model", demo.model, "surface checkpoint")->required();
  sc_de->add_option("--frozen-mbs", demo.frozen_mbs, "frozen boundary checkpoint")->required();
  sc_de->add_option("--attention-mode", demo.attention_mode, "center, constellation, both")
      ->capture_default_str();
  sc_de->add_option("--attention-k", demo.attention_k, "constellation point count")
      ->capture_default_str();
  sc_de->add_option("--out", demo.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    job_count() = std::max(1, jobs);
    if (sc_gen->parsed()) run_generate(gen);
    if (sc_tm->parsed()) run_train_mbs(tmbs);
    if (sc_ta->parsed()) run_train_asp(tasp);
    if (sc_ev->parsed()) run_eval(ev);
    if (sc_pr->parsed()) run_predict(pr);
    if (sc_in->parsed()) run_ingest(ing);
    if (sc_re->parsed()) run_render(ren);
    if (sc_de->parsed()) run_demo(demo);
  } catch (const ConfigError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error (runtime): " << e.what() << "\n";
    return 4;
  }
  return 0;
}
