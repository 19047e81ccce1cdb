#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "objn/attention/attention.hpp"
#include "objn/core/error.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/core/parallel.hpp"
#include "objn/core/rng.hpp"
#include "objn/datasetio/dataset.hpp"
#include "objn/datasetio/scene_record.hpp"
#include "objn/datasetio/tensors.hpp"
#include "objn/groundtruth/asp.hpp"
#include "objn/groundtruth/mbs.hpp"
#include "objn/net/model.hpp"

namespace objn {

// Row-normalized confusion matrix; rows are ground truth, columns are
// predictions.
struct ConfusionMatrix {
  int k = 0;
  std::vector<long long> counts;  // k*k row-major

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int k_) : k(k_), counts(static_cast<std::size_t>(k_) * k_, 0) {}

  long long& at(int gt, int pred) { return counts[static_cast<std::size_t>(gt) * k + pred]; }
  long long at(int gt, int pred) const { return counts[static_cast<std::size_t>(gt) * k + pred]; }

  void add(const Mask& pred, const Mask& gt) {
    if (pred.h != gt.h || pred.w != gt.w)
      throw RuntimeError("confusion matrix: prediction and ground truth sizes differ");
    for (std::size_t i = 0; i < gt.v.size(); ++i) ++at(gt.v[i], pred.v[i]);
  }

  void merge(const ConfusionMatrix& o) {
    if (o.k != k) throw RuntimeError("confusion matrix: class count mismatch in merge");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  }

  long long total() const {
    long long s = 0;
    for (const long long c : counts) s += c;
    return s;
  }

  long long row_sum(int gt) const {
    long long s = 0;
    for (int p = 0; p < k; ++p) s += at(gt, p);
    return s;
  }

  long long col_sum(int pred) const {
    long long s = 0;
    for (int g = 0; g < k; ++g) s += at(g, pred);
    return s;
  }

  // Rows with no pixels stay all-zero (flagged via zero_rows).
  std::vector<double> normalized() const {
    std::vector<double> out(counts.size(), 0.0);
    for (int g = 0; g < k; ++g) {
      const long long rs = row_sum(g);
      if (rs == 0) continue;
      for (int p = 0; p < k; ++p)
        out[static_cast<std::size_t>(g) * k + p] =
            static_cast<double>(at(g, p)) / static_cast<double>(rs);
    }
    return out;
  }

  std::vector<bool> zero_rows() const {
    std::vector<bool> z(static_cast<std::size_t>(k));
    for (int g = 0; g < k; ++g) z[static_cast<std::size_t>(g)] = row_sum(g) == 0;
    return z;
  }

  // Undefined (no predictions / no ground truth of the class) => nullopt.
  std::optional<double> precision(int c) const {
    const long long cs = col_sum(c);
    if (cs == 0) return std::nullopt;
    return static_cast<double>(at(c, c)) / static_cast<double>(cs);
  }

  std::optional<double> recall(int c) const {
    const long long rs = row_sum(c);
    if (rs == 0) return std::nullopt;
    return static_cast<double>(at(c, c)) / static_cast<double>(rs);
  }
};

inline Json confusion_to_json(const ConfusionMatrix& cm) {
  Json rows = Json::array(), norm = Json::array();
  const std::vector<double> n = cm.normalized();
  for (int g = 0; g < cm.k; ++g) {
    Json r = Json::array(), nr = Json::array();
    for (int p = 0; p < cm.k; ++p) {
      r.push_back(cm.at(g, p));
      nr.push_back(n[static_cast<std::size_t>(g) * cm.k + p]);
    }
    rows.push_back(r);
    norm.push_back(nr);
  }
  Json prec = Json::array(), rec = Json::array();
  for (int c = 0; c < cm.k; ++c) {
    const auto p = cm.precision(c), r = cm.recall(c);
    prec.push_back(p ? Json(*p) : Json(nullptr));
    rec.push_back(r ? Json(*r) : Json(nullptr));
  }
  return Json{{"classes", cm.k}, {"counts", rows},    {"normalized", norm},
              {"precision", prec}, {"recall", rec},   {"total_pixels", cm.total()}};
}

inline ConfusionMatrix confusion_from_json(const Json& j) {
  ConfusionMatrix cm(json_get<int>(j, "classes"));
  const Json& rows = j.at("counts");
  for (int g = 0; g < cm.k; ++g)
    for (int p = 0; p < cm.k; ++p) cm.at(g, p) = rows[g][p].get<long long>();
  return cm;
}

// Attention synthesis used during surface evaluation: one fixed mode, no
// jitter, seeded from the scene so reruns agree.
struct EvalAttention {
  AttentionMode mode = AttentionMode::center;
  int k = 3;  // constellation points when the mode uses them
};

struct EvalReport {
  std::string task;         // "mbs" or "asp"
  std::string dataset_key;  // root:split:seed, used to keep comparisons honest
  std::string split;
  long long scenes = 0;
  ConfusionMatrix cm;
};

inline Json eval_report_to_json(const EvalReport& r) {
  Json j{{"task", r.task},
         {"dataset_key", r.dataset_key},
         {"split", r.split},
         {"scenes", r.scenes}};
  j["matrix"] = confusion_to_json(r.cm);
  return j;
}

inline EvalReport eval_report_from_json(const Json& j) {
  EvalReport r;
  r.task = json_get<std::string>(j, "task");
  r.dataset_key = json_get<std::string>(j, "dataset_key");
  r.split = json_get<std::string>(j, "split");
  r.scenes = json_get<long long>(j, "scenes");
  r.cm = confusion_from_json(j.at("matrix"));
  return r;
}

namespace detail {

inline std::string dataset_key(const DatasetManifest& man, Split s) {
  return man.root.string() + ":" + to_string(s) + ":" + std::to_string(man.global_seed);
}

// Per-thread model clones so parallel per-scene evaluation never shares the
// forward caches of one instance.
template <class S>
class ModelPool {
 public:
  explicit ModelPool(R21UNet<S>& base) : base_(base) {}
  R21UNet<S>& local() {
    if (job_count() <= 1) return base_;
    thread_local std::unordered_map<const ModelPool*, R21UNet<S>*> mine;
    auto it = mine.find(this);
    if (it != mine.end()) return *it->second;
    std::lock_guard<std::mutex> lk(mu_);
    clones_.push_back(clone_model(base_));
    mine[this] = clones_.back().get();
    return *clones_.back();
  }

 private:
  R21UNet<S>& base_;
  std::mutex mu_;
  std::vector<std::unique_ptr<R21UNet<S>>> clones_;
};

}  // namespace detail

// Boundary-sense evaluation: every window of every scene in the split,
// argmax against the center-frame labels.
template <class S>
EvalReport evaluate_mbs(R21UNet<S>& model, const DatasetManifest& man, Split split,
                        std::size_t limit_scenes = 0) {
  const auto& entries = man.split(split);
  if (entries.empty()) throw DataError("evaluate: split " + std::string(to_string(split)) +
                                       " of " + man.root.string() + " is empty");
  const std::size_t n =
      limit_scenes ? std::min(limit_scenes, entries.size()) : entries.size();
  const int win = model.config().temporal_window();

  std::vector<ConfusionMatrix> per_scene(n, ConfusionMatrix(model.config().out_classes));
  detail::ModelPool<S> pool(model);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    R21UNet<S>& m = pool.local();
    const SceneContent c = read_scene(man.scene_dir(split, entries[static_cast<std::size_t>(i)]));
    const int nw = static_cast<int>(c.frames.rgb.size()) - win + 1;
    if (nw < 1)
      throw DataError("scene " + entries[static_cast<std::size_t>(i)].id +
                      " has too few frames for the temporal window");
    ConfusionMatrix& cm = per_scene[static_cast<std::size_t>(i)];
    for (int w = 0; w < nw; ++w) {
      const Tensor<S> x = rgb_window_tensor<S>(c.frames.rgb, w, win);
      const Tensor<S> prob = m.forward(x, false);
      cm.add(argmax_frame(prob, 0), c.mbs.labels[static_cast<std::size_t>(w + (win - 1) / 2)]);
    }
  });

  EvalReport r;
  r.task = "mbs";
  r.dataset_key = detail::dataset_key(man, split);
  r.split = to_string(split);
  r.scenes = static_cast<long long>(n);
  r.cm = ConfusionMatrix(model.config().out_classes);
  for (const auto& cm : per_scene) r.cm.merge(cm);
  return r;
}

// Surface evaluation through the full pipeline: frozen boundary predictions,
// synthesized attention (each layer of each scene in turn), stacked inputs.
template <class S>
EvalReport evaluate_asp(R21UNet<S>& asp_model, R21UNet<S>& mbs_model,
                        const DatasetManifest& man, Split split, const EvalAttention& att_cfg = {},
                        bool all_layers = true, std::size_t limit_scenes = 0) {
  const auto& entries = man.split(split);
  if (entries.empty()) throw DataError("evaluate: split " + std::string(to_string(split)) +
                                       " of " + man.root.string() + " is empty");
  const std::size_t n =
      limit_scenes ? std::min(limit_scenes, entries.size()) : entries.size();
  const int mbs_win = mbs_model.config().temporal_window();
  const int asp_win = asp_model.config().temporal_window();
  const int mbs_off = (mbs_win - 1) / 2;

  std::vector<ConfusionMatrix> per_scene(n, ConfusionMatrix(asp_model.config().out_classes));
  detail::ModelPool<S> asp_pool(asp_model), mbs_pool(mbs_model);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    R21UNet<S>& am = asp_pool.local();
    R21UNet<S>& bm = mbs_pool.local();
    const SceneEntry& ent = entries[static_cast<std::size_t>(i)];
    const SceneContent c = read_scene(man.scene_dir(split, ent));
    const int n_m = static_cast<int>(c.frames.rgb.size()) - mbs_win + 1;
    const int nw = n_m - asp_win + 1;
    if (nw < 1)
      throw DataError("scene " + ent.id + " has too few frames for stacked windows");
    const Tensor<S> preds = mbs_prob_to_channels(
        predict_sequence(bm, rgb_window_tensor<S>(c.frames.rgb, 0,
                                                  static_cast<int>(c.frames.rgb.size()))));
    ConfusionMatrix& cm = per_scene[static_cast<std::size_t>(i)];

    std::vector<int> layers;
    if (all_layers) {
      for (int l = 0; l < static_cast<int>(c.spec.layers.size()); ++l) layers.push_back(l);
    } else {
      Rng r(derive_seed(c.spec.seed, {0xE7A1ull}));
      layers.push_back(static_cast<int>(r.index(c.spec.layers.size())));
    }
    for (const int layer : layers) {
      const AttentionSequence att =
          make_attention(c.spec, layer, att_cfg.mode, att_cfg.k, JitterConfig{0.0, 0.0},
                         derive_seed(c.spec.seed, {0xE7A77ull, static_cast<std::uint64_t>(layer)}));
      const Tensor<S> att_t = heat_window_tensor<S>(att.heat, mbs_off, n_m);
      for (int w = 0; w < nw; ++w) {
        const Tensor<S> x = stack_asp_inputs(
            luma_window_tensor<S>(c.frames.luma, mbs_off + w, asp_win),
            time_slice(preds, w, asp_win), time_slice(att_t, w, asp_win));
        const Tensor<S> prob = am.forward(x, false);
        cm.add(argmax_frame(prob, 0),
               c.asp[static_cast<std::size_t>(layer)]
                   .labels[static_cast<std::size_t>(w + mbs_off + (asp_win - 1) / 2)]);
      }
    }
  });

  EvalReport r;
  r.task = "asp";
  r.dataset_key = detail::dataset_key(man, split);
  r.split = to_string(split);
  r.scenes = static_cast<long long>(n);
  r.cm = ConfusionMatrix(asp_model.config().out_classes);
  for (const auto& cm : per_scene) r.cm.merge(cm);
  return r;
}

struct Comparison {
  Json table;
  std::string csv;
};

// Side-by-side per-class metrics; deltas are against the first report.
inline Comparison compare_models(const std::vector<std::string>& names,
                                 const std::vector<EvalReport>& reports) {
  if (reports.size() < 2 || names.size() != reports.size())
    throw ConfigError("compare_models: need at least two named reports");
  for (const EvalReport& r : reports)
    if (r.dataset_key != reports[0].dataset_key || r.task != reports[0].task)
      throw ConfigError("compare_models: reports come from different splits or tasks");
  const int k = reports[0].cm.k;

  auto val = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  auto num = [](const std::optional<double>& v) { return v ? *v : 0.0; };

  Json models = Json::array();
  std::string csv = "model";
  for (int c = 0; c < k; ++c) csv += ",precision_" + std::to_string(c);
  for (int c = 0; c < k; ++c) csv += ",recall_" + std::to_string(c);
  for (int c = 0; c < k; ++c) csv += ",delta_precision_" + std::to_string(c);
  for (int c = 0; c < k; ++c) csv += ",delta_recall_" + std::to_string(c);
  csv += "\n";

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const ConfusionMatrix& cm = reports[i].cm;
    const ConfusionMatrix& base = reports[0].cm;
    Json prec = Json::array(), rec = Json::array(), dprec = Json::array(), drec = Json::array();
    std::string line = names[i];
    char buf[32];
    auto cell = [&](double v) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      line += buf;
    };
    for (int c = 0; c < k; ++c) {
      prec.push_back(val(cm.precision(c)));
      cell(num(cm.precision(c)));
    }
    for (int c = 0; c < k; ++c) {
      rec.push_back(val(cm.recall(c)));
      cell(num(cm.recall(c)));
    }
    for (int c = 0; c < k; ++c) {
      const double d = num(cm.precision(c)) - num(base.precision(c));
      dprec.push_back(d);
      cell(d);
    }
    for (int c = 0; c < k; ++c) {
      const double d = num(cm.recall(c)) - num(base.recall(c));
      drec.push_back(d);
      cell(d);
    }
    models.push_back(Json{{"name", names[i]},
                          {"precision", prec},
                          {"recall", rec},
                          {"delta_precision", dprec},
                          {"delta_recall", drec}});
    csv += line + "\n";
  }
  Comparison out;
  out.table = Json{{"task", reports[0].task},
                   {"dataset_key", reports[0].dataset_key},
                   {"split", reports[0].split},
                   {"models", models}};
  out.csv = csv;
  return out;
}

}  // namespace objn
