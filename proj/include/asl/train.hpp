#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "asl/augment.hpp"
#include "asl/checkpoint.hpp"
#include "asl/config.hpp"
#include "asl/dataset.hpp"
#include "asl/model.hpp"
#include "asl/npy.hpp"
#include "asl/optim.hpp"

namespace asl {

struct MetricsRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double seconds = 0.0;
};

struct EvalReport {
  double mean_loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::size_t> per_class_counts;
  std::vector<double> per_class_accuracy;
};

// Copies samples order[begin..begin+count) into a (count, 1, 64, 64) batch
// and the matching label rows.
template <typename T>
void fill_batch(const Dataset<T>& d, const std::vector<std::size_t>& order,
                std::size_t begin, std::size_t count, Tensor<T>& x,
                Tensor<T>& y) {
  const std::size_t img_row = 64 * 64;
  const std::size_t lab_row = d.num_classes();
  x = Tensor<T>(Shape{count, std::size_t(1), std::size_t(64), std::size_t(64)});
  y = Tensor<T>(Shape{count, lab_row});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t s = order[begin + i];
    std::copy(d.images.data() + s * img_row, d.images.data() + (s + 1) * img_row,
              x.data() + i * img_row);
    std::copy(d.labels.data() + s * lab_row, d.labels.data() + (s + 1) * lab_row,
              y.data() + i * lab_row);
  }
}

// Eval-mode loss, accuracy and per-class accuracy over a whole dataset.
template <typename T>
EvalReport evaluate(const Model<T>& model, const Dataset<T>& data,
                    std::size_t batch_size = 64) {
  const std::size_t n = data.size();
  const std::size_t classes = data.num_classes();
  EvalReport report;
  report.per_class_counts.assign(classes, 0);
  report.per_class_accuracy.assign(classes, 0.0);
  std::vector<std::size_t> correct(classes, 0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));

  double loss_sum = 0.0;
  std::size_t correct_total = 0;
  Tensor<T> x, y;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t count = std::min(batch_size, n - begin);
    fill_batch(data, order, begin, count, x, y);
    const Tensor<T> probs = forward(model, x, Mode::Eval);
    for (std::size_t r = 0; r < count; ++r) {
      const T* prow = probs.data() + r * classes;
      const T* trow = y.data() + r * classes;
      std::size_t pred = 0;
      std::size_t label = 0;
      for (std::size_t k = 1; k < classes; ++k) {
        if (prow[k] > prow[pred]) pred = k;
        if (trow[k] > trow[label]) label = k;
      }
      loss_sum -= std::log(std::max(static_cast<double>(prow[label]), 1e-12));
      ++report.per_class_counts[label];
      if (pred == label) {
        ++correct[label];
        ++correct_total;
      }
    }
  }
  report.mean_loss = loss_sum / static_cast<double>(n);
  report.accuracy =
      static_cast<double>(correct_total) / static_cast<double>(n);
  for (std::size_t k = 0; k < classes; ++k) {
    report.per_class_accuracy[k] =
        report.per_class_counts[k] == 0
            ? 0.0
            : static_cast<double>(correct[k]) /
                  static_cast<double>(report.per_class_counts[k]);
  }
  return report;
}

// Test-only knobs; the CLI always runs with the defaults.
struct TrainHooks {
  std::optional<std::size_t> max_train_samples;
  std::optional<double> stop_at_train_accuracy;
};

struct TrainOutcome {
  std::vector<MetricsRecord> metrics;
  double final_test_accuracy = 0.0;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_dir;
};

inline std::string metrics_to_csv(const std::string& config_text,
                                  const std::vector<MetricsRecord>& rows) {
  std::string out;
  std::size_t start = 0;
  while (start < config_text.size()) {
    std::size_t end = config_text.find('\n', start);
    if (end == std::string::npos) end = config_text.size();
    out += "# " + config_text.substr(start, end - start) + "\n";
    start = end + 1;
  }
  out += "epoch,train_loss,train_acc,test_acc,seconds\n";
  char buf[160];
  for (const MetricsRecord& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.3f\n", r.epoch,
                  r.train_loss, r.train_acc, r.test_acc, r.seconds);
    out += buf;
  }
  return out;
}

// Full training run: stratified split, optional train-side augmentation,
// epochs of seeded-shuffle minibatch AdaDelta, eval-mode accuracy after
// every epoch. Writes metrics.csv and checkpoint/ under out_dir. Row 0 of
// the metrics is the pre-training evaluation, so an epochs = 0 run still
// records the chance-level test accuracy.
template <typename T>
TrainOutcome train_model(TrainConfig cfg, const Dataset<T>& full,
                         const std::filesystem::path& out_dir,
                         const TrainHooks& hooks = {},
                         std::ostream* progress = nullptr) {
  cfg.precision = precision_name<T>();
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  using clock = std::chrono::steady_clock;
  const bool wall = cfg.wall_clock;
  auto since = [wall](clock::time_point t0) {
    if (!wall) return 0.0;
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  auto [train_set, test_set] =
      stratified_split(full, cfg.test_fraction, cfg.seed);

  if (hooks.max_train_samples &&
      *hooks.max_train_samples < train_set.size()) {
    std::vector<std::size_t> keep(train_set.size());
    std::iota(keep.begin(), keep.end(), std::size_t(0));
    Rng rng(mix_seed(cfg.seed, 0x73756273ull));  // subsample stream
    rng.shuffle(keep.begin(), keep.end());
    keep.resize(*hooks.max_train_samples);
    train_set = train_set.gather(keep);
  }

  if (cfg.augment_enabled) {
    AugmentConfig acfg = cfg.augment;
    acfg.seed = cfg.augment_seed ? *cfg.augment_seed : cfg.seed;
    cfg.augment_seed = acfg.seed;  // echo the resolved seed into the header
    train_set = augment_dataset(train_set, acfg);
  }

  Model<T> model = build_architecture<T>(cfg.architecture, cfg.dropout);
  init_parameters(model, cfg.seed);
  AdaDeltaState<T> state = adadelta_init(model.params, cfg.rho, cfg.epsilon);

  std::vector<MetricsRecord> metrics;
  {
    const auto t0 = clock::now();
    const EvalReport tr = evaluate(model, train_set);
    const EvalReport te = evaluate(model, test_set);
    metrics.push_back({0, tr.mean_loss, tr.accuracy, te.accuracy, since(t0)});
    if (progress) {
      *progress << "epoch 0 (baseline): train_loss=" << tr.mean_loss
                << " train_acc=" << tr.accuracy << " test_acc=" << te.accuracy
                << "\n";
    }
  }

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::size_t last_epoch = 0;
  Tensor<T> x, y;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = clock::now();
    std::iota(order.begin(), order.end(), std::size_t(0));
    Rng shuffle_rng(mix_seed(cfg.seed, epoch));
    shuffle_rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - begin);
      fill_batch(train_set, order, begin, count, x, y);
      ForwardCache<T> cache;
      const std::uint64_t drop_seed =
          mix_seed(cfg.seed, (epoch << 20) + batch_index);
      const Tensor<T> probs = forward(model, x, Mode::Train, drop_seed, &cache);
      LossResult<T> res = cross_entropy(probs, y);
      if (!std::isfinite(res.loss.mean_loss)) {
        raise(ErrorCode::Numeric,
              "non-finite loss at epoch " + std::to_string(epoch) +
                  " batch " + std::to_string(batch_index));
      }
      const std::vector<Tensor<T>> grads = backward(model, cache, res.dlogits);
      adadelta_step(model.params, grads, state);
      loss_sum += res.loss.mean_loss * static_cast<double>(count);
      ++batch_index;
    }

    const double train_loss = loss_sum / static_cast<double>(n);
    const EvalReport tr = evaluate(model, train_set);
    const EvalReport te = evaluate(model, test_set);
    metrics.push_back(
        {epoch, train_loss, tr.accuracy, te.accuracy, since(t0)});
    last_epoch = epoch;
    if (progress) {
      *progress << "epoch " << epoch << ": train_loss=" << train_loss
                << " train_acc=" << tr.accuracy << " test_acc=" << te.accuracy
                << " (" << metrics.back().seconds << "s)\n";
    }
    if (hooks.stop_at_train_accuracy &&
        tr.accuracy >= *hooks.stop_at_train_accuracy) {
      break;
    }
  }

  TrainOutcome outcome;
  outcome.metrics = metrics;
  outcome.final_test_accuracy = metrics.back().test_acc;
  outcome.metrics_path = out_dir / "metrics.csv";
  outcome.checkpoint_dir = out_dir / "checkpoint";

  const std::string csv = metrics_to_csv(train_config_to_text(cfg), metrics);
  std::ofstream mf(outcome.metrics_path, std::ios::trunc | std::ios::binary);
  if (!mf) raise(ErrorCode::Io, "cannot write " + outcome.metrics_path.string());
  mf << csv;
  mf.close();

  save_checkpoint(model, CheckpointMeta{cfg.seed, last_epoch},
                  outcome.checkpoint_dir);
  return outcome;
}

}  // namespace asl
