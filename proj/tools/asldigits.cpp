#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asl/checkpoint.hpp"
#include "asl/config.hpp"
#include "asl/dataset.hpp"
#include "asl/errors.hpp"
#include "asl/image.hpp"
#include "asl/npy.hpp"
#include "asl/train.hpp"

namespace fs = std::filesystem;

namespace {

struct LabeledFile {
  std::string file;
  long long label = -1;
};

std::vector<LabeledFile> read_label_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    asl::raise(asl::ErrorCode::Io,
               "cannot open labels file '" + path.string() + "'");
  }
  std::vector<LabeledFile> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    LabeledFile e;
    if (!(ss >> e.file)) continue;  // blank line
    if (!(ss >> e.label)) {
      asl::raise(asl::ErrorCode::Input,
                 "labels line " + std::to_string(lineno) + ": expected '" +
                     e.file + " <class>'");
    }
    entries.push_back(e);
  }
  return entries;
}

int run_preprocess(const fs::path& in_dir, const fs::path& labels,
                   const fs::path& out_dir) {
  const auto entries = read_label_manifest(labels);
  if (entries.empty()) {
    asl::raise(asl::ErrorCode::Input, "no samples listed in labels file");
  }

  const std::size_t n = entries.size();
  asl::Tensor<float> images(
      asl::Shape{n, std::size_t(64), std::size_t(64)});
  asl::Tensor<float> labels_t(asl::Shape{n, std::size_t(10)});
  std::vector<std::string> failures;

  for (std::size_t i = 0; i < n; ++i) {
    try {
      const fs::path img_path = in_dir / entries[i].file;
      asl::RawImage raw = asl::read_pnm(asl::npy::read_bytes(img_path));
      if (raw.channels == 3) raw = asl::to_grayscale(raw);
      raw = asl::resize(raw, 64);
      const asl::Tensor<float> norm = asl::normalize<float>(raw);
      std::copy(norm.data(), norm.data() + norm.size(),
                images.data() + i * 64 * 64);
      const asl::Tensor<float> onehot =
          asl::one_hot<float>(entries[i].label, 10);
      std::copy(onehot.data(), onehot.data() + 10, labels_t.data() + i * 10);
    } catch (const asl::Error& e) {
      failures.push_back(entries[i].file + ": [" +
                         asl::error_code_name(e.code()) + "] " + e.what());
    }
  }
  if (!failures.empty()) {
    for (const auto& f : failures) std::cerr << "failed: " << f << "\n";
    asl::raise(asl::ErrorCode::Input,
               std::to_string(failures.size()) + " of " + std::to_string(n) +
                   " input files failed");
  }

  fs::create_directories(out_dir);
  asl::npy::write_file(out_dir / "X.npy", images, asl::npy::Dtype::F4);
  asl::npy::write_file(out_dir / "Y.npy", labels_t, asl::npy::Dtype::F4);
  std::cout << "wrote " << (out_dir / "X.npy").string() << " (" << n
            << ", 64, 64) and " << (out_dir / "Y.npy").string() << " (" << n
            << ", 10)\n";
  return 0;
}

template <typename T>
int run_train_typed(const asl::TrainConfig& cfg, const fs::path& x,
                    const fs::path& y, const fs::path& out_dir) {
  const asl::Dataset<T> full = asl::npy::load_dataset<T>(
      asl::npy::read_bytes(x), asl::npy::read_bytes(y));
  std::cerr << "loaded " << full.size() << " samples\n";
  const asl::TrainOutcome outcome =
      asl::train_model<T>(cfg, full, out_dir, {}, &std::cerr);
  std::cout << "final_test_accuracy "
            << std::fixed << std::setprecision(6)
            << outcome.final_test_accuracy << "\n";
  std::cout << "metrics " << outcome.metrics_path.string() << "\n";
  std::cout << "checkpoint " << outcome.checkpoint_dir.string() << "\n";
  return 0;
}

int run_train(const fs::path& config, const fs::path& x, const fs::path& y,
              const fs::path& out_dir) {
  const asl::TrainConfig cfg = asl::load_train_config(config);
  cfg.validate();
  if (cfg.precision == "f64") {
    return run_train_typed<double>(cfg, x, y, out_dir);
  }
  return run_train_typed<float>(cfg, x, y, out_dir);
}

template <typename T>
int run_eval_typed(const fs::path& checkpoint, const fs::path& x,
                   const fs::path& y, std::uint64_t seed,
                   double test_fraction) {
  auto [model, meta] = asl::load_checkpoint<T>(checkpoint);
  const asl::Dataset<T> full = asl::npy::load_dataset<T>(
      asl::npy::read_bytes(x), asl::npy::read_bytes(y));
  auto [train_set, test_set] =
      asl::stratified_split(full, test_fraction, seed);
  const asl::EvalReport report = asl::evaluate(model, test_set);
  std::cout << std::fixed << std::setprecision(6);
  std::cout << "test_accuracy " << report.accuracy << "\n";
  for (std::size_t k = 0; k < report.per_class_accuracy.size(); ++k) {
    std::cout << "class " << k << " accuracy "
              << report.per_class_accuracy[k] << " count "
              << report.per_class_counts[k] << "\n";
  }
  return 0;
}

int run_eval(const fs::path& checkpoint, const fs::path& x, const fs::path& y,
             std::uint64_t seed, double test_fraction) {
  if (asl::checkpoint_precision(checkpoint) == "f64") {
    return run_eval_typed<double>(checkpoint, x, y, seed, test_fraction);
  }
  return run_eval_typed<float>(checkpoint, x, y, seed, test_fraction);
}

bool looks_like_npy(const std::vector<std::uint8_t>& bytes) {
  static const std::uint8_t magic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
  return bytes.size() >= 6 && std::equal(magic, magic + 6, bytes.begin());
}

template <typename T>
int run_predict_typed(const fs::path& checkpoint, const fs::path& image) {
  auto [model, meta] = asl::load_checkpoint<T>(checkpoint);
  const std::vector<std::uint8_t> bytes = asl::npy::read_bytes(image);

  asl::Tensor<T> img;
  if (looks_like_npy(bytes)) {
    // A (64, 64) array bypasses the resize pipeline.
    auto [header, t] = asl::npy::parse<T>(bytes);
    if (t.shape() == asl::Shape{64, 64} ||
        t.shape() == asl::Shape{1, 64, 64}) {
      img = asl::reshape(t, asl::Shape{std::size_t(64), std::size_t(64)});
    } else {
      asl::raise(asl::ErrorCode::Shape,
                 "prediction NPY must be (64, 64), got " + t.shape().str());
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double v = static_cast<double>(img[i]);
      if (!(v >= -1e-6 && v <= 1.0 + 1e-6)) {
        asl::raise(asl::ErrorCode::Normalization,
                   "image value " + std::to_string(v) + " outside [0, 1]");
      }
    }
  } else {
    asl::RawImage raw = asl::read_pnm(bytes);
    if (raw.channels == 3) raw = asl::to_grayscale(raw);
    raw = asl::resize(raw, 64);
    img = asl::normalize<T>(raw);
  }

  asl::Tensor<T> batch(
      asl::Shape{std::size_t(1), std::size_t(1), std::size_t(64),
                 std::size_t(64)},
      std::vector<T>(img.data(), img.data() + img.size()));
  const asl::Tensor<T> probs = asl::forward(model, batch, asl::Mode::Eval);

  std::size_t best = 0;
  for (std::size_t k = 1; k < 10; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  std::cout << "class " << best << "\n";
  std::cout << std::fixed << std::setprecision(6);
  for (std::size_t k = 0; k < 10; ++k) {
    std::cout << "prob " << k << " " << probs[k] << "\n";
  }
  return 0;
}

int run_predict(const fs::path& checkpoint, const fs::path& image) {
  if (asl::checkpoint_precision(checkpoint) == "f64") {
    return run_predict_typed<double>(checkpoint, image);
  }
  return run_predict_typed<float>(checkpoint, image);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ASL digit CNN training and inference"};
  app.require_subcommand(1);

  auto* preprocess = app.add_subcommand(
      "preprocess", "Convert labeled PNM photos into X.npy / Y.npy");
  fs::path pre_in, pre_labels, pre_out;
  preprocess->add_option("--in", pre_in, "directory of PGM/PPM images")
      ->required();
  preprocess->add_option("--labels", pre_labels, "file with '<name> <class>' lines")
      ->required();
  preprocess->add_option("--out", pre_out, "output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model on an NPY dataset");
  fs::path tr_config, tr_x, tr_y, tr_out;
  train->add_option("--config", tr_config, "train config file")->required();
  train->add_option("--x", tr_x, "images NPY")->required();
  train->add_option("--y", tr_y, "one-hot labels NPY")->required();
  train->add_option("--out", tr_out, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  fs::path ev_checkpoint, ev_x, ev_y;
  std::uint64_t ev_seed = 1;
  double ev_fraction = 0.2;
  eval->add_option("--checkpoint", ev_checkpoint, "checkpoint directory")
      ->required();
  eval->add_option("--x", ev_x, "images NPY")->required();
  eval->add_option("--y", ev_y, "one-hot labels NPY")->required();
  eval->add_option("--seed", ev_seed, "split seed used for training")
      ->required();
  eval->add_option("--test-fraction", ev_fraction,
                   "test fraction used for training (default 0.2)");

  auto* predict = app.add_subcommand("predict", "Classify a single image");
  fs::path pr_checkpoint, pr_image;
  predict->add_option("--checkpoint", pr_checkpoint, "checkpoint directory")
      ->required();
  predict->add_option("--image", pr_image, "PNM photo or (64, 64) NPY")
      ->required();

  try {
    app.parse(argc, argv);
    if (preprocess->parsed()) return run_preprocess(pre_in, pre_labels, pre_out);
    if (train->parsed()) return run_train(tr_config, tr_x, tr_y, tr_out);
    if (eval->parsed()) return run_eval(ev_checkpoint, ev_x, ev_y, ev_seed, ev_fraction);
    if (predict->parsed()) return run_predict(pr_checkpoint, pr_image);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const asl::Error& e) {
    std::cerr << "error: " << asl::error_code_name(e.code()) << ": "
              << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
