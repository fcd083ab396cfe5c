#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rescnet/dataset.hpp"
#include "rescnet/features.hpp"
#include "rescnet/filter_bank.hpp"
#include "rescnet/lda.hpp"
#include "rescnet/linalg.hpp"

namespace rescnet {

// ---------------------------------------------------------------------------
// Residual relabeling.
//
// After layer i the network posteriors Y~ are compared with lambda * Y (Y the
// one-hot targets). Each sample is relabeled with the class whose residual
// has the largest magnitude, and the residual's sign there decides whether
// the next layer's posteriors are added to or subtracted from Y~.
// ---------------------------------------------------------------------------

struct ResidualRecord {
  linalg::Matrix residual;  // N x C
  std::vector<int> labels;  // argmax_k |residual(j, k)|
  std::vector<int> signs;   // +1 / -1
};

// lambda * y - y_pred.
linalg::Matrix compute_residual(const linalg::Matrix& y, const linalg::Matrix& y_pred,
                                double lambda);

// Ties in |R| go to the lowest class index. A row that is exactly zero
// keeps its true class with sign +1.
ResidualRecord derive_labels_and_signs(const linalg::Matrix& residual,
                                       std::span<const int> true_labels);

// The classifier pair of one compensation layer. A side without samples has
// no model and predicts all zeros.
struct CompensationModels {
  std::optional<LdaModel> positive;
  std::optional<LdaModel> negative;
  std::size_t n_p = 0;
  std::size_t n_n = 0;
};

// Positive model: positive-sign samples keep their derived labels, every
// negative-sign sample is a pure negative for all classes. The negative
// model mirrors this. When one side holds a single class and the other side
// is empty, that side gets a constant model (zero weights) for its class.
CompensationModels fit_compensation_models(const linalg::Matrix& features,
                                           const ResidualRecord& record,
                                           double ridge = kDefaultRidge);

// prev + alpha * (n_p/N * y_p - n_n/N * y_n), N = n_p + n_n. No clipping.
linalg::Matrix combine_posteriors(const linalg::Matrix& prev, const linalg::Matrix& y_p,
                                  const linalg::Matrix& y_n, std::size_t n_p, std::size_t n_n,
                                  double alpha);

// ---------------------------------------------------------------------------
// Configuration and model.
// ---------------------------------------------------------------------------

struct LrSchedule {
  double alpha0 = 1.0;
  double decay = 0.0;  // fraction removed every `period` layers; 0 keeps alpha constant
  int period = 10;
  double floor = 0.0;
};

// Learning rate of compensation layer `layer` (layers are numbered from 1,
// the first compensation layer is 2):
//   max(alpha0 * (1 - decay)^floor((layer - 2) / period), floor)
double lr_schedule(int layer, const LrSchedule& schedule);

struct TrainConfig {
  double lambda = 0.8;
  LrSchedule lr;
  int max_layers = 10;
  FilterSpec first_filters{FilterKind::pca, 13, 8};
  FilterSpec rest_filters{FilterKind::mixed, 3, 8};
  PoolingSpec pooling;
  PosteriorTransform transform;
  double ridge = kDefaultRidge;
  std::uint64_t seed = 1;
  bool stop_at_zero_train_error = true;
  int patience = 0;  // layers without validation gain before stopping; 0 disables

  // Throws ConfigError naming the first offending key.
  void validate() const;
};

struct CompensationLayer {
  FilterBank filter_bank;
  CompensationModels models;
  double alpha = 1.0;
};

struct ProgressRecord {
  int layer = 0;
  double alpha = 0.0;
  std::size_t n_p = 0;
  std::size_t n_n = 0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;
};

using ProgressSink = std::function<void(const ProgressRecord&)>;

struct ResCNetModel {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  int class_count = 0;
  TrainConfig config;
  FilterBank first_bank;
  LdaModel first_model;
  std::vector<CompensationLayer> compensation;
  std::vector<ProgressRecord> progress;

  std::size_t depth() const { return compensation.size() + 1; }
};

// Posteriors after layer `depth` (1-based), which must be within the model.
struct Prediction {
  std::vector<int> labels;
  linalg::Matrix posteriors;
};

// Replays the layer chain on new images. depth 0 means the whole model.
Prediction predict(const ResCNetModel& model, const Tensor4& images, std::size_t depth = 0);

// Posteriors after every layer, index i holding depth i+1.
std::vector<linalg::Matrix> predict_all_depths(const ResCNetModel& model, const Tensor4& images);

std::vector<int> argmax_rows(const linalg::Matrix& posteriors);
double accuracy(std::span<const int> predicted, std::span<const int> truth);
double evaluate(const ResCNetModel& model, const ImageSet& set);

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

// Owns the per-layer state training needs: current training
// posteriors and the last raw feature maps, for the training set and an
// optional validation set. A session built from an existing model replays
// its chain first, so training can continue where a checkpoint stopped.
class TrainingSession {
 public:
  TrainingSession(ImageSet train, TrainConfig config, std::optional<ImageSet> validation = {});
  TrainingSession(ResCNetModel model, ImageSet train, std::optional<ImageSet> validation = {});

  // Adds one layer (the first call fits layer 1). Returns its progress record.
  const ProgressRecord& add_layer();

  // True once the configured stopping rules fire.
  bool should_stop() const;

  // Adds layers until the model reaches `target_depth` or a stopping rule
  // fires. `on_layer` runs after every added layer.
  void run(std::size_t target_depth, const ProgressSink& on_layer = {});

  const ResCNetModel& model() const { return model_; }
  ResCNetModel& model() { return model_; }
  const linalg::Matrix& train_posteriors() const { return train_.posteriors; }

 private:
  struct SplitState {
    ImageSet set;
    Tensor4 maps;
    linalg::Matrix posteriors;
  };

  void replay();
  std::uint64_t layer_seed(std::size_t layer) const;

  ResCNetModel model_;
  linalg::Matrix targets_;
  SplitState train_;
  std::optional<SplitState> validation_;
};

// Convenience wrapper: a fresh session run to config.max_layers.
ResCNetModel train(const ImageSet& train_set, const TrainConfig& config,
                   const ProgressSink& progress = {},
                   const std::optional<ImageSet>& validation = std::nullopt);

}  // namespace rescnet
