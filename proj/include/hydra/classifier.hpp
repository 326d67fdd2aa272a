#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hydra/types.hpp"

namespace hydra {

struct InputDims {
  int width = 64;
  int height = 48;

  std::size_t size() const { return std::size_t(width) * std::size_t(height); }
  friend bool operator==(const InputDims&, const InputDims&) = default;
};

// Row-major grayscale in [0, 1].
struct ImageTensor {
  InputDims dims;
  std::vector<double> pixels;
};

// Decode, convert to luma, bilinear resample (pixel-center aligned), scale to
// [0, 1]. Throws CorruptImage.
ImageTensor preprocess(std::span<const std::uint8_t> png_bytes, InputDims dims);

// Luma raster in [0, 1] at native size; exposed for resampling checks.
ImageTensor luma_of(std::span<const std::uint8_t> png_bytes);
ImageTensor resample_bilinear(const ImageTensor& src, InputDims dims);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 32;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  InputDims input_dims{64, 48};

  void validate() const;
};

// Multinomial logistic regression: K classes over D = width * height pixels.
struct ModelParams {
  std::vector<std::string> class_names;
  std::vector<double> weights;  // K x D, row-major
  std::vector<double> bias;     // K
  InputDims input_dims;

  static ModelParams zeros(std::vector<std::string> class_names, InputDims dims);

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t num_features() const { return input_dims.size(); }
  std::span<const double> row(std::size_t k) const {
    return std::span(weights).subspan(k * num_features(), num_features());
  }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

ConfidenceVector softmax(std::span<const double> logits,
                         const std::vector<std::string>& class_names);

// softmax(W x + b). Throws DimensionMismatch.
ConfidenceVector predict(const ModelParams& params, const ImageTensor& tensor);
ConfidenceVector predict(const ModelParams& params, std::span<const double> features);

struct Example {
  std::span<const double> features;
  std::size_t label = 0;
};

struct Gradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradient gradient;
};

// Mean cross-entropy plus (l2 / 2) * ||W||^2 (bias unregularized), with its
// exact gradient.
LossAndGrad loss_and_grad(const ModelParams& params, std::span<const Example> batch,
                          double l2);

struct TrainMetrics {
  double final_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  int epochs_run = 0;
  std::vector<double> epoch_losses;
};

struct TrainResult {
  ModelParams params;
  TrainMetrics metrics;
};

using EpochLogger = std::function<void(int epoch, double loss)>;

// Seeded mini-batch gradient descent from zero weights. Runs every epoch;
// validation accuracy is reported, never used to stop.
// Throws EmptyClass, NonFiniteLoss.
TrainResult train(std::span<const Example> train_set,
                  std::span<const Example> validation_set,
                  const std::vector<std::string>& class_names,
                  const TrainConfig& config, const EpochLogger& log = {});

double accuracy(const ModelParams& params, std::span<const Example> examples);

// Blob layout: "HYDM", u16 version, u32 header length, JSON header (class
// names, dims, train config), then little-endian f64 weights (row-major) and
// bias.
inline constexpr std::uint16_t kModelFormatVersion = 1;
std::vector<std::uint8_t> serialize_model(const ModelParams& params,
                                          const TrainConfig& config);
ModelParams deserialize_model(std::span<const std::uint8_t> blob,
                              TrainConfig* config = nullptr);

}  // namespace hydra
