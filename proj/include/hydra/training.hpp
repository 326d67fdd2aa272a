#pragma once

#include <string>

#include "hydra/catalog.hpp"
#include "hydra/classifier.hpp"
#include "hydra/dataset.hpp"

namespace hydra {

struct TrainingRequest {
  std::string plot_type;
  SplitConfig split;
  TrainConfig train;
  ClassWeights class_weights;
  bool undersample = true;
};

struct TrainingOutcome {
  ModelId model_id = 0;
  TrainMetrics metrics;
  std::size_t train_rows = 0;
  std::size_t validation_rows = 0;
};

// Loads each manifest image once and pairs tensors with class indices.
class TensorCache {
 public:
  explicit TensorCache(InputDims dims) : dims_(dims) {}
  const ImageTensor& get(const ManifestRow& row);
  std::vector<Example> examples(const Manifest& manifest,
                                const std::vector<std::string>& class_names);

 private:
  InputDims dims_;
  std::map<ImageId, ImageTensor> tensors_;
};

// Full reference-model pipeline for one plot type; records the model in the
// catalog together with its configs, metrics and validation image ids.
TrainingOutcome train_plot_type(Catalog& catalog, const TrainingRequest& request,
                                const EpochLogger& log = {});

}  // namespace hydra
