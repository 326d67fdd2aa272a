#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "hydra/classifier.hpp"
#include "hydra/types.hpp"

namespace hydra {

// A loaded, immutable model. infer must be safe to call concurrently.
class ModelHandle {
 public:
  virtual ~ModelHandle() = default;
  virtual const std::vector<std::string>& class_names() const = 0;
  // Throws CorruptImage for undecodable input.
  virtual ConfidenceVector infer(std::span<const std::uint8_t> png_bytes) const = 0;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<ModelHandle> load(std::span<const std::uint8_t> blob) const = 0;
};

inline constexpr const char* kSoftmaxBackend = "softmax-v1";

// Reference backend: preprocess + softmax regression.
class SoftmaxBackend final : public ClassifierBackend {
 public:
  std::string name() const override { return kSoftmaxBackend; }
  std::unique_ptr<ModelHandle> load(std::span<const std::uint8_t> blob) const override;
};

class SoftmaxHandle final : public ModelHandle {
 public:
  explicit SoftmaxHandle(ModelParams params) : params_(std::move(params)) {}
  const std::vector<std::string>& class_names() const override {
    return params_.class_names;
  }
  ConfidenceVector infer(std::span<const std::uint8_t> png_bytes) const override;
  const ModelParams& params() const { return params_; }

 private:
  ModelParams params_;
};

class BackendRegistry {
 public:
  // Starts with the reference backend registered.
  BackendRegistry();

  void add(std::shared_ptr<const ClassifierBackend> backend);
  // Throws BackendUnavailable.
  const ClassifierBackend& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const ClassifierBackend>> backends_;
};

}  // namespace hydra
