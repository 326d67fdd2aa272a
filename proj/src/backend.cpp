#include "hydra/backend.hpp"

#include "hydra/error.hpp"

namespace hydra {

std::unique_ptr<ModelHandle> SoftmaxBackend::load(
    std::span<const std::uint8_t> blob) const {
  return std::make_unique<SoftmaxHandle>(deserialize_model(blob));
}

ConfidenceVector SoftmaxHandle::infer(std::span<const std::uint8_t> png_bytes) const {
  return predict(params_, preprocess(png_bytes, params_.input_dims));
}

BackendRegistry::BackendRegistry() { add(std::make_shared<SoftmaxBackend>()); }

void BackendRegistry::add(std::shared_ptr<const ClassifierBackend> backend) {
  std::lock_guard lock(mu_);
  auto name = backend->name();
  backends_[std::move(name)] = std::move(backend);
}

const ClassifierBackend& BackendRegistry::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  const auto it = backends_.find(name);
  if (it == backends_.end())
    fail(ErrorCode::BackendUnavailable, "no classifier backend named '" + name + "'");
  return *it->second;
}

bool BackendRegistry::contains(const std::string& name) const {
  std::lock_guard lock(mu_);
  return backends_.count(name) != 0;
}

std::vector<std::string> BackendRegistry::names() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [n, _] : backends_) out.push_back(n);
  return out;
}

}  // namespace hydra
