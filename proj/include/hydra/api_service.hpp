#pragma once

#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "hydra/backend.hpp"
#include "hydra/catalog.hpp"
#include "hydra/classifier.hpp"
#include "hydra/dataset.hpp"
#include "hydra/gatekeeper.hpp"

namespace hydra {

// At most one training run per plot type.
class TrainingGuard {
 public:
  bool try_acquire(const std::string& plot_type);
  void release(const std::string& plot_type);
  bool busy(const std::string& plot_type) const;

 private:
  mutable std::mutex mu_;
  std::set<std::string> running_;
};

struct ApiDefaults {
  TrainConfig train;
  SplitConfig split;
  ClassWeights class_weights;
};

// HTTP/JSON facade. Every handler serializes the matching module operation's
// result. Mutating endpoints and the labeling views need
// `Authorization: Bearer <token>`; /status, /review and image bytes are public.
//
//   GET  /status                         GET  /review?window_hours=24
//   GET  /label/grid?plot_type=&page=&size=
//   GET  /label/queue                    POST /label        {image_id, class}
//   POST /label/range {anchor_id, target_id, class}
//   GET  /images/{id}/thumb              GET  /images/{id}/full
//   GET  /models                         GET  /models/{id}/confusion
//   POST /admin/train {plot_type, config}
//   POST /admin/thresholds {model_id, alarm_classes, target_fpr}
class ApiService {
 public:
  ApiService(Catalog& catalog, const BackendRegistry& backends, Gatekeeper& gatekeeper,
             ApiDefaults defaults = {});
  ~ApiService();

  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  // Serves on a background thread; port 0 binds any free port. Returns the
  // bound port. Throws IoFailure when the address cannot be bound.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

  TrainingGuard& training_guard();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Splits "host:port". Throws ConfigInvalid.
std::pair<std::string, int> parse_bind_addr(const std::string& addr);

}  // namespace hydra
