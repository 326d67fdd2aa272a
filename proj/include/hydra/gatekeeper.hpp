#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <vector>

#include "hydra/backend.hpp"
#include "hydra/catalog.hpp"
#include "hydra/types.hpp"

namespace hydra {

struct GateDecision {
  Decision kind = Decision::Ok;
  std::string class_name;  // set for Alarm / Flagged

  friend bool operator==(const GateDecision&, const GateDecision&) = default;
};

// Argmax outside the alarm set -> Ok; alarm argmax at or above its threshold
// -> Alarm; below -> Flagged. Throws ClassMismatch when the table does not
// cover exactly the vector's classes.
GateDecision decide(const ConfidenceVector& confidences, const ThresholdTable& table,
                    const std::vector<std::string>& alarm_classes);

struct SampleConfig {
  double sample_rate = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

// Bernoulli(rate) draw keyed on (seed, image id): reproducible regardless of
// processing order.
bool sample_draw(const SampleConfig& config, ImageId image_id);

struct StatusEntry {
  std::string plot_type;
  ImageId image_id = 0;
  std::string predicted_class;
  double confidence = 0.0;
  Decision decision = Decision::NoModel;
  Timestamp decided_at = 0;
  bool highlight = false;

  friend bool operator==(const StatusEntry&, const StatusEntry&) = default;
};

struct GatekeeperConfig {
  SampleConfig sample;
  std::filesystem::path log_path;  // empty disables the operational log
  std::chrono::seconds poll_interval{60};
};

// Live operation over a catalog. Models and thresholds are cached per plot
// type as one immutable snapshot; reload() swaps the whole snapshot.
class Gatekeeper {
 public:
  Gatekeeper(Catalog& catalog, const BackendRegistry& backends, GatekeeperConfig config);

  // Classifies one registered image and persists the decision to arm B.
  // Throws UnknownImage.
  OperationalRecord process_image(ImageId image_id);

  // One watch cycle: scan each root, then process every image under it that
  // has no operational record yet. Unreachable roots are logged and skipped.
  std::vector<OperationalRecord> poll_once(const std::vector<std::string>& root_ids);

  // Polls until stop is requested. on_record sees each processed image.
  void watch(const std::vector<std::string>& root_ids, std::stop_token stop,
             const std::function<void(const OperationalRecord&)>& on_record = {});

  // Re-reads latest models and threshold tables.
  void reload();

  std::vector<StatusEntry> latest_status() const;
  // Alarm / Flagged records decided within [now - window, now], newest first.
  std::vector<OperationalRecord> trailing_view(
      std::chrono::seconds window = std::chrono::hours(24)) const;
  std::vector<ImageId> sampled_queue() const;

  const GatekeeperConfig& config() const { return config_; }

 private:
  struct LoadedModel {
    ModelId model_id = 0;
    std::shared_ptr<const ModelHandle> handle;
    ThresholdTable thresholds;
    std::vector<std::string> alarm_classes;
  };
  using Snapshot = std::map<std::string, std::shared_ptr<const LoadedModel>>;

  std::shared_ptr<const LoadedModel> model_for(const std::string& plot_type);
  void append_log(const OperationalRecord& rec);
  void log_warning(const std::string& message);

  Catalog& catalog_;
  const BackendRegistry& backends_;
  GatekeeperConfig config_;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const Snapshot> snapshot_;

  std::mutex log_mu_;
  std::ofstream log_;
};

std::string status_line(const OperationalRecord& rec);

}  // namespace hydra
