#include "hydra/gatekeeper.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <iostream>
#include <set>
#include <thread>

#include "hydra/error.hpp"
#include "hydra/png_io.hpp"
#include "hydra/rng.hpp"

namespace hydra {

GateDecision decide(const ConfidenceVector& confidences, const ThresholdTable& table,
                    const std::vector<std::string>& alarm_classes) {
  if (confidences.empty()) fail(ErrorCode::ClassMismatch, "empty confidence vector");
  std::set<std::string> vector_classes;
  for (const auto& e : confidences) vector_classes.insert(e.class_name);
  std::set<std::string> table_classes;
  for (const auto& [c, _] : table.entries) table_classes.insert(c);
  if (vector_classes != table_classes || vector_classes.size() != confidences.size())
    fail(ErrorCode::ClassMismatch, "confidence vector and threshold table disagree on classes");

  const auto& top = confidences[argmax(confidences)];
  if (std::find(alarm_classes.begin(), alarm_classes.end(), top.class_name) ==
      alarm_classes.end())
    return {Decision::Ok, {}};
  if (top.probability >= table.threshold(top.class_name))
    return {Decision::Alarm, top.class_name};
  return {Decision::Flagged, top.class_name};
}

void SampleConfig::validate() const {
  if (!(sample_rate >= 0.0 && sample_rate <= 1.0))
    fail(ErrorCode::InvalidArgument, "sample_rate must lie in [0, 1]");
}

bool sample_draw(const SampleConfig& config, ImageId image_id) {
  const std::uint64_t word = mix64(config.seed ^ mix64(std::uint64_t(image_id)));
  return double(word >> 11) * 0x1.0p-53 < config.sample_rate;
}

std::string status_line(const OperationalRecord& rec) {
  char conf[32];
  std::snprintf(conf, sizeof conf, "%.6f", rec.confidence);
  return format_iso_extended(rec.decided_at) + '\t' + std::to_string(rec.image_id) + '\t' +
         rec.plot_type + '\t' + (rec.predicted_class.empty() ? "-" : rec.predicted_class) +
         '\t' + conf + '\t' + std::string(decision_name(rec.decision)) + '\t' +
         (rec.sampled ? "true" : "false");
}

Gatekeeper::Gatekeeper(Catalog& catalog, const BackendRegistry& backends,
                       GatekeeperConfig config)
    : catalog_(catalog),
      backends_(backends),
      config_(std::move(config)),
      snapshot_(std::make_shared<const Snapshot>()) {
  config_.sample.validate();
  if (config_.poll_interval < std::chrono::seconds(1))
    fail(ErrorCode::InvalidArgument, "poll interval must be at least 1 s");
  if (!config_.log_path.empty()) {
    std::error_code ec;
    if (config_.log_path.has_parent_path())
      std::filesystem::create_directories(config_.log_path.parent_path(), ec);
    log_.open(config_.log_path, std::ios::app);
    if (!log_) fail(ErrorCode::IoFailure, "cannot open log " + config_.log_path.string());
  }
}

void Gatekeeper::reload() {
  std::lock_guard lock(snapshot_mu_);
  snapshot_ = std::make_shared<const Snapshot>();
}

std::shared_ptr<const Gatekeeper::LoadedModel> Gatekeeper::model_for(
    const std::string& plot_type) {
  {
    std::lock_guard lock(snapshot_mu_);
    const auto it = snapshot_->find(plot_type);
    if (it != snapshot_->end()) return it->second;
  }
  std::shared_ptr<const LoadedModel> loaded;
  if (const auto id = catalog_.latest_model(plot_type)) {
    const ModelRecord record = catalog_.model(*id);
    auto m = std::make_shared<LoadedModel>();
    m->model_id = *id;
    m->handle = backends_.get(record.backend).load(record.blob);
    if (auto t = catalog_.thresholds(*id)) {
      m->thresholds = std::move(*t);
    } else {
      m->thresholds.model_id = *id;
      for (const auto& c : record.class_names) m->thresholds.entries[c] = 0.0;
    }
    m->alarm_classes = catalog_.class_set(plot_type).alarm_classes;
    loaded = std::move(m);
  }
  std::lock_guard lock(snapshot_mu_);
  auto next = std::make_shared<Snapshot>(*snapshot_);
  (*next)[plot_type] = loaded;
  snapshot_ = std::move(next);
  return loaded;
}

OperationalRecord Gatekeeper::process_image(ImageId image_id) {
  const ImageRef ref = catalog_.image(image_id);
  OperationalRecord rec;
  rec.image_id = image_id;
  rec.plot_type = ref.plot_type;
  rec.sampled = sample_draw(config_.sample, image_id);

  const auto model = model_for(ref.plot_type);
  if (!model) {
    rec.decision = Decision::NoModel;
    rec.note = "no trained model for plot type";
  } else {
    rec.model_id = model->model_id;
    try {
      rec.confidence_vector = model->handle->infer(read_file(catalog_.resolve_path(image_id)));
      const auto& top = rec.confidence_vector[argmax(rec.confidence_vector)];
      rec.predicted_class = top.class_name;
      rec.confidence = top.probability;
      const GateDecision d = decide(rec.confidence_vector, model->thresholds,
                                    model->alarm_classes);
      rec.decision = d.kind;
      rec.decision_class = d.class_name;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CorruptImage && e.code() != ErrorCode::IoFailure) throw;
      rec.confidence_vector.clear();
      rec.predicted_class.clear();
      rec.confidence = 0.0;
      rec.decision = Decision::NoModel;
      rec.note = std::string(e.name()) + ": " + e.what();
    }
  }
  rec.decided_at = catalog_.now();
  rec = catalog_.insert_operational(std::move(rec));
  append_log(rec);
  return rec;
}

std::vector<OperationalRecord> Gatekeeper::poll_once(const std::vector<std::string>& root_ids) {
  reload();
  std::vector<OperationalRecord> out;
  for (const auto& root : root_ids) {
    try {
      catalog_.scan(root);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RootUnreachable && e.code() != ErrorCode::UnknownRoot) throw;
      log_warning(std::string(e.name()) + ": " + e.what() + " (retrying next poll)");
      continue;
    }
    for (const auto& ref : catalog_.unprocessed_images(root))
      out.push_back(process_image(ref.image_id));
  }
  return out;
}

void Gatekeeper::watch(const std::vector<std::string>& root_ids, std::stop_token stop,
                       const std::function<void(const OperationalRecord&)>& on_record) {
  std::mutex mu;
  std::condition_variable_any cv;
  while (!stop.stop_requested()) {
    const auto started = std::chrono::steady_clock::now();
    for (const auto& rec : poll_once(root_ids)) {
      if (on_record) on_record(rec);
    }
    std::unique_lock lock(mu);
    cv.wait_until(lock, stop, started + config_.poll_interval, [] { return false; });
  }
  std::lock_guard lock(log_mu_);
  if (log_.is_open()) log_.flush();
}

std::vector<StatusEntry> Gatekeeper::latest_status() const {
  std::vector<StatusEntry> out;
  for (const auto& rec : catalog_.latest_per_plot_type()) {
    out.push_back({rec.plot_type, rec.image_id, rec.predicted_class, rec.confidence,
                   rec.decision, rec.decided_at, rec.decision == Decision::Alarm});
  }
  return out;
}

std::vector<OperationalRecord> Gatekeeper::trailing_view(std::chrono::seconds window) const {
  if (window <= std::chrono::seconds(0))
    fail(ErrorCode::InvalidArgument, "window must be positive");
  const Timestamp now = catalog_.now();
  OperationalQuery q;
  q.decided_range = {now - window.count(), now};
  q.decisions = {Decision::Alarm, Decision::Flagged};
  q.newest_first = true;
  return catalog_.operational_records(q);
}

std::vector<ImageId> Gatekeeper::sampled_queue() const { return catalog_.sampled_unlabeled(); }

void Gatekeeper::append_log(const OperationalRecord& rec) {
  std::lock_guard lock(log_mu_);
  if (!log_.is_open()) return;
  log_ << status_line(rec) << '\n';
  log_.flush();
}

void Gatekeeper::log_warning(const std::string& message) {
  std::lock_guard lock(log_mu_);
  std::cerr << "hydra: " << message << '\n';
}

}  // namespace hydra
