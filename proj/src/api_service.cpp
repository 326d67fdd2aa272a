#include "hydra/api_service.hpp"

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "hydra/error.hpp"
#include "hydra/evaluation.hpp"
#include "hydra/json_io.hpp"
#include "hydra/labeling.hpp"
#include "hydra/png_io.hpp"
#include "hydra/training.hpp"

namespace hydra {

bool TrainingGuard::try_acquire(const std::string& plot_type) {
  std::lock_guard lock(mu_);
  return running_.insert(plot_type).second;
}

void TrainingGuard::release(const std::string& plot_type) {
  std::lock_guard lock(mu_);
  running_.erase(plot_type);
}

bool TrainingGuard::busy(const std::string& plot_type) const {
  std::lock_guard lock(mu_);
  return running_.count(plot_type) != 0;
}

std::pair<std::string, int> parse_bind_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0)
    fail(ErrorCode::ConfigInvalid, "bind address must be host:port: " + addr);
  try {
    std::size_t used = 0;
    const int port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("");
    return {addr.substr(0, colon), port};
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigInvalid, "bad port in bind address: " + addr);
  }
}

namespace {

// Thrown inside handlers for HTTP-level failures that have no module error.
struct HttpError {
  int status;
  std::string error;
  std::string message;
};

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownImage:
    case ErrorCode::UnknownModel:
    case ErrorCode::UnknownPlotType:
    case ErrorCode::UnknownRoot: return 404;
    case ErrorCode::PermissionDenied:
    case ErrorCode::NotAdmin: return 403;
    case ErrorCode::EmptyClass:
    case ErrorCode::ClassTooSmall:
    case ErrorCode::NoLabeledData:
    case ErrorCode::NoValidationData:
    case ErrorCode::NonFiniteLoss: return 422;
    case ErrorCode::IoFailure:
    case ErrorCode::StoreFailure:
    case ErrorCode::BackendUnavailable: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view error,
                const std::string& message) {
  send_json(res, {{"error", error}, {"message", message}}, status);
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object())
    throw HttpError{400, "InvalidArgument", "request body must be a JSON object"};
  return body;
}

template <typename T>
T field(const json& body, const char* name) {
  if (!body.contains(name))
    throw HttpError{400, "InvalidArgument", std::string("missing field: ") + name};
  try {
    return body.at(name).get<T>();
  } catch (const json::exception&) {
    throw HttpError{400, "InvalidArgument", std::string("bad field: ") + name};
  }
}

ImageId path_id(const httplib::Request& req) {
  try {
    return std::stoll(req.matches[1].str());
  } catch (const std::exception&) {
    throw HttpError{404, "UnknownImage", "bad id"};
  }
}

}  // namespace

struct ApiService::Impl {
  Catalog& catalog;
  const BackendRegistry& backends;
  Gatekeeper& gatekeeper;
  ApiDefaults defaults;
  Labeling labeling{catalog};
  TrainingGuard guard;
  httplib::Server server;
  std::thread thread;

  Impl(Catalog& c, const BackendRegistry& b, Gatekeeper& g, ApiDefaults d)
      : catalog(c), backends(b), gatekeeper(g), defaults(std::move(d)) {
    server.new_task_queue = [] { return new httplib::ThreadPool(8); };
    routes();
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Maps module and HTTP errors onto JSON error responses.
  Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.error, e.message);
      } catch (const Error& e) {
        send_error(res, status_for(e.code()), e.name(), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "Internal", e.what());
      }
    };
  }

  std::string authenticate(const httplib::Request& req) const {
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.compare(0, prefix.size(), prefix) != 0)
      throw HttpError{401, "Unauthorized", "missing bearer token"};
    const auto user = catalog.user_for_token(header.substr(prefix.size()));
    if (!user) throw HttpError{401, "Unauthorized", "invalid token"};
    return *user;
  }

  std::string require_admin(const httplib::Request& req) const {
    std::string user = authenticate(req);
    if (!catalog.is_admin(user))
      throw HttpError{403, "NotAdmin", user + " is not an administrator"};
    return user;
  }

  void routes() {
    server.Get("/status", guarded([this](const auto&, auto& res) {
      send_json(res, gatekeeper.latest_status());
    }));

    server.Get("/review", guarded([this](const httplib::Request& req, auto& res) {
      double hours = 24.0;
      if (req.has_param("window_hours")) {
        try {
          hours = std::stod(req.get_param_value("window_hours"));
        } catch (const std::exception&) {
          throw HttpError{400, "InvalidArgument", "window_hours must be a number"};
        }
      }
      if (!(hours > 0.0) || !std::isfinite(hours))
        throw HttpError{400, "InvalidArgument", "window_hours must be positive"};
      const auto window = std::chrono::seconds(std::max<long long>(1, std::llround(hours * 3600)));
      send_json(res, gatekeeper.trailing_view(window));
    }));

    server.Get("/label/grid", guarded([this](const httplib::Request& req, auto& res) {
      authenticate(req);
      if (!req.has_param("plot_type"))
        throw HttpError{400, "InvalidArgument", "plot_type is required"};
      long long page = 0;
      long long size = 24;
      try {
        if (req.has_param("page")) page = std::stoll(req.get_param_value("page"));
        if (req.has_param("size")) size = std::stoll(req.get_param_value("size"));
      } catch (const std::exception&) {
        throw HttpError{400, "InvalidArgument", "page and size must be integers"};
      }
      if (page < 0 || size < 1)
        throw HttpError{400, "InvalidArgument", "page must be >= 0 and size >= 1"};
      send_json(res, labeling.get_unlabeled_grid(req.get_param_value("plot_type"),
                                                 std::size_t(page), std::size_t(size)));
    }));

    server.Get("/label/queue", guarded([this](const httplib::Request& req, auto& res) {
      authenticate(req);
      send_json(res, gatekeeper.sampled_queue());
    }));

    server.Post("/label", guarded([this](const httplib::Request& req, auto& res) {
      const std::string user = authenticate(req);
      const json body = parse_body(req);
      send_json(res, labeling.apply_label(user, field<ImageId>(body, "image_id"),
                                          field<std::string>(body, "class")));
    }));

    server.Post("/label/range", guarded([this](const httplib::Request& req, auto& res) {
      const std::string user = authenticate(req);
      const json body = parse_body(req);
      const std::size_t n = labeling.apply_range_label(
          user, field<ImageId>(body, "anchor_id"), field<ImageId>(body, "target_id"),
          field<std::string>(body, "class"));
      send_json(res, {{"labeled", n}});
    }));

    server.Get(R"(/images/(\d+)/full)", guarded([this](const httplib::Request& req, auto& res) {
      const auto bytes = image_bytes(path_id(req));
      res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
    }));

    server.Get(R"(/images/(\d+)/thumb)", guarded([this](const httplib::Request& req, auto& res) {
      const auto bytes = encode_png(thumbnail(decode_png(image_bytes(path_id(req))), 160));
      res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
    }));

    server.Get("/models", guarded([this](const auto&, auto& res) {
      send_json(res, catalog.models());
    }));

    server.Get(R"(/models/(\d+)/confusion)", guarded([this](const httplib::Request& req, auto& res) {
      send_json(res, confusion_with_confidence(catalog, path_id(req)));
    }));

    server.Post("/admin/train", guarded([this](const httplib::Request& req, auto& res) {
      require_admin(req);
      const json body = parse_body(req);
      TrainingRequest request;
      request.plot_type = field<std::string>(body, "plot_type");
      request.train = defaults.train;
      request.split = defaults.split;
      request.class_weights = defaults.class_weights;
      if (body.contains("config")) {
        const json& cfg = body["config"];
        try {
          if (cfg.contains("train")) {
            json merged = defaults.train;
            merged.update(cfg["train"]);
            request.train = merged.get<TrainConfig>();
          }
          if (cfg.contains("split")) {
            json merged = defaults.split;
            merged.update(cfg["split"]);
            request.split = merged.get<SplitConfig>();
          }
        } catch (const json::exception& e) {
          throw HttpError{400, "InvalidArgument", std::string("bad config: ") + e.what()};
        }
      }
      if (!guard.try_acquire(request.plot_type))
        throw HttpError{409, "TrainingInProgress",
                        "training already running for " + request.plot_type};
      struct Release {
        TrainingGuard& g;
        std::string p;
        ~Release() { g.release(p); }
      } release{guard, request.plot_type};

      const TrainingOutcome outcome = train_plot_type(catalog, request);
      const std::size_t inferred = infer_all(catalog, backends, outcome.model_id);
      json metrics = outcome.metrics;
      metrics.erase("epoch_losses");
      send_json(res, {{"model_id", outcome.model_id},
                      {"metrics", metrics},
                      {"train_rows", outcome.train_rows},
                      {"validation_rows", outcome.validation_rows},
                      {"inferred", inferred}});
    }));

    server.Post("/admin/thresholds", guarded([this](const httplib::Request& req, auto& res) {
      require_admin(req);
      const json body = parse_body(req);
      const auto table = calibrate_thresholds(
          catalog, field<ModelId>(body, "model_id"),
          field<std::vector<std::string>>(body, "alarm_classes"),
          field<double>(body, "target_fpr"));
      gatekeeper.reload();
      send_json(res, table);
    }));
  }

  std::vector<std::uint8_t> image_bytes(ImageId id) {
    const auto path = catalog.resolve_path(id);
    try {
      return read_file(path);
    } catch (const Error&) {
      throw HttpError{404, "IoFailure", "image file missing on disk: " + path.string()};
    }
  }
};

ApiService::ApiService(Catalog& catalog, const BackendRegistry& backends,
                       Gatekeeper& gatekeeper, ApiDefaults defaults)
    : impl_(std::make_unique<Impl>(catalog, backends, gatekeeper, std::move(defaults))) {}

ApiService::~ApiService() { stop(); }

int ApiService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) fail(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiService::listen(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port))
    fail(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  impl_->server.listen_after_bind();
}

void ApiService::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

TrainingGuard& ApiService::training_guard() { return impl_->guard; }

}  // namespace hydra
