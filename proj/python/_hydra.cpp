// Python bindings. Results cross the boundary as plain dicts/lists built from
// the same JSON schemas the HTTP API and `hydra --json` emit.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hydra/backend.hpp"
#include "hydra/catalog.hpp"
#include "hydra/config.hpp"
#include "hydra/error.hpp"
#include "hydra/evaluation.hpp"
#include "hydra/gatekeeper.hpp"
#include "hydra/json_io.hpp"
#include "hydra/labeling.hpp"
#include "hydra/synthgen.hpp"
#include "hydra/training.hpp"

namespace py = pybind11;
using namespace hydra;

namespace {

// Leaked on purpose: destroying Python objects after interpreter shutdown
// would touch a finalized runtime.
py::object to_py(const json& j) {
  static const auto* loads = new py::object(py::module_::import("json").attr("loads"));
  return (*loads)(j.dump());
}

json from_py(const py::object& o) {
  static const auto* dumps = new py::object(py::module_::import("json").attr("dumps"));
  return json::parse((*dumps)(o).cast<std::string>());
}

// The reference backend needs no per-call state; one registry serves all.
const BackendRegistry& backends() {
  static const BackendRegistry registry;
  return registry;
}

template <typename F>
auto without_gil(F&& f) {
  py::gil_scoped_release release;
  return f();
}

}  // namespace

PYBIND11_MODULE(_hydra, m) {
  m.doc() = "hydra data quality monitoring core";

  static const auto* hydra_error = new py::exception<Error>(m, "HydraError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // args: (error class name, message)
      PyErr_SetObject(hydra_error->ptr(), py::make_tuple(e.name(), e.what()).ptr());
    }
  });

  py::class_<Catalog>(m, "Catalog")
      .def(py::init<const std::string&>(), py::arg("db_path") = ":memory:")
      .def("add_root",
           [](Catalog& c, const std::string& id, const std::string& base) {
             return to_py(c.add_root(id, base));
           })
      .def("roots", [](const Catalog& c) { return to_py(c.roots()); })
      .def("scan",
           [](Catalog& c, const std::string& root_id) {
             return to_py(without_gil([&] { return c.scan(root_id); }));
           })
      .def("image_count", &Catalog::image_count)
      .def("image", [](const Catalog& c, ImageId id) { return to_py(c.image(id)); })
      .def("find_image_by_path",
           [](const Catalog& c, const std::filesystem::path& p) -> py::object {
             const auto ref = c.find_image_by_path(p);
             return ref ? to_py(*ref) : py::none();
           })
      .def("resolve_path", &Catalog::resolve_path)
      .def(
          "query_images",
          [](const Catalog& c, std::optional<std::string> plot_type, std::optional<bool> labeled,
             bool descending, std::size_t page_index, std::size_t page_size) {
            ImageQuery q;
            q.plot_type = std::move(plot_type);
            q.labeled = labeled;
            q.descending = descending;
            q.page_index = page_index;
            q.page_size = page_size;
            return to_py(c.query_images(q));
          },
          py::kw_only(), py::arg("plot_type") = py::none(), py::arg("labeled") = py::none(),
          py::arg("descending") = false, py::arg("page_index") = 0, py::arg("page_size") = 0)
      .def("record_label",
           [](Catalog& c, ImageId id, const std::string& cls, const std::string& labeler) {
             return to_py(c.record_label(id, cls, labeler));
           })
      .def("effective_label", &Catalog::effective_label)
      .def("label_count", &Catalog::label_count)
      .def("class_set", [](const Catalog& c, const std::string& pt) { return to_py(c.class_set(pt)); })
      .def("upsert_user", &Catalog::upsert_user, py::arg("user"), py::arg("is_admin") = false)
      .def("add_permission", &Catalog::add_permission)
      .def("issue_token", &Catalog::issue_token)
      .def("models", [](const Catalog& c) { return to_py(c.models()); })
      .def("thresholds", [](const Catalog& c, ModelId id) -> py::object {
        const auto t = c.thresholds(id);
        return t ? to_py(*t) : py::none();
      });

  m.def(
      "generate_corpus",
      [](const std::filesystem::path& base, std::size_t per_class, std::uint64_t seed) {
        const auto entries =
            without_gil([&] { return generate_corpus(base, CorpusOptions::balanced(per_class, seed)); });
        py::list out;
        for (const auto& e : entries)
          out.append(to_py({{"path", e.path.string()},
                            {"class_name", e.class_name},
                            {"fault", fault_name(e.spec.kind)},
                            {"run_number", e.run_number},
                            {"captured_at", e.captured_at}}));
        return out;
      },
      py::arg("base"), py::arg("per_class"), py::arg("seed") = 0,
      "Write a balanced Good/Bad/NoData corpus plus truth.csv under base.");

  m.def(
      "train",
      [](Catalog& c, const std::string& plot_type, const py::dict& train, const py::dict& split,
         bool undersample) {
        TrainingRequest req;
        req.plot_type = plot_type;
        json tj = req.train, sj = req.split;
        tj.merge_patch(from_py(train));
        sj.merge_patch(from_py(split));
        req.train = tj.get<TrainConfig>();
        req.split = sj.get<SplitConfig>();
        req.undersample = undersample;
        const auto out = without_gil([&] { return train_plot_type(c, req); });
        json metrics = out.metrics;
        metrics.erase("epoch_losses");
        return to_py({{"model_id", out.model_id},
                      {"train_rows", out.train_rows},
                      {"validation_rows", out.validation_rows},
                      {"metrics", metrics}});
      },
      py::arg("catalog"), py::arg("plot_type"), py::arg("train") = py::dict(),
      py::arg("split") = py::dict(), py::arg("undersample") = true,
      "Train the reference model; train/split dicts override TrainConfig/SplitConfig fields.");

  m.def("infer_all", [](Catalog& c, ModelId id) {
    return without_gil([&] { return infer_all(c, backends(), id); });
  });
  m.def("calibrate_thresholds",
        [](Catalog& c, ModelId id, const std::vector<std::string>& alarms, double target) {
          return to_py(calibrate_thresholds(c, id, alarms, target));
        },
        py::arg("catalog"), py::arg("model_id"), py::arg("alarm_classes"), py::arg("target_fpr"));
  m.def("replay_fpr", [](const Catalog& c, ModelId id) {
    const auto table = c.thresholds(id);
    if (!table) fail(ErrorCode::InvalidArgument, "model has no threshold table");
    const auto alarms = c.class_set(c.model(id).plot_type).alarm_classes;
    return to_py(replay_fpr(labeled_predictions(c, id), *table, alarms));
  });
  m.def("confusion", [](const Catalog& c, ModelId id) {
    return to_py(confusion_with_confidence(c, id));
  });
  m.def("disagreements", [](const Catalog& c, ModelId id) {
    return to_py(disagreement_report(c, id));
  });

  m.def("unlabeled_grid",
        [](Catalog& c, const std::string& plot_type, std::size_t page, std::size_t size) {
          return to_py(Labeling(c).get_unlabeled_grid(plot_type, page, size));
        },
        py::arg("catalog"), py::arg("plot_type"), py::arg("page") = 0, py::arg("size") = 24);
  m.def("apply_label", [](Catalog& c, const std::string& user, ImageId id, const std::string& cls) {
    return to_py(Labeling(c).apply_label(user, id, cls));
  });
  m.def("apply_range_label", [](Catalog& c, const std::string& user, ImageId anchor,
                                ImageId target, const std::string& cls) {
    return Labeling(c).apply_range_label(user, anchor, target, cls);
  });

  py::class_<Gatekeeper>(m, "Gatekeeper")
      .def(py::init([](Catalog& c, double sample_rate, std::uint64_t seed, int poll_interval_s,
                       std::string log_path) {
             GatekeeperConfig config;
             config.sample = {sample_rate, seed};
             config.sample.validate();
             config.poll_interval = std::chrono::seconds(poll_interval_s);
             config.log_path = log_path;
             return std::make_unique<Gatekeeper>(c, backends(), config);
           }),
           py::arg("catalog"), py::kw_only(), py::arg("sample_rate") = 0.05, py::arg("seed") = 0,
           py::arg("poll_interval_s") = 60, py::arg("log_path") = "",
           py::keep_alive<1, 2>())
      .def("poll_once",
           [](Gatekeeper& g, const std::vector<std::string>& roots) {
             return to_py(without_gil([&] { return g.poll_once(roots); }));
           })
      .def("process_image", [](Gatekeeper& g, ImageId id) { return to_py(g.process_image(id)); })
      .def("reload", &Gatekeeper::reload)
      .def("latest_status", [](const Gatekeeper& g) { return to_py(g.latest_status()); })
      .def(
          "trailing_view",
          [](const Gatekeeper& g, double hours) {
            return to_py(g.trailing_view(
                std::chrono::seconds(static_cast<std::int64_t>(hours * 3600.0))));
          },
          py::arg("window_hours") = 24.0)
      .def("sampled_queue", &Gatekeeper::sampled_queue);

  m.def(
      "load_config",
      [](const std::filesystem::path& path, const std::vector<std::string>& overrides) {
        return to_py(load_config(path, overrides).to_json());
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{});
}
