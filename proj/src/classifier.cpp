#include "hydra/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hydra/error.hpp"
#include "hydra/png_io.hpp"
#include "hydra/rng.hpp"

namespace hydra {

using json = nlohmann::json;

// ---- preprocessing ---------------------------------------------------------

ImageTensor luma_of(std::span<const std::uint8_t> png_bytes) {
  const RgbImage rgb = decode_png(png_bytes);
  ImageTensor t{{rgb.width, rgb.height}, {}};
  t.pixels.resize(t.dims.size());
  for (std::size_t i = 0; i < t.pixels.size(); ++i) {
    const double r = rgb.pixels[3 * i];
    const double g = rgb.pixels[3 * i + 1];
    const double b = rgb.pixels[3 * i + 2];
    t.pixels[i] = std::clamp((0.299 * r + 0.587 * g + 0.114 * b) / 255.0, 0.0, 1.0);
  }
  return t;
}

ImageTensor resample_bilinear(const ImageTensor& src, InputDims dims) {
  if (dims.width < 1 || dims.height < 1)
    fail(ErrorCode::InvalidArgument, "target dimensions must be positive");
  ImageTensor out{dims, std::vector<double>(dims.size())};
  const int sw = src.dims.width;
  const int sh = src.dims.height;
  const double sx_scale = double(sw) / dims.width;
  const double sy_scale = double(sh) / dims.height;
  for (int y = 0; y < dims.height; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, double(sh - 1));
    const int y0 = int(sy);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double fy = sy - y0;
    for (int x = 0; x < dims.width; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, double(sw - 1));
      const int x0 = int(sx);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double fx = sx - x0;
      const auto at = [&](int yy, int xx) { return src.pixels[std::size_t(yy) * sw + xx]; };
      const double top = at(y0, x0) * (1 - fx) + at(y0, x1) * fx;
      const double bottom = at(y1, x0) * (1 - fx) + at(y1, x1) * fx;
      out.pixels[std::size_t(y) * dims.width + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

ImageTensor preprocess(std::span<const std::uint8_t> png_bytes, InputDims dims) {
  return resample_bilinear(luma_of(png_bytes), dims);
}

// ---- model -----------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning_rate must be positive");
  if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be positive");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be positive");
  if (!(l2 >= 0.0)) fail(ErrorCode::InvalidArgument, "l2 must be non-negative");
  if (input_dims.width < 1 || input_dims.height < 1)
    fail(ErrorCode::InvalidArgument, "input_dims must be positive");
}

ModelParams ModelParams::zeros(std::vector<std::string> class_names, InputDims dims) {
  ModelParams p;
  p.input_dims = dims;
  p.weights.assign(class_names.size() * dims.size(), 0.0);
  p.bias.assign(class_names.size(), 0.0);
  p.class_names = std::move(class_names);
  return p;
}

namespace {

void logits_into(const ModelParams& params, std::span<const double> x,
                 std::span<double> out) {
  const std::size_t d = params.num_features();
  for (std::size_t k = 0; k < params.num_classes(); ++k) {
    const double* w = params.weights.data() + k * d;
    double z = params.bias[k];
    for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
    out[k] = z;
  }
}

// In-place stable softmax; returns log of the normalizer relative to max.
void softmax_inplace(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace

ConfidenceVector softmax(std::span<const double> logits,
                         const std::vector<std::string>& class_names) {
  std::vector<double> p(logits.begin(), logits.end());
  softmax_inplace(p);
  ConfidenceVector out;
  out.reserve(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out.push_back({class_names[k], p[k]});
  return out;
}

ConfidenceVector predict(const ModelParams& params, std::span<const double> features) {
  if (features.size() != params.num_features())
    fail(ErrorCode::DimensionMismatch,
         "expected " + std::to_string(params.num_features()) + " features, got " +
             std::to_string(features.size()));
  std::vector<double> z(params.num_classes());
  logits_into(params, features, z);
  return softmax(z, params.class_names);
}

ConfidenceVector predict(const ModelParams& params, const ImageTensor& tensor) {
  if (!(tensor.dims == params.input_dims))
    fail(ErrorCode::DimensionMismatch,
         "tensor is " + std::to_string(tensor.dims.width) + "x" +
             std::to_string(tensor.dims.height) + ", model expects " +
             std::to_string(params.input_dims.width) + "x" +
             std::to_string(params.input_dims.height));
  return predict(params, std::span<const double>(tensor.pixels));
}

LossAndGrad loss_and_grad(const ModelParams& params, std::span<const Example> batch,
                          double l2) {
  if (batch.empty()) fail(ErrorCode::InvalidArgument, "empty batch");
  const std::size_t k_count = params.num_classes();
  const std::size_t d = params.num_features();
  LossAndGrad out;
  out.gradient.weights.assign(k_count * d, 0.0);
  out.gradient.bias.assign(k_count, 0.0);

  std::vector<double> z(k_count);
  double ce = 0.0;
  const double inv_n = 1.0 / double(batch.size());
  for (const Example& ex : batch) {
    if (ex.features.size() != d)
      fail(ErrorCode::DimensionMismatch, "example feature count mismatch");
    if (ex.label >= k_count) fail(ErrorCode::InvalidArgument, "label out of range");
    logits_into(params, ex.features, z);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    const double log_norm = m + std::log(sum);
    ce += log_norm - z[ex.label];
    for (std::size_t k = 0; k < k_count; ++k) {
      const double residual =
          (std::exp(z[k] - log_norm) - (k == ex.label ? 1.0 : 0.0)) * inv_n;
      if (residual == 0.0) continue;
      out.gradient.bias[k] += residual;
      double* g = out.gradient.weights.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) g[j] += residual * ex.features[j];
    }
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    sq += params.weights[i] * params.weights[i];
    out.gradient.weights[i] += l2 * params.weights[i];
  }
  out.loss = ce * inv_n + 0.5 * l2 * sq;
  return out;
}

double accuracy(const ModelParams& params, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  std::vector<double> z(params.num_classes());
  for (const Example& ex : examples) {
    logits_into(params, ex.features, z);
    // Ties resolve to the lowest index, matching argmax().
    const auto best = std::size_t(std::max_element(z.begin(), z.end()) - z.begin());
    if (best == ex.label) ++correct;
  }
  return double(correct) / double(examples.size());
}

TrainResult train(std::span<const Example> train_set,
                  std::span<const Example> validation_set,
                  const std::vector<std::string>& class_names,
                  const TrainConfig& config, const EpochLogger& log) {
  config.validate();
  if (class_names.empty()) fail(ErrorCode::InvalidArgument, "no classes");
  std::vector<std::size_t> per_class(class_names.size(), 0);
  for (const Example& ex : train_set) {
    if (ex.label >= class_names.size())
      fail(ErrorCode::InvalidArgument, "label out of range");
    ++per_class[ex.label];
  }
  for (std::size_t k = 0; k < class_names.size(); ++k) {
    if (per_class[k] == 0)
      fail(ErrorCode::EmptyClass, "no training examples for class '" + class_names[k] + "'");
  }

  TrainResult result{ModelParams::zeros(class_names, config.input_dims), {}};
  ModelParams& params = result.params;
  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  batch.reserve(std::size_t(config.batch_size));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch.capacity()) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + batch.capacity());
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);
      const LossAndGrad lg = loss_and_grad(params, batch, config.l2);
      if (!std::isfinite(lg.loss))
        fail(ErrorCode::NonFiniteLoss,
             "loss diverged at epoch " + std::to_string(epoch) +
                 "; lower the learning rate");
      epoch_loss += lg.loss * double(batch.size());
      for (std::size_t i = 0; i < params.weights.size(); ++i)
        params.weights[i] -= config.learning_rate * lg.gradient.weights[i];
      for (std::size_t k = 0; k < params.bias.size(); ++k)
        params.bias[k] -= config.learning_rate * lg.gradient.bias[k];
    }
    epoch_loss /= double(order.size());
    result.metrics.epoch_losses.push_back(epoch_loss);
    if (log) log(epoch, epoch_loss);
  }
  for (double w : params.weights) {
    if (!std::isfinite(w)) fail(ErrorCode::NonFiniteLoss, "weights diverged");
  }

  result.metrics.epochs_run = config.epochs;
  result.metrics.final_loss = result.metrics.epoch_losses.back();
  result.metrics.train_acc = accuracy(params, train_set);
  result.metrics.val_acc = accuracy(params, validation_set);
  return result;
}

// ---- serialization ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'H', 'Y', 'D', 'M'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v & 0xff));
  out.push_back(std::uint8_t(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (data_.size() - pos_ < n)
      fail(ErrorCode::InvalidArgument, "truncated model blob");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(std::size_t bytes) {
    std::uint64_t v = 0;
    const auto s = take(bytes);
    for (std::size_t i = 0; i < bytes; ++i) v |= std::uint64_t(s[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelParams& params,
                                          const TrainConfig& config) {
  const json header = {
      {"class_names", params.class_names},
      {"input_dims", {params.input_dims.width, params.input_dims.height}},
      {"train_config",
       {{"learning_rate", config.learning_rate},
        {"epochs", config.epochs},
        {"batch_size", config.batch_size},
        {"l2", config.l2},
        {"seed", config.seed}}},
  };
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u16(out, kModelFormatVersion);
  put_u32(out, std::uint32_t(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (double w : params.weights) put_f64(out, w);
  for (double b : params.bias) put_f64(out, b);
  return out;
}

ModelParams deserialize_model(std::span<const std::uint8_t> blob, TrainConfig* config) {
  Reader r(blob);
  if (!std::equal(kMagic, kMagic + 4, r.take(4).begin()))
    fail(ErrorCode::InvalidArgument, "not a model blob (bad magic)");
  const auto version = r.uint(2);
  if (version != kModelFormatVersion)
    fail(ErrorCode::InvalidArgument, "unsupported model format version " +
                                         std::to_string(version));
  const auto header_len = r.uint(4);
  const auto header_bytes = r.take(header_len);
  ModelParams p;
  try {
    const json header = json::parse(header_bytes.begin(), header_bytes.end());
    const InputDims dims{header.at("input_dims").at(0).get<int>(),
                         header.at("input_dims").at(1).get<int>()};
    if (dims.width < 1 || dims.height < 1)
      fail(ErrorCode::InvalidArgument, "bad model dimensions");
    auto names = header.at("class_names").get<std::vector<std::string>>();
    if (names.empty() ||
        r.remaining() / 8 / names.size() != dims.size() + 1 || r.remaining() % 8 != 0)
      fail(ErrorCode::InvalidArgument, "model blob size does not match its header");
    p = ModelParams::zeros(std::move(names), dims);
    if (config) {
      const auto& tc = header.at("train_config");
      config->learning_rate = tc.at("learning_rate").get<double>();
      config->epochs = tc.at("epochs").get<int>();
      config->batch_size = tc.at("batch_size").get<int>();
      config->l2 = tc.at("l2").get<double>();
      config->seed = tc.at("seed").get<std::uint64_t>();
      config->input_dims = dims;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad model header: ") + e.what());
  }
  for (double& w : p.weights) w = r.f64();
  for (double& b : p.bias) b = r.f64();
  if (!r.done()) fail(ErrorCode::InvalidArgument, "trailing bytes in model blob");
  return p;
}

}  // namespace hydra
