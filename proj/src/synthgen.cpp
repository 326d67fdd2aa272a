#include "hydra/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hydra/error.hpp"
#include "hydra/layout.hpp"
#include "hydra/rng.hpp"

namespace hydra {

namespace fs = std::filesystem;

namespace {

// Plot area inside the 320x240 canvas; scaled for other geometries.
struct Frame {
  int x0, y0, cell_w, cell_h;
};

Frame frame_for(const PlotGeometry& g) {
  const int cell_w = std::max(1, (g.width * 9 / 10) / g.grid_cols);
  const int cell_h = std::max(1, (g.height * 9 / 10) / g.grid_rows);
  const int area_w = cell_w * g.grid_cols;
  const int area_h = cell_h * g.grid_rows;
  // Wider left margin leaves room for the axis ticks.
  const int x0 = (g.width - area_w) * 5 / 8;
  const int y0 = (g.height - area_h) / 2;
  return {x0, y0, cell_w, cell_h};
}

double sigma_of(const PlotGeometry& g) {
  return std::hypot(double(g.grid_cols), double(g.grid_rows)) / 3.0;
}

double radius_of(const PlotGeometry& g, int col, int row) {
  return std::hypot(col - (g.grid_cols - 1) / 2.0, row - (g.grid_rows - 1) / 2.0);
}

// Black -> red -> yellow -> white; luma is monotonic in v.
void hot_color(double v, std::uint8_t* rgb) {
  const auto channel = [](double x) {
    return std::uint8_t(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
  };
  rgb[0] = channel(3.0 * v);
  rgb[1] = channel(3.0 * v - 1.0);
  rgb[2] = channel(3.0 * v - 2.0);
}

constexpr std::uint8_t kFrameGray = 90;
// Counts mapped to full scale; leaves headroom above the peak for pedestals.
constexpr double kFullScale = 1.5 * kPeakRate;

}  // namespace

std::string class_for(FaultKind kind) {
  switch (kind) {
    case FaultKind::None: return "Good";
    case FaultKind::Blank: return "NoData";
    case FaultKind::HalfColumnsDead:
    case FaultKind::PedestalNoise: return "Bad";
  }
  return "Bad";
}

std::string fault_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::None: return "None";
    case FaultKind::HalfColumnsDead: return "HalfColumnsDead";
    case FaultKind::PedestalNoise: return "PedestalNoise";
    case FaultKind::Blank: return "Blank";
  }
  return "None";
}

double occupancy_rate(const PlotGeometry& g, int col, int row) {
  const double r = radius_of(g, col, row);
  const double s = sigma_of(g);
  return kPeakRate * std::exp(-(r * r) / (2.0 * s * s));
}

bool is_off_center(const PlotGeometry& g, int col, int row) {
  return radius_of(g, col, row) >= sigma_of(g) / 2.0;
}

std::vector<std::uint32_t> occupancy_counts(const FaultSpec& spec, const PlotGeometry& g) {
  std::vector<std::uint32_t> counts(std::size_t(g.grid_cols) * g.grid_rows, 0);
  if (spec.kind == FaultKind::Blank) return counts;
  Rng rng(spec.seed);
  const int dead_cols = g.grid_cols / 2;
  for (int row = 0; row < g.grid_rows; ++row) {
    for (int col = 0; col < g.grid_cols; ++col) {
      double lambda = occupancy_rate(g, col, row);
      if (spec.kind == FaultKind::PedestalNoise && is_off_center(g, col, row))
        lambda += spec.magnitude * kPeakRate;
      // Draw even for dead cells so the live half matches the healthy plot.
      const std::uint32_t n = rng.poisson(lambda);
      const bool dead = spec.kind == FaultKind::HalfColumnsDead && col < dead_cols;
      counts[std::size_t(row) * g.grid_cols + col] = dead ? 0 : n;
    }
  }
  return counts;
}

RgbImage render_plot(const FaultSpec& spec, const PlotGeometry& g) {
  RgbImage img{g.width, g.height,
               std::vector<std::uint8_t>(std::size_t(g.width) * g.height * 3, 0)};
  const Frame f = frame_for(g);
  const auto px = [&](int x, int y) {
    return img.pixels.data() + (std::size_t(y) * g.width + x) * 3;
  };
  const auto gray = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= g.width || y >= g.height) return;
    std::uint8_t* p = px(x, y);
    p[0] = p[1] = p[2] = kFrameGray;
  };

  const auto counts = occupancy_counts(spec, g);
  for (int row = 0; row < g.grid_rows; ++row) {
    for (int col = 0; col < g.grid_cols; ++col) {
      std::uint8_t rgb[3];
      hot_color(counts[std::size_t(row) * g.grid_cols + col] / kFullScale, rgb);
      // Row 0 at the bottom, as on a histogram.
      const int top = f.y0 + (g.grid_rows - 1 - row) * f.cell_h;
      const int left = f.x0 + col * f.cell_w;
      for (int y = top; y < top + f.cell_h; ++y)
        for (int x = left; x < left + f.cell_w; ++x) std::copy(rgb, rgb + 3, px(x, y));
    }
  }

  const int x1 = f.x0 + f.cell_w * g.grid_cols;
  const int y1 = f.y0 + f.cell_h * g.grid_rows;
  for (int x = f.x0 - 1; x <= x1; ++x) {
    gray(x, f.y0 - 1);
    gray(x, y1);
  }
  for (int y = f.y0 - 1; y <= y1; ++y) {
    gray(f.x0 - 1, y);
    gray(x1, y);
  }
  for (int col = 0; col <= g.grid_cols; col += 4) {
    const int x = f.x0 + col * f.cell_w;
    for (int d = 1; d <= 3; ++d) gray(x, y1 + d);
  }
  for (int row = 0; row <= g.grid_rows; row += 4) {
    const int y = y1 - row * f.cell_h;
    for (int d = 2; d <= 4; ++d) gray(f.x0 - d, y);
  }
  return img;
}

GeneratedPlot generate_plot(const FaultSpec& spec, const PlotGeometry& g) {
  if (spec.magnitude < 0.0) fail(ErrorCode::InvalidArgument, "magnitude must be >= 0");
  return {encode_png(render_plot(spec, g)), class_for(spec.kind)};
}

CorpusOptions CorpusOptions::balanced(std::size_t n_per_class, std::uint64_t seed) {
  CorpusOptions o;
  o.class_counts = {{"Good", n_per_class}, {"Bad", n_per_class}, {"NoData", n_per_class}};
  o.seed = seed;
  return o;
}

std::vector<CorpusEntry> generate_corpus(const fs::path& root,
                                         const CorpusOptions& options) {
  if (options.images_per_run < 1)
    fail(ErrorCode::InvalidArgument, "images_per_run must be positive");
  std::vector<FaultKind> kinds;
  std::size_t bad_index = 0;
  for (const auto& [cls, n] : options.class_counts) {
    for (std::size_t i = 0; i < n; ++i) {
      if (cls == "Good") {
        kinds.push_back(FaultKind::None);
      } else if (cls == "NoData") {
        kinds.push_back(FaultKind::Blank);
      } else if (cls == "Bad") {
        kinds.push_back(bad_index++ % 2 == 0 ? FaultKind::HalfColumnsDead
                                             : FaultKind::PedestalNoise);
      } else {
        fail(ErrorCode::InvalidArgument, "synthetic corpora only know Good/Bad/NoData");
      }
    }
  }
  if (kinds.empty()) fail(ErrorCode::InvalidArgument, "corpus would be empty");

  Rng rng(options.seed);
  rng.shuffle(std::span(kinds));

  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + root.string() + ": " + ec.message());

  std::vector<CorpusEntry> out;
  out.reserve(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    FaultSpec spec{kinds[i], 0.0, mix64(options.seed ^ mix64(i))};
    if (spec.kind == FaultKind::PedestalNoise)
      spec.magnitude = options.min_pedestal +
                       (options.max_pedestal - options.min_pedestal) * rng.uniform01();
    const auto run = options.first_run + std::int64_t(i / options.images_per_run);
    const Timestamp t = options.start_time + Timestamp(i) * options.cadence_s;
    const fs::path path = layout_path(root, options.run_period, run,
                                      layout_filename(options.plot_type, t));
    const GeneratedPlot plot = generate_plot(spec, options.geometry);
    write_file(path, plot.png);
    out.push_back({path, plot.class_name, spec, run, t});
  }

  std::ofstream csv(root / kTruthCsv, std::ios::trunc);
  if (!csv) fail(ErrorCode::IoFailure, "cannot write truth CSV under " + root.string());
  csv << "path,class\n";
  for (const auto& e : out)
    csv << e.path.lexically_relative(root).generic_string() << ',' << e.class_name << '\n';
  if (!csv) fail(ErrorCode::IoFailure, "short write to truth CSV");
  return out;
}

std::vector<TruthRow> read_truth_csv(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line) || line != "path,class")
    fail(ErrorCode::InvalidArgument, csv.string() + ": expected header 'path,class'");
  std::vector<TruthRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      fail(ErrorCode::InvalidArgument, csv.string() + ": malformed row: " + line);
    rows.push_back({line.substr(0, comma), line.substr(comma + 1)});
  }
  return rows;
}

}  // namespace hydra
