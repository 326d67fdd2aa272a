#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hydra/png_io.hpp"
#include "hydra/time_util.hpp"

namespace hydra {

enum class FaultKind { None, HalfColumnsDead, PedestalNoise, Blank };

struct FaultSpec {
  FaultKind kind = FaultKind::None;
  double magnitude = 0.0;  // pedestal height as a fraction of the peak rate
  std::uint64_t seed = 0;
};

// None -> Good, Blank -> NoData, anything else -> Bad.
std::string class_for(FaultKind kind);
std::string fault_name(FaultKind kind);

struct PlotGeometry {
  int grid_cols = 32;
  int grid_rows = 24;
  int width = 320;
  int height = 240;
};

inline constexpr double kPeakRate = 50.0;

// Expected occupancy of a cell: kPeakRate * exp(-r^2 / (2 sigma^2)), r in cell
// units from the grid center, sigma one third of the grid diagonal.
double occupancy_rate(const PlotGeometry& g, int col, int row);
// Cells at least sigma / 2 from the center receive the pedestal.
bool is_off_center(const PlotGeometry& g, int col, int row);

// Row-major grid_rows x grid_cols Poisson counts for the spec.
std::vector<std::uint32_t> occupancy_counts(const FaultSpec& spec,
                                            const PlotGeometry& g = {});

// Heatmap of the counts inside an axes frame.
RgbImage render_plot(const FaultSpec& spec, const PlotGeometry& g = {});

struct GeneratedPlot {
  std::vector<std::uint8_t> png;
  std::string class_name;
};

GeneratedPlot generate_plot(const FaultSpec& spec, const PlotGeometry& g = {});

struct CorpusOptions {
  std::map<std::string, std::size_t> class_counts;  // Good / Bad / NoData
  std::uint64_t seed = 0;
  std::string plot_type = "fcal_occupancy";
  std::string run_period = "RunPeriod-2020-08";
  std::int64_t first_run = 70000;
  std::size_t images_per_run = 20;
  Timestamp start_time = 1598486400;  // 2020-08-27T00:00:00Z
  Timestamp cadence_s = 60;
  double min_pedestal = 0.5;
  double max_pedestal = 1.0;
  PlotGeometry geometry;

  static CorpusOptions balanced(std::size_t n_per_class, std::uint64_t seed);
};

struct CorpusEntry {
  std::filesystem::path path;
  std::string class_name;
  FaultSpec spec;
  std::int64_t run_number = 0;
  Timestamp captured_at = 0;
};

inline constexpr const char* kTruthCsv = "truth.csv";

// Writes images in the catalog layout under `root` plus `root/truth.csv`
// (header `path,class`, paths relative to `root`). Class order over time is a
// seeded shuffle; Bad images split evenly between dead columns and pedestal
// noise. Throws IoFailure.
std::vector<CorpusEntry> generate_corpus(const std::filesystem::path& root,
                                         const CorpusOptions& options);

struct TruthRow {
  std::string path;
  std::string class_name;
};

std::vector<TruthRow> read_truth_csv(const std::filesystem::path& csv);

}  // namespace hydra
