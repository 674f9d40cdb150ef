#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "casisr/backend.hpp"
#include "casisr/image.hpp"
#include "casisr/loop.hpp"
#include "casisr/metrics.hpp"

namespace casisr {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problems (bad flags, missing inputs) as opposed to run failures.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LrPair {
  ImageBuffer lr;
  ScaleSpec target;
};

/// m = max(1, round(M / f)), n = max(1, round(N / f)) with halves rounded away from zero.
std::size_t lr_extent(std::size_t gt_extent, double f);

/// Bicubic-degrades GT to its LR extents; the target carries GT's exact dims.
/// Requires f > 1 and GT dims >= 11 f so SSIM stays computable.
LrPair gen_lr(const ImageBuffer& gt, double f);

enum class TableFormat { csv, markdown };
TableFormat parse_table_format(const std::string& name);

struct RunConfig {
  std::filesystem::path gt_dir;
  std::filesystem::path lr_dir;  // optional; LR files named by lr_file_name()
  std::filesystem::path out_dir;
  std::vector<double> scales;
  BackendSpec backend;
  LoopConfig loop;
  MetricOptions metric;
  bool emit_diffs = false;
  TableFormat table_format = TableFormat::csv;
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;
};

void validate(const RunConfig& cfg);

/// "<id>_x<scale>.png", e.g. "baboon_x3.70.png".
std::string lr_file_name(const std::string& image_id, double scale);

struct TaskOutcome {
  MetricRow row;
  LoopStatus status = LoopStatus::max_iters;
  std::size_t accepted_iterations = 0;
  double lambda = 0.0;
  bool gain_guaranteed = false;
  double lr_error_open = 0.0;
  double lr_error_closed = 0.0;
};

struct AggregateTable {
  std::vector<Aggregate> scales;
  Aggregate mean;  // column means over scales
  Aggregate max;   // column maxima over scales
};

AggregateTable build_table(std::vector<Aggregate> per_scale);

struct BenchmarkResult {
  std::vector<TaskOutcome> outcomes;  // ordered by (image id, scale)
  AggregateTable table;
  std::vector<std::string> failures;
};

/// Open loop vs closed loop over every (image, scale) pair. Per-image failures are
/// recorded and skipped; a scale with no successful image aborts the run.
BenchmarkResult run_benchmark(const RunConfig& cfg);

/// Writes the table, per-image rows and run metadata into cfg.out_dir.
void write_outputs(const BenchmarkResult& result, const RunConfig& cfg);

/// Four-decimal serialization; non-finite values print as inf / -inf / nan.
std::string format_table(const AggregateTable& table, TableFormat format);
void emit_table(const AggregateTable& table, TableFormat format, const std::filesystem::path& path);

std::string format_real(double v, int decimals = 4);
std::string format_scale(double f);

struct LabeledImage {
  std::string id;
  ImageBuffer image;
};

/// PNG and CSR1 files in a directory, sorted by name.
std::vector<LabeledImage> load_directory(const std::filesystem::path& dir);

}  // namespace casisr
