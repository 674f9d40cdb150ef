#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>

#include "casisr/image.hpp"
#include "casisr/resample.hpp"

namespace casisr {

/// Why an upscale call failed. probe_backend reports these as text.
enum class BackendFailure { spawn_error, nonzero_exit, timeout, dimension_mismatch, malformed_output };

const char* failure_text(BackendFailure kind);

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendFailure kind, const std::string& detail)
      : std::runtime_error(std::string(failure_text(kind)) + ": " + detail), kind_(kind) {}
  BackendFailure kind() const { return kind_; }

 private:
  BackendFailure kind_;
};

struct BuiltinKernel {
  KernelKind kernel = KernelKind::bicubic;
};

/// Shell command template; must mention {in}, {out}, {th}, {tw} and {scale}.
struct ExternalCommand {
  std::string command_template;
};

struct BackendSpec {
  std::variant<BuiltinKernel, ExternalCommand> kind = BuiltinKernel{};
  std::chrono::duration<double> timeout = std::chrono::seconds(300);
  std::size_t max_concurrent = 1;
  /// Exchange directory for external calls; empty selects CASISR_WORKDIR or the system temp dir.
  std::filesystem::path workdir;

  bool is_external() const { return std::holds_alternative<ExternalCommand>(kind); }
  std::string describe() const;
};

/// Parses "bicubic", "lanczos", "nearest", "bilinear" or "external:CMD".
BackendSpec parse_backend(const std::string& text);

/// Throws std::invalid_argument when a spec violates its invariants.
void validate(const BackendSpec& spec);

/// The forward upscaler. Instances are thread-safe; external instances throttle
/// concurrent process spawns to max_concurrent.
class Backend {
 public:
  virtual ~Backend() = default;
  /// Returns exactly target_height x target_width x img.channels() or throws BackendError.
  virtual ImageBuffer upscale(const ImageBuffer& img, const ScaleSpec& target) const = 0;
  virtual bool is_external() const = 0;
  virtual std::string describe() const = 0;
};

std::shared_ptr<const Backend> make_backend(const BackendSpec& spec);

struct ProbeReport {
  bool success = false;
  std::string error;  // failure_text(...) plus detail when !success
  double latency_ms = 0.0;
  std::size_t out_height = 0;
  std::size_t out_width = 0;
  double out_min = 0.0;
  double out_max = 0.0;
  double out_mean = 0.0;
};

/// Runs the backend once on a 4x4 fixture upscaled to 8x8. Never throws for backend faults.
ProbeReport probe_backend(const Backend& backend);

}  // namespace casisr
