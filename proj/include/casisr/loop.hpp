#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "casisr/backend.hpp"
#include "casisr/gain.hpp"
#include "casisr/image.hpp"

namespace casisr {

enum class InitMode { lr, zero };

struct LoopConfig {
  std::size_t iterations = 10;
  /// Empty selects the gain from the estimated Jacobian statistics.
  std::optional<double> fixed_lambda;
  double delta_t = 1.0;
  ProbeOptions probes{};
  /// Empty: clamp the pre-position to [0,1] for external backends only.
  std::optional<bool> clamp_preposition;
  InitMode init_mode = InitMode::lr;
  double early_stop_rel = 1e-6;
  std::size_t stall_window = 3;
  std::size_t safeguard_max_halvings = 4;
  /// Re-estimate the gain around every accepted pre-position instead of only a_p(0).
  bool reestimate_each_iter = false;
};

void validate(const LoopConfig& cfg);

struct LoopRecord {
  std::size_t t = 0;
  double error_norm = 0.0;  // |a_l - DG(a_s(t))|_2
  double lambda = 0.0;      // gain used to produce this iterate (0 for t = 1)
  std::size_t halvings = 0;
  bool accepted = true;
  std::optional<double> psnr;  // against GT, when supplied
  std::optional<double> ssim;
};

enum class LoopStatus { converged, max_iters, safeguard_exhausted };
const char* status_name(LoopStatus s);

struct LoopTrace {
  std::vector<LoopRecord> records;
  LoopStatus status = LoopStatus::max_iters;
  std::optional<GainSolution> gain;
  std::size_t accepted_iterations = 0;
  /// LR-consistency of the clamped open-loop image and of the returned image.
  double lr_error_first = 0.0;
  double lr_error_final = 0.0;
  bool fell_back_to_first = false;
};

struct LoopResult {
  ImageBuffer sr;  // clamped to [0,1]
  LoopTrace trace;
};

/// The forward path of the loop: PT (upscale) and DG (degrade back to LR dims).
struct LoopPlant {
  std::function<ImageBuffer(const ImageBuffer&)> upscale;
  std::function<ImageBuffer(const ImageBuffer&)> degrade;
  bool external = false;
};

LoopPlant make_plant(const Backend& backend, const ScaleSpec& target, std::size_t lr_h, std::size_t lr_w);

class LoopError : public std::runtime_error {
 public:
  LoopError(std::size_t iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Integral-controlled feedback refinement:
///   a_s(t) = PT(a_p(t-1)), a_e(t) = a_l - DG(a_s(t)), a_p(t) = a_p(t-1) + lambda dt a_e(t).
/// A step that increases |a_e| is discarded and retried with half the gain.
LoopResult run_loop(const ImageBuffer& a_l, const LoopPlant& plant, const LoopConfig& cfg,
                    const ImageBuffer* gt = nullptr);

LoopResult run_loop(const ImageBuffer& a_l, const ScaleSpec& target, const Backend& backend, const LoopConfig& cfg,
                    const ImageBuffer* gt = nullptr);

/// Single upscaler pass on a_l, clamped to [0,1].
ImageBuffer open_loop(const ImageBuffer& a_l, const ScaleSpec& target, const Backend& backend);

}  // namespace casisr
