#include "casisr/backend.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <semaphore>

#include "process.hpp"

namespace casisr {

namespace {

std::string replace_all(std::string text, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::filesystem::path resolve_workdir(const std::filesystem::path& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("CASISR_WORKDIR"); env && *env) return env;
  return std::filesystem::temp_directory_path();
}

void check_dims(const ImageBuffer& out, const ImageBuffer& in, const ScaleSpec& target) {
  if (out.height() != target.target_height || out.width() != target.target_width ||
      out.channels() != in.channels()) {
    throw BackendError(BackendFailure::dimension_mismatch,
                       "expected " + std::to_string(target.target_height) + "x" +
                           std::to_string(target.target_width) + "x" + std::to_string(in.channels()) +
                           ", got " + std::to_string(out.height()) + "x" + std::to_string(out.width()) +
                           "x" + std::to_string(out.channels()));
  }
}

void check_request(const ImageBuffer& img, const ScaleSpec& target) {
  if (img.empty()) throw std::invalid_argument("upscale: empty input image");
  if (target.target_height < img.height() || target.target_width < img.width()) {
    throw std::invalid_argument("upscale: target dims must be >= input dims per axis");
  }
}

class BuiltinBackend final : public Backend {
 public:
  explicit BuiltinBackend(KernelKind kernel) : kernel_(kernel) {}

  ImageBuffer upscale(const ImageBuffer& img, const ScaleSpec& target) const override {
    check_request(img, target);
    return resize(img, target.target_height, target.target_width, kernel_);
  }
  bool is_external() const override { return false; }
  std::string describe() const override { return std::string("builtin:") + kernel_name(kernel_); }

 private:
  KernelKind kernel_;
};

class ExternalBackend final : public Backend {
 public:
  explicit ExternalBackend(BackendSpec spec)
      : spec_(std::move(spec)),
        command_(std::get<ExternalCommand>(spec_.kind).command_template),
        workdir_(resolve_workdir(spec_.workdir)),
        slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, spec_.max_concurrent))) {}

  ImageBuffer upscale(const ImageBuffer& img, const ScaleSpec& target) const override {
    check_request(img, target);
    const std::string stem = "casisr_" + std::to_string(::getpid()) + "_" + std::to_string(next_id_++);
    const auto in_path = workdir_ / (stem + "_in.csr1");
    const auto out_path = workdir_ / (stem + "_out.csr1");
    const auto log_path = workdir_ / (stem + "_log.txt");

    write_image(clamp_unit(img), in_path, ImageFormat::csr1);

    char scale_text[64];
    std::snprintf(scale_text, sizeof(scale_text), "%.6f", target.factor);
    std::string cmd = command_;
    cmd = replace_all(cmd, "{in}", in_path.string());
    cmd = replace_all(cmd, "{out}", out_path.string());
    cmd = replace_all(cmd, "{th}", std::to_string(target.target_height));
    cmd = replace_all(cmd, "{tw}", std::to_string(target.target_width));
    cmd = replace_all(cmd, "{scale}", scale_text);

    detail::ProcessResult run;
    {
      slots_.acquire();
      struct Release {
        std::counting_semaphore<kMaxSlots>& s;
        ~Release() { s.release(); }
      } release{slots_};
      run = detail::run_shell(cmd, spec_.timeout, log_path);
    }

    // Exchange files are left behind on failure for inspection.
    if (!run.spawned) throw BackendError(BackendFailure::spawn_error, run.output + " [" + cmd + "]");
    if (run.timed_out) throw BackendError(BackendFailure::timeout, "command exceeded timeout [" + cmd + "]");
    // The shell reports 126/127 when the command cannot be executed or found.
    if (run.exit_code == 126 || run.exit_code == 127) {
      throw BackendError(BackendFailure::spawn_error, run.output);
    }
    if (run.exit_code != 0) {
      throw BackendError(BackendFailure::nonzero_exit,
                         "exit status " + std::to_string(run.exit_code) + ": " + run.output);
    }

    ImageBuffer out;
    try {
      out = read_image(out_path);
    } catch (const ImageError& e) {
      throw BackendError(BackendFailure::malformed_output, e.what());
    }
    check_dims(out, img, target);

    std::error_code ec;
    std::filesystem::remove(in_path, ec);
    std::filesystem::remove(out_path, ec);
    std::filesystem::remove(log_path, ec);
    return out;
  }

  bool is_external() const override { return true; }
  std::string describe() const override { return "external:" + command_; }

 private:
  static constexpr std::ptrdiff_t kMaxSlots = 1024;

  BackendSpec spec_;
  std::string command_;
  std::filesystem::path workdir_;
  mutable std::counting_semaphore<kMaxSlots> slots_;
  inline static std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace

const char* failure_text(BackendFailure kind) {
  switch (kind) {
    case BackendFailure::spawn_error: return "spawn error";
    case BackendFailure::nonzero_exit: return "nonzero exit";
    case BackendFailure::timeout: return "timeout";
    case BackendFailure::dimension_mismatch: return "dimension mismatch";
    case BackendFailure::malformed_output: return "malformed output";
  }
  return "unknown";
}

std::string BackendSpec::describe() const {
  if (const auto* b = std::get_if<BuiltinKernel>(&kind)) return kernel_name(b->kernel);
  return "external:" + std::get<ExternalCommand>(kind).command_template;
}

BackendSpec parse_backend(const std::string& text) {
  BackendSpec spec;
  const std::string prefix = "external:";
  if (text.rfind(prefix, 0) == 0) {
    std::string cmd = text.substr(prefix.size());
    if (cmd.size() >= 2 && cmd.front() == '"' && cmd.back() == '"') cmd = cmd.substr(1, cmd.size() - 2);
    spec.kind = ExternalCommand{cmd};
  } else {
    spec.kind = BuiltinKernel{parse_kernel(text)};
  }
  validate(spec);
  return spec;
}

void validate(const BackendSpec& spec) {
  if (spec.timeout.count() <= 0) throw std::invalid_argument("backend timeout must be positive");
  if (spec.max_concurrent == 0) throw std::invalid_argument("backend max_concurrent must be >= 1");
  if (const auto* ext = std::get_if<ExternalCommand>(&spec.kind)) {
    for (const char* key : {"{in}", "{out}", "{th}", "{tw}", "{scale}"}) {
      if (ext->command_template.find(key) == std::string::npos) {
        throw std::invalid_argument(std::string("external command template is missing placeholder ") + key);
      }
    }
  }
}

std::shared_ptr<const Backend> make_backend(const BackendSpec& spec) {
  validate(spec);
  if (const auto* b = std::get_if<BuiltinKernel>(&spec.kind)) return std::make_shared<BuiltinBackend>(b->kernel);
  return std::make_shared<ExternalBackend>(spec);
}

ProbeReport probe_backend(const Backend& backend) {
  ProbeReport report;
  ImageBuffer fixture(4, 4, 3);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 3; ++c) fixture.at(y, x, c) = (y * 4 + x + c) / 18.0;
  const ScaleSpec target{2.0, 8, 8};

  const auto start = std::chrono::steady_clock::now();
  try {
    const ImageBuffer out = backend.upscale(fixture, target);
    report.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.success = true;
    report.out_height = out.height();
    report.out_width = out.width();
    const auto s = out.samples();
    report.out_min = *std::min_element(s.begin(), s.end());
    report.out_max = *std::max_element(s.begin(), s.end());
    report.out_mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  } catch (const std::exception& e) {
    report.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.success = false;
    report.error = e.what();
  }
  return report;
}

}  // namespace casisr
