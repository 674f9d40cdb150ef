#include <filesystem>
#include <random>
#include <thread>

#include "../oracles.hpp"
#include "casisr/backend.hpp"
#include "doctest.h"

using namespace casisr;
namespace fs = std::filesystem;

namespace {

BackendSpec fixture(const std::string& mode = "", double timeout_s = 30) {
  BackendSpec spec;
  std::string cmd = std::string(ECHO_BACKEND_PATH) + " {in} {out} {th} {tw} {scale}";
  if (!mode.empty()) cmd += " " + mode;
  spec.kind = ExternalCommand{cmd};
  spec.timeout = std::chrono::duration<double>(timeout_s);
  spec.workdir = fs::temp_directory_path() / ("casisr_backend_" + (mode.empty() ? std::string("ok") : mode));
  fs::remove_all(spec.workdir);
  fs::create_directories(spec.workdir);
  return spec;
}

std::size_t files_in(const fs::path& dir) {
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

}  // namespace

TEST_CASE("builtin bicubic preserves a constant at any target") {
  const auto b = make_backend(parse_backend("bicubic"));
  const ImageBuffer out = b->upscale(ImageBuffer(5, 7, 3, 0.6), ScaleSpec{2.3, 12, 16});
  CHECK(out.height() == 12);
  CHECK(out.width() == 16);
  for (double v : out.samples()) CHECK(v == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("builtin nearest expands a single pixel") {
  const auto b = make_backend(parse_backend("nearest"));
  const ImageBuffer out = b->upscale(ImageBuffer(1, 1, 1, 0.3), ScaleSpec{9.0, 9, 9});
  for (double v : out.samples()) CHECK(v == 0.3);
}

TEST_CASE("builtin backends are deterministic and do not mutate input") {
  std::mt19937_64 rng(2);
  const ImageBuffer img = oracle::random_image(6, 6, 3, rng);
  const ImageBuffer copy = img;
  const auto b = make_backend(parse_backend("lanczos"));
  const ScaleSpec t{2.5, 15, 15};
  CHECK(b->upscale(img, t) == b->upscale(img, t));
  CHECK(img == copy);
}

TEST_CASE("upscale request validation") {
  const auto b = make_backend(parse_backend("bilinear"));
  CHECK_THROWS_AS(b->upscale(ImageBuffer(8, 8, 1), ScaleSpec{0.5, 4, 4}), std::invalid_argument);
}

TEST_CASE("spec parsing and validation") {
  CHECK_FALSE(parse_backend("bicubic").is_external());
  const BackendSpec ext = parse_backend("external:\"tool {in} {out} {th} {tw} {scale}\"");
  CHECK(ext.is_external());
  CHECK(std::get<ExternalCommand>(ext.kind).command_template == "tool {in} {out} {th} {tw} {scale}");
  CHECK_THROWS_AS(parse_backend("external:tool {in} {out}"), std::invalid_argument);
  BackendSpec bad = parse_backend("bicubic");
  bad.timeout = std::chrono::seconds(0);
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("external echo fixture matches builtin nearest") {
  std::mt19937_64 rng(4);
  const ImageBuffer img = oracle::random_image(4, 4, 3, rng);
  const BackendSpec spec = fixture();
  const auto ext = make_backend(spec);
  const ScaleSpec target{2.25, 9, 9};
  const ImageBuffer got = ext->upscale(img, target);
  ImageBuffer expect = make_backend(parse_backend("nearest"))->upscale(img, target);
  for (double& v : expect.samples()) v = static_cast<float>(v);
  CHECK(got == expect);
  CHECK(files_in(spec.workdir) == 0);
}

TEST_CASE("external input is clamped to [0,1]") {
  ImageBuffer img(2, 2, 1, std::vector<double>{-0.5, 0.25, 1.5, 0.75});
  const auto ext = make_backend(fixture());
  const ImageBuffer got = ext->upscale(img, ScaleSpec{1.0, 2, 2});
  CHECK(got.at(0, 0, 0) == 0.0);
  CHECK(got.at(1, 0, 0) == 1.0);
  CHECK(got.at(0, 1, 0) == 0.25);
}

TEST_CASE("external failure modes") {
  const ImageBuffer img(4, 4, 1, 0.5);
  const ScaleSpec t{2.0, 8, 8};
  const auto expect_failure = [&](const BackendSpec& spec, BackendFailure kind) {
    try {
      make_backend(spec)->upscale(img, t);
      FAIL("expected a BackendError");
    } catch (const BackendError& e) {
      CHECK(e.kind() == kind);
    }
  };

  SUBCASE("nonzero exit captures stderr and keeps exchange files") {
    const BackendSpec spec = fixture("fail");
    try {
      make_backend(spec)->upscale(img, t);
      FAIL("expected a BackendError");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendFailure::nonzero_exit);
      CHECK(std::string(e.what()).find("fixture asked to fail") != std::string::npos);
    }
    CHECK(files_in(spec.workdir) > 0);
  }
  SUBCASE("dimension mismatch") { expect_failure(fixture("wrong-dims"), BackendFailure::dimension_mismatch); }
  SUBCASE("malformed CSR1") { expect_failure(fixture("garbage"), BackendFailure::malformed_output); }
  SUBCASE("timeout") { expect_failure(fixture("hang", 0.3), BackendFailure::timeout); }
  SUBCASE("missing executable") {
    BackendSpec spec = fixture();
    spec.kind = ExternalCommand{"/nonexistent/bridge {in} {out} {th} {tw} {scale}"};
    expect_failure(spec, BackendFailure::spawn_error);
  }
}

TEST_CASE("probe reports") {
  const ProbeReport ok = probe_backend(*make_backend(parse_backend("bilinear")));
  CHECK(ok.success);
  CHECK(ok.out_height == 8);
  CHECK(ok.out_width == 8);

  BackendSpec missing = fixture();
  missing.kind = ExternalCommand{"/nonexistent/bridge {in} {out} {th} {tw} {scale}"};
  const ProbeReport spawn = probe_backend(*make_backend(missing));
  CHECK_FALSE(spawn.success);
  CHECK(spawn.error.rfind("spawn error", 0) == 0);

  const ProbeReport dims = probe_backend(*make_backend(fixture("wrong-dims")));
  CHECK_FALSE(dims.success);
  CHECK(dims.error.rfind("dimension mismatch", 0) == 0);
}

TEST_CASE("concurrent external calls respect the limiter and all succeed") {
  BackendSpec spec = fixture();
  spec.max_concurrent = 2;
  const auto ext = make_backend(spec);
  const ImageBuffer img(3, 3, 3, 0.5);
  std::vector<std::jthread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&] {
      const ImageBuffer out = ext->upscale(img, ScaleSpec{2.0, 6, 6});
      if (out.height() == 6) ++ok;
    });
  }
  threads.clear();
  CHECK(ok == 6);
}
