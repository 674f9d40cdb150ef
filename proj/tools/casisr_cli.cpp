// casisr: closed-loop refinement of arbitrary-scale upscalers.
//
//   casisr gen-lr  --gt-dir DIR --scale F --out-dir DIR
//   casisr run     --gt-dir DIR [--lr-dir DIR] --scales 2.0,2.3,3.7 --backend bicubic ...
//   casisr metrics --a X.png --b Y.png [--diff-out D.png]
//   casisr probe   --backend SPEC
//   casisr lab     interval | simulate | reason ...
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "casisr/backend.hpp"
#include "casisr/gain.hpp"
#include "casisr/harness.hpp"
#include "casisr/metrics.hpp"
#include "casisr/stability.hpp"

namespace {

using namespace casisr;

// Flat "key = value" lines become "--key=value" tokens placed before the real
// arguments; options keep their last value, so explicit flags win.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") continue;
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad scale value: " + item);
    }
  }
  return out;
}

// "1,0;0,3" -> 2x2 matrix
lab::LinearPlant parse_gamma(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    rows.push_back(parse_scales(row));
  }
  const auto d = static_cast<Eigen::Index>(rows.size());
  if (d == 0) throw ConfigError("empty gamma");
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d) throw ConfigError("gamma must be square");
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rows[i][j];
  }
  return {g};
}

void print_loop_summary(const BenchmarkResult& r) {
  for (const auto& o : r.outcomes) {
    std::printf("%-24s x%-6s psnr %s -> %s  ssim %s -> %s  %s after %zu (lambda %s%s)\n", o.row.image_id.c_str(),
                format_scale(o.row.scale).c_str(), format_real(o.row.psnr_o).c_str(),
                format_real(o.row.psnr_c).c_str(), format_real(o.row.ssim_o).c_str(),
                format_real(o.row.ssim_c).c_str(), status_name(o.status), o.accepted_iterations,
                format_real(o.lambda).c_str(), o.gain_guaranteed ? "" : ", unguaranteed");
  }
  for (const auto& f : r.failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop arbitrary-scale super-resolution harness"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // gen-lr
  std::string gen_gt, gen_out, gen_format = "png8";
  double gen_scale = 2.0;
  auto* gen = app.add_subcommand("gen-lr", "Bicubic-degrade a GT directory at one scale");
  gen->add_option("--gt-dir", gen_gt)->required();
  gen->add_option("--scale", gen_scale)->required();
  gen->add_option("--out-dir", gen_out)->required();
  gen->add_option("--format", gen_format, "png8 | png16 | csr1")->capture_default_str();

  // run
  std::string run_gt, run_lr, run_out = "casisr_out", run_scales = "2.0", run_backend = "bicubic";
  std::string run_lambda = "auto", run_table = "csv", run_init = "lr", run_clamp = "auto", run_workdir;
  std::size_t run_iters = 10, run_probes = 8, run_jobs = 1, run_stall = 3, run_halvings = 4, run_concurrent = 1;
  double run_eps = 1e-3, run_dt = 1.0, run_tol = 1e-6, run_timeout = 300.0;
  std::uint64_t run_seed = 0;
  bool run_diffs = false, run_luma = false, run_reestimate = false;
  auto* run = app.add_subcommand("run", "Open- vs closed-loop benchmark");
  run->add_option("--config", "Flat key=value file; command-line flags take precedence");
  run->add_option("--gt-dir", run_gt);
  run->add_option("--lr-dir", run_lr);
  run->add_option("--out-dir", run_out)->capture_default_str();
  run->add_option("--scales", run_scales, "Comma-separated scale factors")->capture_default_str();
  run->add_option("--backend", run_backend, "bicubic | lanczos | bilinear | nearest | external:\"CMD\"")
      ->capture_default_str();
  run->add_option("--iters", run_iters)->capture_default_str();
  run->add_option("--lambda", run_lambda, "auto or a fixed gain")->capture_default_str();
  run->add_option("--delta-t", run_dt)->capture_default_str();
  run->add_option("--probes", run_probes)->capture_default_str();
  run->add_option("--eps", run_eps)->capture_default_str();
  run->add_option("--init", run_init, "lr | zero")->capture_default_str();
  run->add_option("--clamp", run_clamp, "auto | on | off")->capture_default_str();
  run->add_option("--early-stop", run_tol)->capture_default_str();
  run->add_option("--stall-window", run_stall)->capture_default_str();
  run->add_option("--max-halvings", run_halvings)->capture_default_str();
  run->add_flag("--reestimate", run_reestimate, "Re-estimate the gain every iteration");
  run->add_flag("--emit-diffs", run_diffs);
  run->add_flag("--luma", run_luma, "Measure PSNR/SSIM on BT.601 luma");
  run->add_option("--table", run_table, "csv | md")->capture_default_str();
  run->add_option("--seed", run_seed)->capture_default_str();
  run->add_option("--jobs", run_jobs)->capture_default_str();
  run->add_option("--timeout", run_timeout, "External backend timeout in seconds")->capture_default_str();
  run->add_option("--max-concurrent", run_concurrent)->capture_default_str();
  run->add_option("--workdir", run_workdir, "Exchange directory for external backends");

  // metrics
  std::string met_a, met_b, met_diff;
  auto* met = app.add_subcommand("metrics", "PSNR/SSIM between two images");
  met->add_option("--a", met_a)->required();
  met->add_option("--b", met_b)->required();
  met->add_option("--diff-out", met_diff, "Write |a - b| as PNG");
  bool met_luma = false;
  met->add_flag("--luma", met_luma);

  // probe
  std::string probe_backend_text = "bicubic";
  auto* prb = app.add_subcommand("probe", "Check that a backend honours the exchange protocol");
  prb->add_option("--backend", probe_backend_text)->required();

  // lab
  auto* lab_cmd = app.add_subcommand("lab", "Linear stability testbed");
  lab_cmd->require_subcommand(1);
  std::string lab_gamma;
  double lab_dt = 1.0, lab_lambda = 0.0, lab_w = 0.5;
  std::size_t lab_steps = 20, lab_d = 2, lab_big_d = 8;
  std::string lab_e0, lab_csv;
  auto* interval = lab_cmd->add_subcommand("interval", "Contraction interval for a matrix Gamma");
  interval->add_option("--gamma", lab_gamma, "Rows separated by ';', e.g. \"1,0;0,3\"")->required();
  interval->add_option("--delta-t", lab_dt);
  auto* simulate = lab_cmd->add_subcommand("simulate", "Error norms of the linear loop");
  simulate->add_option("--gamma", lab_gamma)->required();
  simulate->add_option("--lambda", lab_lambda)->required();
  simulate->add_option("--delta-t", lab_dt);
  simulate->add_option("--steps", lab_steps);
  simulate->add_option("--e0", lab_e0, "Comma-separated initial error (default all ones)");
  simulate->add_option("--csv", lab_csv, "Write step,norm CSV here");
  auto* reason = lab_cmd->add_subcommand("reason", "Success-probability comparison for d < D");
  reason->add_option("--d", lab_d)->required();
  reason->add_option("--D", lab_big_d)->required();
  reason->add_option("--w", lab_w)->required();

  // Expand --config before parsing so later flags override file values.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config") {
        path = args[i + 1];
        args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        args.erase(args.begin() + static_cast<long>(i));
      } else {
        continue;
      }
      const auto sub = std::find(args.begin(), args.end(), "run");
      if (sub == args.end()) throw ConfigError("--config applies to the run subcommand");
      const auto tokens = config_tokens(path);
      args.insert(sub + 1, tokens.begin(), tokens.end());
      break;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto fmt = parse_image_format(gen_format);
      std::filesystem::create_directories(gen_out);
      for (const auto& img : load_directory(gen_gt)) {
        const LrPair pair = gen_lr(img.image, gen_scale);
        std::string name = lr_file_name(img.id, gen_scale);
        if (fmt == ImageFormat::csr1) name = name.substr(0, name.size() - 4) + ".csr1";
        write_image(pair.lr, std::filesystem::path(gen_out) / name, fmt);
        std::printf("%s: %zux%zu -> %zux%zu\n", img.id.c_str(), img.image.height(), img.image.width(),
                    pair.lr.height(), pair.lr.width());
      }
      return 0;
    }

    if (*run) {
      RunConfig cfg;
      cfg.gt_dir = run_gt;
      cfg.lr_dir = run_lr;
      cfg.out_dir = run_out;
      cfg.scales = parse_scales(run_scales);
      try {
        cfg.backend = parse_backend(run_backend);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      cfg.backend.timeout = std::chrono::duration<double>(run_timeout);
      cfg.backend.max_concurrent = run_concurrent;
      if (!run_workdir.empty()) cfg.backend.workdir = run_workdir;
      cfg.loop.iterations = run_iters;
      if (run_lambda != "auto") {
        try {
          cfg.loop.fixed_lambda = std::stod(run_lambda);
        } catch (const std::exception&) {
          throw ConfigError("--lambda must be 'auto' or a number");
        }
      }
      cfg.loop.delta_t = run_dt;
      cfg.loop.probes.probes = run_probes;
      cfg.loop.probes.step = run_eps;
      if (run_init == "zero") {
        cfg.loop.init_mode = InitMode::zero;
      } else if (run_init != "lr") {
        throw ConfigError("--init must be lr or zero");
      }
      if (run_clamp == "on") cfg.loop.clamp_preposition = true;
      else if (run_clamp == "off") cfg.loop.clamp_preposition = false;
      else if (run_clamp != "auto") throw ConfigError("--clamp must be auto, on or off");
      cfg.loop.early_stop_rel = run_tol;
      cfg.loop.stall_window = run_stall;
      cfg.loop.safeguard_max_halvings = run_halvings;
      cfg.loop.reestimate_each_iter = run_reestimate;
      cfg.metric.y_channel = run_luma;
      cfg.emit_diffs = run_diffs;
      cfg.table_format = parse_table_format(run_table);
      cfg.parallelism = run_jobs;
      cfg.seed = run_seed;

      const BenchmarkResult result = run_benchmark(cfg);
      write_outputs(result, cfg);
      print_loop_summary(result);
      std::printf("\n%s", format_table(result.table, TableFormat::markdown).c_str());
      return 0;
    }

    if (*met) {
      const ImageBuffer a = read_image(met_a), b = read_image(met_b);
      const MetricOptions opts{met_luma};
      std::printf("psnr=%s\n", format_real(psnr(a, b, opts)).c_str());
      if (std::min(a.height(), a.width()) >= kSsimWindow) {
        std::printf("ssim=%s\n", format_real(ssim(a, b, opts), 6).c_str());
      } else {
        std::printf("ssim=n/a (needs >= 11x11)\n");
      }
      if (!met_diff.empty()) write_image(diff_first(a, b), met_diff, ImageFormat::png8);
      return 0;
    }

    if (*prb) {
      BackendSpec spec;
      try {
        spec = parse_backend(probe_backend_text);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      const ProbeReport r = probe_backend(*make_backend(spec));
      if (!r.success) {
        std::printf("failure: %s\n", r.error.c_str());
        return 1;
      }
      std::printf("success: %zux%zu in %.2f ms, range [%.4f, %.4f], mean %.4f\n", r.out_height, r.out_width,
                  r.latency_ms, r.out_min, r.out_max, r.out_mean);
      return 0;
    }

    if (*interval) {
      const auto plant = parse_gamma(lab_gamma);
      const GainSolution sol = solve_lambda_interval(plant.exact_stats(), lab_dt);
      const auto oracle = lab::frobenius_interval_oracle(plant, lab_dt);
      std::printf("A=%.10g B=%.10g C=%.10g\n", sol.a_coef, sol.b_coef, sol.c_coef);
      if (sol.lambda_lo) {
        std::printf("interval=(%.10g, %.10g) lambda*=%.10g\n", *sol.lambda_lo, *sol.lambda_hi, sol.lambda_star);
      } else {
        std::printf("interval=none lambda*=%.10g (unguaranteed)\n", sol.lambda_star);
      }
      if (oracle) {
        std::printf("oracle=(%.10g, %.10g)\n", oracle->lo, oracle->hi);
      } else {
        std::printf("oracle=none\n");
      }
      return 0;
    }

    if (*simulate) {
      const auto plant = parse_gamma(lab_gamma);
      Eigen::VectorXd e0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(plant.dim()));
      if (!lab_e0.empty()) {
        const auto v = parse_scales(lab_e0);
        if (v.size() != plant.dim()) throw ConfigError("--e0 length must match gamma");
        for (std::size_t i = 0; i < v.size(); ++i) e0(static_cast<Eigen::Index>(i)) = v[i];
      }
      const auto norms = lab::simulate_linear_loop(plant, lab_lambda, lab_dt, lab_steps, e0);
      if (!lab_csv.empty()) {
        lab::write_norm_csv(lab_csv, norms);
      } else {
        std::printf("step,norm\n");
        for (std::size_t i = 0; i < norms.size(); ++i) std::printf("%zu,%.17g\n", i, norms[i]);
      }
      std::printf("# frobenius=%.10g spectral_radius=%.10g\n", lab::contraction_frobenius(plant, lab_lambda, lab_dt),
                  lab::contraction_spectral_radius(plant, lab_lambda, lab_dt));
      return 0;
    }

    if (*reason) {
      const auto r = lab::reasonability_report(lab_d, lab_big_d, lab_w);
      std::printf("P(a_p|a_e)=%.10g\nP(a_s|a_p)=%.10g\nP(a_d|a_s)=%.10g\n", r.p_preposition, r.p_upscale,
                  r.p_degrade);
      std::printf("P(a_p|a_e) > P(a_s|a_p): %s\nP(a_d|a_s) > P(a_s|a_p): %s\n",
                  r.preposition_beats_upscale ? "yes" : "no", r.degrade_beats_upscale ? "yes" : "no");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
