#include "casisr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "casisr/resample.hpp"

namespace casisr {

namespace {

constexpr const char* kLrConvention =
    "bicubic Keys a=-0.5, pixel-center alignment, support widened by in/out on downscale, "
    "replicate borders, LR extent round-half-away(M/f)";

bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".csr1";
}

Aggregate column_fold(const std::vector<Aggregate>& rows, bool take_max) {
  Aggregate out;
  const auto fold = [&](double Aggregate::*field) {
    double acc = take_max ? -std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& r : rows) acc = take_max ? std::max(acc, r.*field) : acc + r.*field;
    return take_max ? acc : acc / static_cast<double>(rows.size());
  };
  for (auto field : {&Aggregate::scale, &Aggregate::psnr_o, &Aggregate::psnr_c, &Aggregate::dpsnr_a,
                     &Aggregate::dpsnr_m, &Aggregate::ssim_o, &Aggregate::ssim_c, &Aggregate::dssim_a,
                     &Aggregate::dssim_m}) {
    out.*field = fold(field);
  }
  for (const auto& r : rows) out.count += r.count;
  return out;
}

std::vector<std::string> row_cells(const std::string& label, const Aggregate& a) {
  return {label,
          format_real(a.psnr_o),
          format_real(a.psnr_c),
          format_real(a.dpsnr_a),
          format_real(a.dpsnr_m),
          format_real(a.ssim_o),
          format_real(a.ssim_c),
          format_real(a.dssim_a),
          format_real(a.dssim_m)};
}

std::string full_precision(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ImageBuffer load_lr(const RunConfig& cfg, const std::string& id, double scale) {
  for (const char* ext : {".png", ".csr1"}) {
    std::string name = lr_file_name(id, scale);
    name = name.substr(0, name.size() - 4) + ext;
    const auto p = cfg.lr_dir / name;
    if (std::filesystem::exists(p)) return read_image(p);
  }
  throw HarnessError("no LR file for " + id + " at scale " + format_scale(scale) + " in " + cfg.lr_dir.string());
}

}  // namespace

std::size_t lr_extent(std::size_t gt_extent, double f) {
  const double v = std::round(static_cast<double>(gt_extent) / f);
  return std::max<std::size_t>(1, static_cast<std::size_t>(v));
}

LrPair gen_lr(const ImageBuffer& gt, double f) {
  if (!(f > 1.0) || !std::isfinite(f)) throw ConfigError("scale factor must be > 1");
  if (gt.empty()) throw HarnessError("gen_lr: empty GT image");
  const double min_extent = 11.0 * f;
  if (static_cast<double>(gt.height()) < min_extent || static_cast<double>(gt.width()) < min_extent) {
    throw HarnessError("gen_lr: GT " + std::to_string(gt.height()) + "x" + std::to_string(gt.width()) +
                       " too small for scale " + format_scale(f) + " (need >= 11 f per axis)");
  }
  const std::size_t m = lr_extent(gt.height(), f);
  const std::size_t n = lr_extent(gt.width(), f);
  return {degrade(gt, m, n), ScaleSpec{f, gt.height(), gt.width()}};
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::csv;
  if (name == "md" || name == "markdown") return TableFormat::markdown;
  throw ConfigError("unknown table format: " + name);
}

void validate(const RunConfig& cfg) {
  if (cfg.gt_dir.empty() && cfg.lr_dir.empty()) throw ConfigError("need --gt-dir and/or --lr-dir");
  if (cfg.gt_dir.empty()) throw ConfigError("--gt-dir is required to score images");
  if (cfg.scales.empty()) throw ConfigError("at least one scale is required");
  for (double s : cfg.scales) {
    if (!(s > 1.0) || !std::isfinite(s)) throw ConfigError("scales must be > 1, got " + format_scale(s));
  }
  if (cfg.parallelism == 0) throw ConfigError("parallelism must be >= 1");
  try {
    validate(cfg.backend);
    validate(cfg.loop);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string lr_file_name(const std::string& image_id, double scale) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", scale);
  return image_id + "_x" + buf + ".png";
}

std::string format_real(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  // Avoid "-0.0000".
  if (std::string(buf).find_first_not_of("-0.") == std::string::npos) std::snprintf(buf, sizeof(buf), "%.*f", decimals, 0.0);
  return buf;
}

std::string format_scale(double f) {
  std::string s = format_real(f, 4);
  if (s.find('.') == std::string::npos) return s;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.push_back('0');
  return s;
}

AggregateTable build_table(std::vector<Aggregate> per_scale) {
  if (per_scale.empty()) throw HarnessError("cannot build an empty table");
  AggregateTable t;
  t.scales = std::move(per_scale);
  t.mean = column_fold(t.scales, false);
  t.max = column_fold(t.scales, true);
  return t;
}

std::string format_table(const AggregateTable& table, TableFormat format) {
  const std::vector<std::string> header{"scale", "psnr_o", "psnr_c", "dpsnr_a", "dpsnr_m",
                                        "ssim_o", "ssim_c", "dssim_a", "dssim_m"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& a : table.scales) rows.push_back(row_cells(format_scale(a.scale), a));
  rows.push_back(row_cells("Mean", table.mean));
  rows.push_back(row_cells("Max", table.max));

  std::ostringstream os;
  const auto join = [&](const std::vector<std::string>& cells) {
    if (format == TableFormat::csv) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    } else {
      os << '|';
      for (const auto& c : cells) os << ' ' << c << " |";
    }
    os << '\n';
  };
  join(header);
  if (format == TableFormat::markdown) join(std::vector<std::string>(header.size(), "---"));
  for (const auto& r : rows) join(r);
  return os.str();
}

void emit_table(const AggregateTable& table, TableFormat format, const std::filesystem::path& path) {
  if (table.scales.empty()) throw HarnessError("emit_table: empty table");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw HarnessError("cannot write " + path.string());
  out << format_table(table, format);
  if (!out) throw HarnessError("write failed: " + path.string());
}

std::vector<LabeledImage> load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LabeledImage> images;
  for (const auto& f : files) images.push_back({f.stem().string(), read_image(f)});
  return images;
}

BenchmarkResult run_benchmark(const RunConfig& cfg) {
  validate(cfg);
  const auto backend = make_backend(cfg.backend);
  const ProbeReport probe = probe_backend(*backend);
  if (!probe.success) throw HarnessError("backend probe failed: " + probe.error);

  const std::vector<LabeledImage> images = load_directory(cfg.gt_dir);
  if (images.empty()) throw ConfigError("no PNG/CSR1 images in " + cfg.gt_dir.string());

  struct Task {
    std::size_t image;
    std::size_t scale;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t s = 0; s < cfg.scales.size(); ++s) tasks.push_back({i, s});

  std::vector<std::optional<TaskOutcome>> outcomes(tasks.size());
  std::vector<std::string> errors(tasks.size());
  const std::filesystem::path diff_dir = cfg.out_dir / "diffs";
  if (cfg.emit_diffs) std::filesystem::create_directories(diff_dir);

  const auto run_task = [&](std::size_t k) {
    const auto& img = images[tasks[k].image];
    const double f = cfg.scales[tasks[k].scale];
    try {
      LrPair pair;
      if (!cfg.lr_dir.empty()) {
        pair.lr = load_lr(cfg, img.id, f);
        pair.target = ScaleSpec{f, img.image.height(), img.image.width()};
      } else {
        pair = gen_lr(img.image, f);
      }
      if (pair.lr.channels() != img.image.channels()) throw HarnessError("LR/GT channel mismatch");

      LoopConfig loop = cfg.loop;
      loop.probes.seed = cfg.seed + 1000003ull * k;
      const ImageBuffer open = open_loop(pair.lr, pair.target, *backend);
      const LoopResult closed = run_loop(pair.lr, pair.target, *backend, loop);

      TaskOutcome out;
      out.row = MetricRow{img.id, f, psnr(open, img.image, cfg.metric), psnr(closed.sr, img.image, cfg.metric),
                          ssim(open, img.image, cfg.metric), ssim(closed.sr, img.image, cfg.metric)};
      out.status = closed.trace.status;
      out.accepted_iterations = closed.trace.accepted_iterations;
      if (closed.trace.gain) {
        out.lambda = closed.trace.gain->lambda_star;
        out.gain_guaranteed = closed.trace.gain->guaranteed;
      } else if (loop.fixed_lambda) {
        out.lambda = *loop.fixed_lambda;
      }
      out.lr_error_open = closed.trace.lr_error_first;
      out.lr_error_closed = closed.trace.lr_error_final;

      if (cfg.emit_diffs) {
        const std::string stem = img.id + "_x" + format_scale(f);
        const ImageBuffer d_open = diff_first(open, img.image);
        const ImageBuffer d_closed = diff_first(closed.sr, img.image);
        write_image(d_open, diff_dir / (stem + "_open.png"), ImageFormat::png8);
        write_image(d_closed, diff_dir / (stem + "_closed.png"), ImageFormat::png8);
        write_image(diff_second_logical(d_open, d_closed), diff_dir / (stem + "_second.png"), ImageFormat::png8);
      }
      outcomes[k] = out;
    } catch (const std::exception& e) {
      errors[k] = img.id + " @ x" + format_scale(f) + ": " + e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min(cfg.parallelism, tasks.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < tasks.size(); k = next++) run_task(k);
      });
    }
  }

  BenchmarkResult result;
  std::map<std::size_t, std::vector<MetricRow>> by_scale;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (outcomes[k]) {
      by_scale[tasks[k].scale].push_back(outcomes[k]->row);
      result.outcomes.push_back(*outcomes[k]);
    } else {
      result.failures.push_back(errors[k]);
    }
  }
  std::sort(result.outcomes.begin(), result.outcomes.end(), [](const TaskOutcome& a, const TaskOutcome& b) {
    return std::tie(a.row.image_id, a.row.scale) < std::tie(b.row.image_id, b.row.scale);
  });

  std::vector<Aggregate> per_scale;
  for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
    const auto it = by_scale.find(s);
    if (it == by_scale.end()) {
      std::string summary = "every image failed at scale " + format_scale(cfg.scales[s]);
      for (const auto& f : result.failures) summary += "\n  " + f;
      throw HarnessError(summary);
    }
    per_scale.push_back(aggregate(it->second));
  }
  result.table = build_table(std::move(per_scale));
  return result;
}

void write_outputs(const BenchmarkResult& result, const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const bool md = cfg.table_format == TableFormat::markdown;
  emit_table(result.table, cfg.table_format, cfg.out_dir / (md ? "table.md" : "table.csv"));

  std::ofstream rows(cfg.out_dir / "rows.csv", std::ios::binary | std::ios::trunc);
  rows << "image,scale,psnr_o,psnr_c,dpsnr,ssim_o,ssim_c,dssim,status,iterations,lambda,guaranteed,"
          "lr_error_open,lr_error_closed\n";
  for (const auto& o : result.outcomes) {
    const auto& r = o.row;
    rows << r.image_id << ',' << format_scale(r.scale) << ',' << full_precision(r.psnr_o) << ','
         << full_precision(r.psnr_c) << ',' << full_precision(r.dpsnr()) << ',' << full_precision(r.ssim_o) << ','
         << full_precision(r.ssim_c) << ',' << full_precision(r.dssim()) << ',' << status_name(o.status) << ','
         << o.accepted_iterations << ',' << full_precision(o.lambda) << ',' << (o.gain_guaranteed ? 1 : 0) << ','
         << full_precision(o.lr_error_open) << ',' << full_precision(o.lr_error_closed) << '\n';
  }

  std::ofstream meta(cfg.out_dir / "metadata.txt", std::ios::binary | std::ios::trunc);
  meta << "lr_source=" << (cfg.lr_dir.empty() ? "generated" : cfg.lr_dir.string()) << '\n';
  meta << "lr_convention=" << kLrConvention << '\n';
  meta << "backend=" << cfg.backend.describe() << '\n';
  std::string scales;
  for (double s : cfg.scales) scales += (scales.empty() ? "" : ",") + format_scale(s);
  meta << "scales=" << scales << '\n';
  meta << "iterations=" << cfg.loop.iterations << '\n';
  meta << "lambda=" << (cfg.loop.fixed_lambda ? full_precision(*cfg.loop.fixed_lambda) : "auto") << '\n';
  meta << "delta_t=" << full_precision(cfg.loop.delta_t) << '\n';
  meta << "probes=" << cfg.loop.probes.probes << '\n';
  meta << "eps=" << full_precision(cfg.loop.probes.step) << '\n';
  meta << "seed=" << cfg.seed << '\n';
  meta << "metrics=" << (cfg.metric.y_channel ? "luma" : "rgb") << " float [0,1], data range 1\n";
  meta << "tasks=" << result.outcomes.size() << '\n';
  meta << "failures=" << result.failures.size() << '\n';
  for (const auto& f : result.failures) meta << "failure=" << f << '\n';
}

}  // namespace casisr
