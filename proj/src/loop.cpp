#include "casisr/loop.hpp"

#include <cmath>
#include <limits>

#include "casisr/metrics.hpp"
#include "casisr/resample.hpp"

namespace casisr {

namespace {

struct Iterate {
  ImageBuffer sr;
  ImageBuffer error;
  double norm = 0.0;
};

class Engine {
 public:
  Engine(const ImageBuffer& a_l, const LoopPlant& plant, const LoopConfig& cfg, const ImageBuffer* gt)
      : a_l_(a_l), plant_(plant), cfg_(cfg), gt_(gt),
        clamp_(cfg.clamp_preposition.value_or(plant.external)), lr_norm_(flatten_norm(a_l)) {}

  LoopResult run() {
    ImageBuffer a_p = cfg_.init_mode == InitMode::lr ? a_l_ : ImageBuffer(a_l_.height(), a_l_.width(), a_l_.channels());
    Iterate cur = evaluate(a_p, 1);
    const ImageBuffer first_sr = cur.sr;
    record(1, cur, 0.0, 0, true);
    Iterate best = cur;
    trace_.accepted_iterations = 1;

    std::vector<double> norms{cur.norm};
    if (converged(cur.norm)) {
      trace_.status = LoopStatus::converged;
    } else if (cfg_.iterations > 1) {
      double lambda = cfg_.fixed_lambda ? *cfg_.fixed_lambda : estimate_gain(a_p, 1);
      trace_.status = LoopStatus::max_iters;
      for (std::size_t t = 2; t <= cfg_.iterations; ++t) {
        std::size_t halvings = 0;
        bool exhausted = false;
        ImageBuffer cand_p;
        Iterate cand;
        for (;;) {
          cand_p = axpy(a_p, lambda * cfg_.delta_t, cur.error);
          cand = evaluate(cand_p, t);
          if (cand.norm <= cur.norm) break;
          record(t, cand, lambda, halvings, false);
          if (halvings >= cfg_.safeguard_max_halvings) {
            exhausted = true;
            break;
          }
          lambda *= 0.5;
          ++halvings;
        }
        if (exhausted) {
          trace_.status = LoopStatus::safeguard_exhausted;
          break;
        }
        a_p = std::move(cand_p);
        cur = std::move(cand);
        record(t, cur, lambda, halvings, true);
        ++trace_.accepted_iterations;
        norms.push_back(cur.norm);
        if (cur.norm < best.norm) best = cur;

        if (converged(cur.norm) || stalled(norms)) {
          trace_.status = LoopStatus::converged;
          break;
        }
        if (cfg_.reestimate_each_iter && !cfg_.fixed_lambda && t < cfg_.iterations) lambda = estimate_gain(a_p, t);
      }
    }

    const ImageBuffer& chosen = trace_.status == LoopStatus::safeguard_exhausted ? best.sr : cur.sr;
    ImageBuffer out = clamp_unit(chosen);
    const ImageBuffer first_out = clamp_unit(first_sr);
    trace_.lr_error_first = lr_error(first_out);
    trace_.lr_error_final = lr_error(out);
    if (trace_.lr_error_final > trace_.lr_error_first) {
      // Clamping can undo the gain in rare cases; never return something less LR-consistent than one pass.
      out = first_out;
      trace_.lr_error_final = trace_.lr_error_first;
      trace_.fell_back_to_first = true;
    }
    return {std::move(out), std::move(trace_)};
  }

 private:
  ImageBuffer forward(const ImageBuffer& a_p, std::size_t t) const {
    try {
      return plant_.upscale(clamp_ ? clamp_unit(a_p) : a_p);
    } catch (const std::exception& e) {
      throw LoopError(t, e.what());
    }
  }

  ImageBuffer down(const ImageBuffer& sr, std::size_t t) const {
    try {
      return plant_.degrade(sr);
    } catch (const std::exception& e) {
      throw LoopError(t, e.what());
    }
  }

  Iterate evaluate(const ImageBuffer& a_p, std::size_t t) const {
    Iterate it;
    it.sr = forward(a_p, t);
    const ImageBuffer a_d = down(it.sr, t);
    if (!a_d.same_shape(a_l_)) throw LoopError(t, "degraded image does not match the LR dims");
    it.error = subtract(a_l_, a_d);
    it.norm = flatten_norm(it.error);
    return it;
  }

  double lr_error(const ImageBuffer& sr) const { return flatten_norm(subtract(a_l_, down(sr, 0))); }

  double estimate_gain(const ImageBuffer& around, std::size_t t) {
    const VectorMap dp = [&](std::span<const double> x) {
      ImageBuffer p(around.height(), around.width(), around.channels(), std::vector<double>(x.begin(), x.end()));
      const ImageBuffer d = down(forward(p, t), t);
      return std::vector<double>(d.samples().begin(), d.samples().end());
    };
    ProbeOptions opts = cfg_.probes;
    opts.seed += t - 1;
    const JacobianStats stats = estimate_jacobian_stats(dp, around.samples(), opts);
    GainSolution sol = solve_lambda_interval(stats, cfg_.delta_t);
    trace_.gain = sol;
    return sol.lambda_star;
  }

  bool converged(double norm) const {
    if (lr_norm_ > 0.0) return norm / lr_norm_ < cfg_.early_stop_rel;
    return norm < cfg_.early_stop_rel;
  }

  bool stalled(const std::vector<double>& norms) const {
    const std::size_t w = cfg_.stall_window;
    if (w == 0 || norms.size() <= w) return false;
    const double then = norms[norms.size() - 1 - w];
    const double now = norms.back();
    return then > 0.0 && (then - now) / then < cfg_.early_stop_rel;
  }

  void record(std::size_t t, const Iterate& it, double lambda, std::size_t halvings, bool accepted) {
    LoopRecord r{t, it.norm, lambda, halvings, accepted, std::nullopt, std::nullopt};
    if (gt_ && accepted) {
      const ImageBuffer clamped = clamp_unit(it.sr);
      r.psnr = psnr(clamped, *gt_);
      if (std::min(gt_->height(), gt_->width()) >= kSsimWindow) r.ssim = ssim(clamped, *gt_);
    }
    trace_.records.push_back(r);
  }

  const ImageBuffer& a_l_;
  const LoopPlant& plant_;
  const LoopConfig& cfg_;
  const ImageBuffer* gt_;
  bool clamp_;
  double lr_norm_;
  LoopTrace trace_;
};

}  // namespace

const char* status_name(LoopStatus s) {
  switch (s) {
    case LoopStatus::converged: return "converged";
    case LoopStatus::max_iters: return "max_iters";
    case LoopStatus::safeguard_exhausted: return "safeguard_exhausted";
  }
  return "?";
}

void validate(const LoopConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("loop iterations must be >= 1");
  if (!(cfg.delta_t > 0.0)) throw std::invalid_argument("delta_t must be > 0");
  if (!(cfg.early_stop_rel > 0.0)) throw std::invalid_argument("early_stop_rel must be > 0");
  if (cfg.probes.probes < 1) throw std::invalid_argument("probe count must be >= 1");
  if (!(cfg.probes.step > 0.0)) throw std::invalid_argument("probe step must be > 0");
  if (cfg.fixed_lambda && !std::isfinite(*cfg.fixed_lambda)) throw std::invalid_argument("lambda must be finite");
}

LoopPlant make_plant(const Backend& backend, const ScaleSpec& target, std::size_t lr_h, std::size_t lr_w) {
  LoopPlant plant;
  plant.upscale = [&backend, target](const ImageBuffer& p) { return backend.upscale(p, target); };
  plant.degrade = [lr_h, lr_w](const ImageBuffer& s) { return degrade(s, lr_h, lr_w); };
  plant.external = backend.is_external();
  return plant;
}

LoopResult run_loop(const ImageBuffer& a_l, const LoopPlant& plant, const LoopConfig& cfg, const ImageBuffer* gt) {
  validate(cfg);
  if (a_l.empty()) throw std::invalid_argument("run_loop: empty LR image");
  return Engine(a_l, plant, cfg, gt).run();
}

LoopResult run_loop(const ImageBuffer& a_l, const ScaleSpec& target, const Backend& backend, const LoopConfig& cfg,
                    const ImageBuffer* gt) {
  if (target.target_height < a_l.height() || target.target_width < a_l.width()) {
    throw std::invalid_argument("run_loop: target dims smaller than the LR image");
  }
  const LoopPlant plant = make_plant(backend, target, a_l.height(), a_l.width());
  return run_loop(a_l, plant, cfg, gt);
}

ImageBuffer open_loop(const ImageBuffer& a_l, const ScaleSpec& target, const Backend& backend) {
  return clamp_unit(backend.upscale(a_l, target));
}

}  // namespace casisr
