#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "segctl/synthetic_user.hpp"
#include "segctl/workflow.hpp"

namespace segctl {

struct SuiteOptions {
  SessionConfig config;  // dynamics and n_labels are filled per image
  int budget = 50;
  long max_ticks = 3000;
  long auto_ticks = 2000;
  long tail_ticks = 0;
  int seed_half = 2;  // initial seeds are (2*half+1)-wide squares
  UserPolicy policy;
  std::optional<std::pair<long, Stroke>> injected;  // e.g. an adversarial stroke
};

struct SuiteCase {
  std::string image;
  Dynamics mode = Dynamics::region;
  std::uint64_t seed = 0;
  double auto_dice = 0.0;
  long auto_ticks = 0;
  SyntheticRun run;
  double wall_ms = 0.0;
  std::optional<Session> session;
};

/// A deliberately wrong stroke: background painted inside label 1, away from
/// label 1's seed square so the label keeps an input of its own.
inline std::pair<long, Stroke> adversarial_stroke(const std::string& name, std::uint64_t seed, long tick,
                                                  int radius = 4, int seed_half = 2) {
  const SyntheticImage img = make_synthetic(name, seed);
  const Dims& d = img.reference.dims();
  std::vector<std::size_t> members;
  for (std::size_t k = 0; k < img.reference.size(); ++k)
    if (img.reference[k] == 1) members.push_back(k);
  const GridIndex c = d.index(most_interior(d, members));
  const int keep = seed_half + radius + 1;
  std::vector<std::size_t> away;
  for (std::size_t k : members) {
    const GridIndex p = d.index(k);
    if (std::max({std::abs(p.x - c.x), std::abs(p.y - c.y), std::abs(p.z - c.z)}) >= keep) away.push_back(k);
  }
  Stroke s;
  s.label = img.n_labels;
  s.voxels = brush_stroke(d, members, most_interior(d, away.empty() ? members : away), radius);
  return {tick, s};
}

/// One synthetic closed-loop session. The synthetic user seeds every label
/// with an interior square; region sessions then start from the open-loop
/// result on those seeds, distance sessions from the seeds themselves.
inline SuiteCase run_suite_case(const std::string& name, Dynamics mode, std::uint64_t seed,
                                const SuiteOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const SyntheticImage img = make_synthetic(name, seed);
  const ImageSource src{"synth", name, seed};
  SessionConfig cfg = opt.config;
  cfg.dynamics = mode;
  cfg.n_labels = img.n_labels;
  cfg.seed = seed;
  const auto seeds = interior_seeds(img.reference, img.n_labels, opt.seed_half);

  SuiteCase c;
  c.image = name;
  c.mode = mode;
  c.seed = seed;
  SessionConfig open = cfg;
  open.open_loop = true;
  Session warm = Session::start(img.image, seeds, open, src);
  c.auto_ticks = run_automatic(warm, opt.auto_ticks).ticks;
  c.auto_dice = min_foreground_dice(warm.labels(), img.reference, img.n_labels);

  c.session.emplace(mode == Dynamics::region ? Session::start(img.image, warm.labels(), cfg, src)
                                             : Session::start(img.image, seeds, cfg, src));
  c.session->set_reference(img.reference);
  std::vector<std::pair<long, Stroke>> injected;
  if (opt.injected) injected.push_back(*opt.injected);
  c.run = run_synthetic_user(*c.session, img.reference, opt.budget, opt.max_ticks, opt.policy, injected,
                             opt.tail_ticks);
  c.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

inline std::string bench_csv_header() { return "image,mode,seed,actuated,impulses,final_dice,ticks,wall_ms,success"; }

inline std::string bench_csv_row(const SuiteCase& c) {
  return c.image + ',' + to_string(c.mode) + ',' + std::to_string(c.seed) + ',' + std::to_string(c.run.actuated) +
         ',' + std::to_string(c.run.impulses) + ',' + format_double(c.run.final_dice) + ',' +
         std::to_string(c.run.ticks) + ',' + std::to_string(static_cast<long>(c.wall_ms)) + ',' +
         (c.run.success && c.run.final_dice >= 0.95 ? "1" : "0");
}

}  // namespace segctl
