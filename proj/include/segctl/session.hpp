#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "segctl/closed_loop.hpp"
#include "segctl/control.hpp"
#include "segctl/distance.hpp"
#include "segctl/input.hpp"
#include "segctl/io.hpp"
#include "segctl/synth.hpp"

namespace segctl {

struct SessionConfig {
  Dynamics dynamics = Dynamics::region;
  int n_labels = 2;
  ControlParams control;
  double d_max = 0.0;  // 0: 10% of the image diagonal, in units of the median g_gamma
  int diffusion_steps = 5;
  double dt = 1.0;
  int review_interval = 25;
  int brush = 4;
  bool open_loop = false;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_labels < 2) throw Error(errc::invalid_argument, "session needs at least 2 labels");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(errc::invalid_argument, "dt must be positive");
    if (!(control.heaviside.epsilon > 0.0)) throw Error(errc::invalid_argument, "epsilon must be positive");
    if (!(control.alpha_margin > 0.0)) throw Error(errc::invalid_argument, "alpha margin must be positive");
    if (d_max < 0.0 || diffusion_steps < 0 || review_interval < 1 || brush < 0)
      throw Error(errc::invalid_argument, "bad session parameter");
  }

  /// The `config` line of a session log; the digest covers exactly this text.
  std::string line() const {
    std::string s = "config dynamics=" + std::string(to_string(dynamics));
    s += " labels=" + std::to_string(n_labels);
    s += " epsilon=" + format_double(control.heaviside.epsilon);
    s += " alpha_margin=" + format_double(control.alpha_margin);
    s += " gain=" + std::string(to_string(control.gain));
    s += " nu=" + format_double(control.nu);
    s += " rho=" + format_double(control.rho);
    s += " dmax=" + format_double(d_max);
    s += " diffusion=" + std::to_string(diffusion_steps);
    s += " dt=" + format_double(dt);
    s += " review=" + std::to_string(review_interval);
    s += " brush=" + std::to_string(brush);
    s += std::string(" loop=") + (open_loop ? "open" : "closed");
    return s;
  }

  std::uint64_t digest() const { return fnv1a(line()); }

  static SessionConfig parse(const std::string& text) {
    std::istringstream in(text);
    std::string tag, kv;
    if (!(in >> tag) || tag != "config") throw Error(errc::malformed_log, "expected config line");
    SessionConfig c;
    try {
      while (in >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(errc::malformed_log, "bad config token " + kv);
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "dynamics") c.dynamics = parse_dynamics(val);
        else if (key == "labels") c.n_labels = std::stoi(val);
        else if (key == "epsilon") c.control.heaviside.epsilon = std::stod(val);
        else if (key == "alpha_margin") c.control.alpha_margin = std::stod(val);
        else if (key == "gain") {
          if (val != "linear" && val != "saturated") throw Error(errc::malformed_log, "bad gain " + val);
          c.control.gain = val == "linear" ? GainLaw::linear : GainLaw::saturated;
        } else if (key == "nu") c.control.nu = std::stod(val);
        else if (key == "rho") c.control.rho = std::stod(val);
        else if (key == "dmax") c.d_max = std::stod(val);
        else if (key == "diffusion") c.diffusion_steps = std::stoi(val);
        else if (key == "dt") c.dt = std::stod(val);
        else if (key == "review") c.review_interval = std::stoi(val);
        else if (key == "brush") c.brush = std::stoi(val);
        else if (key == "loop") c.open_loop = val == "open";
        else throw Error(errc::malformed_log, "unknown config key " + key);
      }
    } catch (const std::logic_error&) {
      throw Error(errc::malformed_log, "bad config value in: " + text);
    }
    c.validate();
    return c;
  }
};

struct TraceRow {
  long tick = 0;
  double t = 0.0;
  double V = 0.0;
  double E = 0.0;
  double Vhat = 0.0;
  bool rate_condition = false;
  long actuated = 0;
  long reclassified = 0;
  double dice = std::numeric_limits<double>::quiet_NaN();
};

struct Metrics {
  long actuated = 0;
  long reclassified = 0;  // last tick
  long impulses = 0;
  std::vector<TraceRow> trace;
};

inline std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = "tick,t,V,E,Vhat,rate_condition,actuated,reclassified,dice\n";
  for (const auto& r : rows) {
    out += std::to_string(r.tick) + ',' + format_double(r.t) + ',' + format_double(r.V) + ',' +
           format_double(r.E) + ',' + format_double(r.Vhat) + ',' + (r.rate_condition ? "1" : "0") + ',' +
           std::to_string(r.actuated) + ',' + std::to_string(r.reclassified) + ',' +
           (std::isnan(r.dice) ? std::string() : format_double(r.dice)) + '\n';
  }
  return out;
}

/// Smallest foreground Dice against a reference (label n_labels is background).
inline double min_foreground_dice(const LabelMap& labels, const LabelMap& reference, int n_labels) {
  double m = 1.0;
  for (int l = 1; l < n_labels; ++l) m = std::min(m, dice(labels, reference, l));
  return m;
}

/// Run-length tokens `value*count`, x fastest.
inline std::string rle_encode(const LabelMap& labels) {
  std::string out;
  std::size_t k = 0;
  while (k < labels.size()) {
    std::size_t j = k;
    while (j < labels.size() && labels[j] == labels[k]) ++j;
    if (!out.empty()) out += ' ';
    out += std::to_string(labels[k]) + '*' + std::to_string(j - k);
    k = j;
  }
  return out;
}

inline LabelMap rle_decode(std::istream& in, const Dims& d) {
  LabelMap out(d, 0);
  std::size_t k = 0;
  std::string tok;
  while (k < d.size() && in >> tok) {
    const auto star = tok.find('*');
    if (star == std::string::npos) throw Error(errc::malformed_log, "bad run token " + tok);
    int v = 0;
    std::size_t n = 0;
    try {
      v = std::stoi(tok.substr(0, star));
      n = std::stoul(tok.substr(star + 1));
    } catch (const std::logic_error&) {
      throw Error(errc::malformed_log, "bad run token " + tok);
    }
    if (n == 0 || k + n > d.size()) throw Error(errc::malformed_log, "run overflows the grid");
    std::fill_n(out.values().begin() + static_cast<std::ptrdiff_t>(k), n, v);
    k += n;
  }
  if (k != d.size()) throw Error(errc::malformed_log, "label runs do not cover the grid");
  return out;
}

/// Where the session image came from; recorded so replay can rebuild it.
struct ImageSource {
  std::string kind = "synth";  // synth | file
  std::string name;            // generator name or path
  std::uint64_t seed = 0;

  std::string line() const {
    return kind == "synth" ? "image synth " + name + ' ' + std::to_string(seed) : "image file " + name;
  }

  ImageVolume load() const {
    if (kind == "synth") return make_synthetic(name, seed).image;
    return load_image(name);
  }
};

/// One live segmentation session: the coupled system plus input bookkeeping,
/// metrics and the event log.
class Session {
 public:
  /// Region-style start from a full initial partition.
  static Session start(const ImageVolume& img, const LabelMap& init, const SessionConfig& cfg,
                       const ImageSource& src = {}) {
    cfg.validate();
    require_same_dims(img.dims(), init.dims(), "start_session: image and initial labels differ in extents");
    check_coverage(init, cfg.n_labels);
    Session s(cfg, src);
    s.loop_.init(img, init, cfg.n_labels, cfg.dynamics, cfg.control, cfg.dt);
    s.loop_.open_loop = cfg.open_loop;
    s.log_.push_back("init map " + rle_encode(init));
    if (cfg.dynamics == Dynamics::distance) {
      for (std::size_t k = 0; k < init.size(); ++k)
        s.sources_[static_cast<std::size_t>(init[k] - 1)].push_back(k);
      s.refresh_distance_input();
    }
    s.finish_start();
    return s;
  }

  /// Start from seed sets: seed voxels take their label, everything else is
  /// background. Every label, background included, needs seeds in distance mode.
  static Session start(const ImageVolume& img, const std::vector<SeedSet>& seeds, const SessionConfig& cfg,
                       const ImageSource& src = {}) {
    cfg.validate();
    const Dims& d = img.dims();
    LabelMap init(d, cfg.n_labels);
    for (const auto& set : seeds) {
      if (set.label < 1 || set.label > cfg.n_labels) throw Error(errc::unknown_label, "seed label out of range");
      for (std::size_t k : linear_indices(d, set.voxels)) init[k] = set.label;
    }
    if (cfg.dynamics == Dynamics::distance) {
      std::vector<char> seeded(static_cast<std::size_t>(cfg.n_labels), 0);
      for (const auto& set : seeds)
        for (std::size_t k : linear_indices(d, set.voxels)) seeded[static_cast<std::size_t>(init[k] - 1)] = 1;
      for (int l = 1; l <= cfg.n_labels; ++l)
        if (!seeded[static_cast<std::size_t>(l - 1)])
          throw Error(errc::empty_seed_set, "distance mode needs seeds for label " + std::to_string(l));
    }
    Session s(cfg, src);
    s.loop_.init(img, init, cfg.n_labels, cfg.dynamics, cfg.control, cfg.dt);
    s.loop_.open_loop = cfg.open_loop;
    for (const auto& set : seeds) {
      std::string line = "init seeds " + std::to_string(set.label) + ' ' + std::to_string(set.voxels.size());
      for (const auto& p : set.voxels) {
        line += ' ' + std::to_string(p.x) + ' ' + std::to_string(p.y);
        if (d.rank == 3) line += ' ' + std::to_string(p.z);
      }
      s.log_.push_back(line);
    }
    if (cfg.dynamics == Dynamics::distance) {
      // the last writer of a voxel owns it, as in the initial map
      for (const auto& set : seeds)
        for (std::size_t k : linear_indices(d, set.voxels)) s.claim(k, set.label);
      s.refresh_distance_input();
    }
    s.finish_start();
    return s;
  }

  const SessionConfig& config() const { return cfg_; }
  const ClosedLoop& loop() const { return loop_; }
  ClosedLoop& loop() { return loop_; }
  const LabelMap& labels() const { return loop_.labels; }
  const Metrics& metrics() const { return metrics_; }
  const std::vector<std::string>& log() const { return log_; }
  const std::vector<Stroke>& strokes() const { return strokes_; }
  double d_max() const { return d_max_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }
  void set_reference(const LabelMap& ref) {
    require_same_dims(ref.dims(), loop_.image.dims(), "reference and image differ in extents");
    reference_ = ref;
    if (!metrics_.trace.empty()) metrics_.trace.back().dice = current_dice();
  }
  const std::optional<LabelMap>& reference() const { return reference_; }

  std::string log_text() const {
    std::string out = "seglog v1 " + hex64(cfg_.digest()) + ' ' + std::to_string(cfg_.seed) + '\n';
    for (const auto& l : log_) out += l + '\n';
    return out;
  }

  /// Records the stroke, updates the input fields and U, and applies the
  /// impulse. Time and per-label index are assigned here, at ingestion.
  /// Returns the normalized stroke as logged.
  Stroke ingest_stroke(Stroke stroke) {
    const Dims& d = loop_.image.dims();
    if (stroke.label < 1 || stroke.label > cfg_.n_labels) throw Error(errc::unknown_label, "stroke label out of range");
    if (stroke.voxels.empty()) throw Error(errc::empty_seed_set, "empty stroke");
    const auto voxels = linear_indices(d, stroke.voxels);
    const std::size_t li = static_cast<std::size_t>(stroke.label - 1);
    if (cfg_.dynamics == Dynamics::distance) {
      for (std::size_t j = 0; j < sources_.size(); ++j) {
        if (j == li) continue;
        std::size_t left = 0;
        for (std::size_t k : sources_[j]) left += std::find(voxels.begin(), voxels.end(), k) == voxels.end();
        if (left == 0) throw Error(errc::label_coverage, "stroke would erase every input of another label");
      }
    }
    stroke.t = loop_.t;
    stroke.k = next_k_[li]++;
    log_.push_back(format_stroke(id_, stroke, d.rank));

    if (cfg_.dynamics == Dynamics::region) {
      const ScalarField kernel = stroke_kernel_region(stroke, loop_.g_gamma, d_max_);
      DiffusionParams dp;
      dp.gate = cfg_.control.heaviside;
      const InputField spread = diffuse_input(InputField{stroke.label, kernel}, loop_.g_M, cfg_.diffusion_steps, dp);
      for (std::size_t k = 0; k < d.size(); ++k) u_[li][k] = std::min(u_[li][k] + spread.values[k], dp.u_cap);
      // the newest stroke overrides older support of other labels under it
      for (std::size_t j = 0; j < u_.size(); ++j)
        if (j != li)
          for (std::size_t k : voxels) u_[j][k] = 0.0;
      loop_.U = accumulate_region(u_);
    } else {
      for (std::size_t k : voxels) claim(k, stroke.label);
      refresh_distance_input();
    }

    apply_impulse(stroke, loop_.U, loop_.phi, loop_.est);
    loop_.labels = argmax_labels(loop_.phi);
    metrics_.actuated += static_cast<long>(voxels.size());
    ++metrics_.impulses;
    strokes_.push_back(stroke);
    log_.push_back("impulse " + std::to_string(stroke.label) + ' ' + std::to_string(stroke.k));
    return stroke;
  }

  /// One coupled step; returns the trace row it appended.
  const TraceRow& tick() {
    const LabelMap before = last_tick_labels_;
    loop_.coupled_step();
    long changed = 0;
    for (std::size_t k = 0; k < before.size(); ++k) changed += before[k] != loop_.labels[k];
    metrics_.reclassified = changed;
    last_tick_labels_ = loop_.labels;
    log_.push_back("tick");
    record_sample();
    return metrics_.trace.back();
  }

  std::uint64_t snapshot() {
    const std::uint64_t c = checksum(loop_.labels);
    log_.push_back("snapshot " + hex64(c));
    return c;
  }

  long alpha_violations() const { return loop_.alpha_violations; }

 private:
  Session(const SessionConfig& cfg, const ImageSource& src) : cfg_(cfg) {
    log_.push_back(cfg.line());
    log_.push_back(src.line());
    next_k_.assign(static_cast<std::size_t>(cfg.n_labels), 0);
    sources_.assign(static_cast<std::size_t>(cfg.n_labels), {});
  }

  static void check_coverage(const LabelMap& init, int n) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int v : init.values()) {
      if (v < 1 || v > n) throw Error(errc::unknown_label, "initial label out of range");
      seen[static_cast<std::size_t>(v - 1)] = 1;
    }
    if (!seen.back()) throw Error(errc::label_coverage, "initial labels have no background");
    for (int l = 1; l <= n; ++l)
      if (!seen[static_cast<std::size_t>(l - 1)])
        throw Error(errc::label_coverage, "label " + std::to_string(l) + " missing from the initial labels");
  }

  void finish_start() {
    const Dims& d = loop_.image.dims();
    d_max_ = cfg_.d_max > 0.0 ? cfg_.d_max : 0.1 * d.diagonal() * median_of(loop_.g_gamma);
    if (cfg_.dynamics == Dynamics::region)
      u_.assign(static_cast<std::size_t>(cfg_.n_labels), ScalarField(d, 0.0));
    last_tick_labels_ = loop_.labels;
    record_sample();
  }

  /// Moves voxel k into the input set of `label` only.
  void claim(std::size_t k, int label) {
    for (std::size_t j = 0; j < sources_.size(); ++j) {
      auto& v = sources_[j];
      if (static_cast<int>(j) + 1 == label) {
        if (std::find(v.begin(), v.end(), k) == v.end()) v.push_back(k);
      } else {
        v.erase(std::remove(v.begin(), v.end(), k), v.end());
      }
    }
  }

  void refresh_distance_input() {
    std::vector<ScalarField> nearest;
    for (const auto& src : sources_) nearest.push_back(geodesic_distance(loop_.g_gamma, src));
    loop_.U.clear();
    for (int l = 1; l <= cfg_.n_labels; ++l) loop_.U.push_back(accumulate_distance(nearest, l));
    loop_.dists = std::move(nearest);
  }

  double current_dice() const {
    if (!reference_) return std::numeric_limits<double>::quiet_NaN();
    return min_foreground_dice(loop_.labels, *reference_, cfg_.n_labels);
  }

  void record_sample() {
    const LyapunovSample s = loop_.sample();
    TraceRow r;
    r.tick = loop_.tick;
    r.t = s.t;
    r.V = s.V;
    r.E = s.E;
    r.Vhat = s.Vhat;
    r.rate_condition = loop_.rate_condition(cfg_.control.rho);
    r.actuated = metrics_.actuated;
    r.reclassified = metrics_.reclassified;
    r.dice = current_dice();
    metrics_.trace.push_back(r);
  }

  SessionConfig cfg_;
  ClosedLoop loop_;
  std::vector<ScalarField> u_;
  std::vector<std::vector<std::size_t>> sources_;
  std::vector<int> next_k_;
  std::vector<Stroke> strokes_;
  Metrics metrics_;
  std::vector<std::string> log_;
  std::optional<LabelMap> reference_;
  LabelMap last_tick_labels_;
  double d_max_ = 1.0;
  std::string id_ = "s0";
};

}  // namespace segctl
