// segctl: command-line front end for the segmentation engine.
//
// exit codes: 0 ok, 1 runtime failure, 2 usage or missing input,
// 3 tick cap reached, 4 replay mismatch, 5 config digest mismatch.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "segctl/replay.hpp"
#include "segctl/server.hpp"
#include "segctl/suite.hpp"

namespace {

using namespace segctl;

struct Common {
  std::string image, synth, seeds, reference, mode = "region", gain = "saturated";
  int labels = 2;
  double epsilon = 1.5, alpha_margin = 1.0, dmax = 0.0, dt = 1.0;
  long ticks = 2000;
  std::uint64_t seed = 1;
  int brush = 4;

  void add_to(CLI::App* app) {
    app->add_option("--image", image, "input image (PGM, PPM or RAWF)");
    app->add_option("--synth", synth, "synthetic image name instead of --image");
    app->add_option("--seeds", seeds, "seeds file: one `label x y [z]` per line");
    app->add_option("--reference", reference, "reference label map for Dice");
    app->add_option("--mode", mode, "dynamics")->check(CLI::IsMember({"region", "distance"}));
    app->add_option("--labels", labels, "label count including background");
    app->add_option("--epsilon", epsilon, "Heaviside width");
    app->add_option("--alpha-margin", alpha_margin, "gain margin above g_M");
    app->add_option("--gain", gain, "gain law")->check(CLI::IsMember({"linear", "saturated"}));
    app->add_option("--dmax", dmax, "stroke kernel range (0: automatic)");
    app->add_option("--dt", dt, "tick length");
    app->add_option("--ticks", ticks, "tick cap");
    app->add_option("--seed", seed, "seed for synthetic images");
    app->add_option("--brush", brush, "synthetic user brush radius");
  }

  SessionConfig config() const {
    SessionConfig c;
    c.dynamics = parse_dynamics(mode);
    c.n_labels = labels;
    c.control.heaviside.epsilon = epsilon;
    c.control.alpha_margin = alpha_margin;
    c.control.gain = gain == "linear" ? GainLaw::linear : GainLaw::saturated;
    c.d_max = dmax;
    c.dt = dt;
    c.brush = brush;
    c.seed = seed;
    return c;
  }

  ImageSource source() const {
    if (!synth.empty()) return ImageSource{"synth", synth, seed};
    return ImageSource{"file", image, 0};
  }

  /// Synthetic images bring their own label count and reference.
  void adopt_synthetic(SessionConfig& cfg, std::optional<LabelMap>& ref) const {
    if (synth.empty()) return;
    const auto s = make_synthetic(synth, seed);
    cfg.n_labels = s.n_labels;
    if (reference.empty()) ref = s.reference;
  }
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Session make_session(const Common& c, const ImageVolume& img, SessionConfig cfg) {
  if (!c.seeds.empty()) return Session::start(img, load_seeds(c.seeds, img.dims()), cfg, c.source());
  if (cfg.dynamics == Dynamics::distance) throw UsageError("distance mode needs --seeds");
  return Session::start(img, intensity_partition(img, cfg.n_labels), cfg, c.source());
}

void check_input(const Common& c) {
  if (c.image.empty() == c.synth.empty()) throw UsageError("give exactly one of --image and --synth");
}

int cmd_auto(const Common& c, const std::string& out) {
  check_input(c);
  SessionConfig cfg = c.config();
  std::optional<LabelMap> ref;
  c.adopt_synthetic(cfg, ref);
  cfg.open_loop = true;
  const ImageVolume img = c.source().load();
  if (!c.reference.empty()) ref = load_labels(c.reference);
  Session s = make_session(c, img, cfg);
  if (ref) s.set_reference(*ref);
  const AutoResult r = run_automatic(s, c.ticks);
  s.snapshot();
  save_labels(out, s.labels());
  write_file_text(out + ".trace.csv", trace_csv(s.metrics().trace));
  write_session_log(s, "auto");
  std::cout << "ticks " << r.ticks << " checksum " << hex64(checksum(s.labels()));
  if (ref) std::cout << " dice " << min_foreground_dice(s.labels(), *ref, cfg.n_labels);
  std::cout << '\n';
  if (!r.converged) {
    std::cerr << "segctl: tick cap " << c.ticks << " reached before convergence; outputs are partial\n";
    return 3;
  }
  return 0;
}

std::atomic<TcpServer*> g_server{nullptr};

int cmd_serve(const Common& c, int port, int tick_ms, int frame_every) {
  check_input(c);
  SessionConfig cfg = c.config();
  std::optional<LabelMap> ref;
  c.adopt_synthetic(cfg, ref);
  const ImageVolume img = c.source().load();
  if (!c.reference.empty()) ref = load_labels(c.reference);
  make_session(c, img, cfg);  // fail fast on bad seeds or config
  ServerOptions opt;
  opt.port = port;
  opt.tick_ms = tick_ms;
  opt.max_ticks = c.ticks;
  opt.frame_every = frame_every;
  TcpServer server(opt, [&](const std::string&) {
    Session s = make_session(c, img, cfg);
    if (ref) s.set_reference(*ref);
    return s;
  });
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
  server.run();
  g_server = nullptr;
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& out, const std::string& image) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw UsageError("cannot open log " + log_path);
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::optional<ImageVolume> img;
  if (!image.empty()) img = load_image(image);
  ReplayResult r;
  try {
    r = replay(text, img);
  } catch (const Error& e) {
    if (e.code() == errc::config_mismatch) {
      std::cerr << "segctl: " << e.what() << '\n';
      return 5;
    }
    // a log that no longer parses does not reproduce its session
    std::cerr << "segctl: replay failed: " << e.what() << '\n';
    return 4;
  }
  if (!out.empty()) save_labels(out, r.labels);
  if (r.mismatch) {
    std::cerr << "segctl: replay mismatch: " << *r.mismatch << '\n';
    return 4;
  }
  std::cout << "replay ok: " << r.snapshots_checked << " snapshots, final checksum " << hex64(checksum(r.labels))
            << '\n';
  return 0;
}

int cmd_bench(const Common& c, const std::string& modes, int budget, const std::string& out) {
  SuiteOptions opt;
  opt.config = c.config();
  opt.budget = budget;
  opt.max_ticks = c.ticks;
  std::ostringstream csv;
  csv << bench_csv_header() << '\n';
  bool all_ok = true;
  for (const auto& m : modes == "both" ? std::vector<std::string>{"region", "distance"}
                                       : std::vector<std::string>{modes}) {
    for (const auto& name : synthetic_suite_names()) {
      try {
        const SuiteCase sc = run_suite_case(name, parse_dynamics(m), c.seed, opt);
        csv << bench_csv_row(sc) << '\n';
        all_ok = all_ok && sc.run.success && sc.run.final_dice >= 0.95;
      } catch (const std::exception& e) {
        std::cerr << "segctl: " << name << " (" << m << "): " << e.what() << '\n';
        all_ok = false;
      }
    }
  }
  if (out.empty())
    std::cout << csv.str();
  else
    write_file_text(out, csv.str());
  if (!all_ok) std::cerr << "segctl: some suite images missed the target\n";
  return 0;
}

int cmd_record(const Common& c, const std::string& out, int budget, long adversarial_tick) {
  if (c.synth.empty()) throw UsageError("record needs --synth");
  SuiteOptions opt;
  opt.config = c.config();
  opt.budget = budget;
  opt.max_ticks = c.ticks;
  if (adversarial_tick >= 0) opt.injected = adversarial_stroke(c.synth, c.seed, adversarial_tick);
  SuiteCase sc = run_suite_case(c.synth, parse_dynamics(c.mode), c.seed, opt);
  sc.session->snapshot();
  write_file_text(out, sc.session->log_text());
  std::cout << bench_csv_row(sc) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive multi-label segmentation by feedback control"};
  app.require_subcommand(1);
  Common common;

  std::string auto_out = "labels.rawf";
  auto* a = app.add_subcommand("auto", "open-loop automatic segmentation");
  common.add_to(a);
  a->add_option("--out", auto_out, "label map output (.pgm or .rawf)");

  int port = 8765, tick_ms = 50, frame_every = 1;
  auto* s = app.add_subcommand("serve", "serve live sessions over the line protocol");
  common.add_to(s);
  s->add_option("--port", port, "TCP port on 127.0.0.1");
  s->add_option("--tick-ms", tick_ms, "self-tick period while idle (0: only on request)");
  s->add_option("--frame-every", frame_every, "send a frame every N ticks");

  std::string log_path, replay_out, replay_image;
  auto* r = app.add_subcommand("replay", "re-run a session log and verify its checksums");
  r->add_option("log", log_path, "session log")->required();
  r->add_option("--out", replay_out, "final label map output");
  r->add_option("--image", replay_image, "image file overriding the log's image line");

  std::string modes = "both", bench_out;
  int budget = 50;
  auto* b = app.add_subcommand("bench", "synthetic-user closed loops over the synthetic suite, as CSV");
  common.add_to(b);
  b->add_option("--modes", modes, "region, distance or both")->check(CLI::IsMember({"region", "distance", "both"}));
  b->add_option("--budget", budget, "impulse budget per image");
  b->add_option("--csv", bench_out, "write CSV here instead of stdout");

  std::string record_out;
  long adversarial = -1;
  auto* rec = app.add_subcommand("record", "record a synthetic-user session log");
  common.add_to(rec);
  rec->add_option("--out", record_out, "log output")->required();
  rec->add_option("--budget", budget, "impulse budget");
  rec->add_option("--adversarial-tick", adversarial, "inject a wrong-label stroke at this tick");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*a) return cmd_auto(common, auto_out);
    if (*s) return cmd_serve(common, port, tick_ms, frame_every);
    if (*r) return cmd_replay(log_path, replay_out, replay_image);
    if (*b) return cmd_bench(common, modes, budget, bench_out);
    if (*rec) return cmd_record(common, record_out, budget, adversarial);
  } catch (const UsageError& e) {
    std::cerr << "segctl: " << e.what() << '\n' << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << "segctl: " << e.what() << '\n';
    const bool input = e.code() == errc::empty_seed_set || e.code() == errc::label_coverage ||
                       e.code() == errc::unreadable_file || e.code() == errc::invalid_argument;
    return input ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "segctl: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
