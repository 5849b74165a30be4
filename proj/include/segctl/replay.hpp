#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "segctl/session.hpp"

namespace segctl {

struct ReplayResult {
  LabelMap labels;
  Metrics metrics;
  long snapshots_checked = 0;
  std::optional<std::string> mismatch;  // first divergence, if any
  std::string regenerated;              // log text written by the replayed session
};

namespace detail {

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) throw Error(errc::malformed_log, "log truncated: last line has no newline");
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

inline bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

inline SeedSet parse_seed_line(const std::string& line, int rank) {
  std::istringstream in(line);
  std::string a, b;
  long n = -1;
  SeedSet s;
  if (!(in >> a >> b >> s.label >> n) || n < 0) throw Error(errc::malformed_log, "bad seed line: " + line);
  s.voxels.resize(static_cast<std::size_t>(n));
  for (auto& p : s.voxels) {
    if (!(in >> p.x >> p.y)) throw Error(errc::malformed_log, "seed coordinates truncated");
    if (rank == 3 && !(in >> p.z)) throw Error(errc::malformed_log, "seed coordinates truncated");
  }
  std::string extra;
  if (in >> extra) throw Error(errc::malformed_log, "trailing tokens in seed line");
  return s;
}

inline ImageSource parse_image_line(const std::string& line) {
  std::istringstream in(line);
  std::string tag, kind;
  ImageSource src;
  if (!(in >> tag >> kind) || tag != "image") throw Error(errc::malformed_log, "expected image line");
  src.kind = kind;
  if (kind == "synth") {
    if (!(in >> src.name >> src.seed)) throw Error(errc::malformed_log, "bad image line: " + line);
  } else if (kind == "file") {
    std::getline(in >> std::ws, src.name);
    if (src.name.empty()) throw Error(errc::malformed_log, "image line without a path");
  } else {
    throw Error(errc::malformed_log, "unknown image source " + kind);
  }
  return src;
}

}  // namespace detail

/// Header fields of a session log.
struct LogHeader {
  std::uint64_t digest = 0;
  std::uint64_t seed = 0;
};

inline LogHeader parse_log_header(const std::string& line) {
  std::istringstream in(line);
  std::string magic, version, digest;
  LogHeader h;
  if (!(in >> magic >> version >> digest >> h.seed) || magic != "seglog" || version != "v1" || digest.size() != 16)
    throw Error(errc::malformed_log, "bad log header: " + line);
  try {
    std::size_t used = 0;
    h.digest = std::stoull(digest, &used, 16);
    if (used != digest.size()) throw std::invalid_argument("digest");
  } catch (const std::logic_error&) {
    throw Error(errc::malformed_log, "bad digest in header");
  }
  return h;
}

/// Re-executes a recorded session. The image is rebuilt from the log's image
/// line unless `image` is given. Snapshot checksums and the regenerated log
/// text are compared against the recording; the first divergence is
/// reported in `mismatch` rather than thrown.
inline ReplayResult replay(const std::string& text, const std::optional<ImageVolume>& image = std::nullopt) {
  const auto lines = detail::split_lines(text);
  if (lines.size() < 4) throw Error(errc::malformed_log, "log truncated before init");
  const LogHeader header = parse_log_header(lines[0]);
  SessionConfig cfg = SessionConfig::parse(lines[1]);
  if (fnv1a(lines[1]) != header.digest) throw Error(errc::config_mismatch, "config digest does not match the header");
  cfg.seed = header.seed;
  const ImageSource src = detail::parse_image_line(lines[2]);
  const ImageVolume img = image ? *image : src.load();
  const Dims& d = img.dims();

  std::size_t i = 3;
  std::optional<Session> session;
  if (detail::starts_with(lines[i], "init map ")) {
    std::istringstream in(lines[i].substr(9));
    const LabelMap init = rle_decode(in, d);
    std::string extra;
    if (in >> extra) throw Error(errc::malformed_log, "trailing tokens in init map");
    session.emplace(Session::start(img, init, cfg, src));
    ++i;
  } else if (detail::starts_with(lines[i], "init seeds ")) {
    std::vector<SeedSet> seeds;
    while (i < lines.size() && detail::starts_with(lines[i], "init seeds "))
      seeds.push_back(detail::parse_seed_line(lines[i++], d.rank));
    session.emplace(Session::start(img, seeds, cfg, src));
  } else {
    throw Error(errc::malformed_log, "expected init line, got: " + lines[i]);
  }

  Session& s = *session;
  ReplayResult r;
  auto diverge = [&](const std::string& what) {
    if (!r.mismatch) r.mismatch = what;
  };
  for (; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line == "tick") {
      s.tick();
    } else if (detail::starts_with(line, "stroke ")) {
      const ParsedStroke ps = parse_stroke(line, d.rank);
      if (i + 1 >= lines.size() || !detail::starts_with(lines[i + 1], "impulse "))
        throw Error(errc::malformed_log, "stroke without its impulse event");
      s.set_id(ps.session_id);
      const Stroke applied = s.ingest_stroke(ps.stroke);
      if (applied.t != ps.stroke.t || applied.k != ps.stroke.k)
        throw Error(errc::malformed_log, "stroke out of order at line " + std::to_string(i + 1));
      ++i;  // the impulse line is regenerated by ingest_stroke and compared below
    } else if (detail::starts_with(line, "snapshot ")) {
      const std::string recorded = line.substr(9);
      const std::uint64_t c = s.snapshot();
      ++r.snapshots_checked;
      if (hex64(c) != recorded)
        diverge("snapshot at tick " + std::to_string(s.loop().tick) + ": recorded " + recorded + ", replayed " +
                hex64(c));
    } else if (detail::starts_with(line, "impulse ")) {
      throw Error(errc::malformed_log, "impulse without a preceding stroke");
    } else {
      throw Error(errc::malformed_log, "unknown event: " + line);
    }
  }

  r.regenerated = s.log_text();
  if (r.regenerated != text) {
    const auto again = detail::split_lines(r.regenerated);
    for (std::size_t k = 0; k < std::max(again.size(), lines.size()); ++k) {
      if (k >= again.size() || k >= lines.size() || again[k] != lines[k]) {
        diverge("log line " + std::to_string(k + 1) + " differs on replay");
        break;
      }
    }
  }
  r.labels = s.labels();
  r.metrics = s.metrics();
  return r;
}

}  // namespace segctl
