#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "segctl/session.hpp"

namespace segctl {

// Line protocol, one message per line.
//
// client -> server
//   hello
//   stroke <session-id> <label> <t> <k> <n> <x0> <y0> [<z0>] ...   (t and k are reassigned on ingestion)
//   tick [count]
//   snapshot
//   bye
// server -> client
//   hello <nx> <ny> <nz> <labels> <mode> <session-id>
//   impulse_ack <label> <k> <checksum>
//   tickstats <tick> <t> <V> <E> <Vhat> <rate 0|1> <actuated> <reclassified> <dice|nan>
//   frame <tick> <checksum> <runs...> [| contour <label> <segments> <x0> <y0> <x1> <y1> ...]...
//   snapshot <checksum>
//   error <code> <message>

/// Zero-crossing segments of one level-set field on slice z (marching squares,
/// saddles split by the cell mean). Each segment is x0 y0 x1 y1 in voxel units.
inline std::vector<double> contour_segments(const LevelSetField& f, int z = 0) {
  const Dims& d = f.dims();
  std::vector<double> out;
  auto at = [&](int x, int y) { return f[d.linear({x, y, z})]; };
  for (int y = 0; y + 1 < d.ny; ++y) {
    for (int x = 0; x + 1 < d.nx; ++x) {
      const double v[4] = {at(x, y), at(x + 1, y), at(x + 1, y + 1), at(x, y + 1)};
      const double px[4] = {double(x), double(x + 1), double(x + 1), double(x)};
      const double py[4] = {double(y), double(y), double(y + 1), double(y + 1)};
      std::vector<std::pair<double, double>> cuts;
      int first_inside = -1;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if (inside(v[a]) == inside(v[b])) continue;
        const double s = v[a] / (v[a] - v[b]);
        cuts.emplace_back(px[a] + s * (px[b] - px[a]), py[a] + s * (py[b] - py[a]));
        if (first_inside < 0) first_inside = inside(v[a]) ? 1 : 0;
      }
      if (cuts.size() == 2) {
        out.insert(out.end(), {cuts[0].first, cuts[0].second, cuts[1].first, cuts[1].second});
      } else if (cuts.size() == 4) {
        // saddle: pair edges so the centre value decides which corners connect
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        const bool join = inside(centre) == inside(v[0]);
        const int pairs[2][4] = {{0, 3, 1, 2}, {0, 1, 2, 3}};
        const int* p = pairs[join ? 1 : 0];
        for (int j = 0; j < 4; j += 2)
          out.insert(out.end(), {cuts[p[j]].first, cuts[p[j]].second, cuts[p[j + 1]].first, cuts[p[j + 1]].second});
      }
    }
  }
  return out;
}

inline std::string tickstats_message(const TraceRow& r) {
  return "tickstats " + std::to_string(r.tick) + ' ' + format_double(r.t) + ' ' + format_double(r.V) + ' ' +
         format_double(r.E) + ' ' + format_double(r.Vhat) + ' ' + (r.rate_condition ? "1" : "0") + ' ' +
         std::to_string(r.actuated) + ' ' + std::to_string(r.reclassified) + ' ' +
         (std::isnan(r.dice) ? std::string("nan") : format_double(r.dice));
}

inline std::string frame_message(const Session& s, int z = 0) {
  std::string out = "frame " + std::to_string(s.loop().tick) + ' ' + hex64(checksum(s.labels())) + ' ' +
                    rle_encode(s.labels());
  for (const auto& phi : s.loop().phi) {
    const auto seg = contour_segments(phi, z);
    out += " | contour " + std::to_string(phi.label()) + ' ' + std::to_string(seg.size() / 4);
    for (double c : seg) out += ' ' + format_double(c);
  }
  return out;
}

/// Protocol state of one connection. Owns its session; the transport feeds it
/// lines and sends back whatever it returns.
class ProtocolHandler {
 public:
  explicit ProtocolHandler(Session session, int frame_every = 1)
      : session_(std::move(session)), frame_every_(frame_every < 1 ? 1 : frame_every) {}

  Session& session() { return session_; }
  bool closed() const { return closed_; }

  std::vector<std::string> handle(const std::string& raw) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    try {
      if (cmd.empty()) return {};
      if (cmd == "hello") return {hello()};
      if (cmd == "stroke") return stroke(line);
      if (cmd == "tick") {
        long n = 1;
        if (in >> n; in.fail() && !in.eof()) throw Error(errc::invalid_argument, "tick count must be an integer");
        if (n < 1 || n > 100000) throw Error(errc::invalid_argument, "tick count out of range");
        std::vector<std::string> out;
        for (long i = 0; i < n; ++i) {
          auto m = advance();
          out.insert(out.end(), m.begin(), m.end());
        }
        return out;
      }
      if (cmd == "snapshot") return {"snapshot " + hex64(session_.snapshot())};
      if (cmd == "bye") {
        closed_ = true;
        return {};
      }
      return {error_message("protocol", "unknown message '" + cmd + "'")};
    } catch (const Error& e) {
      return {error_message(to_string(e.code()), e.what())};
    }
  }

  /// One engine tick: its stats, plus a frame every `frame_every` ticks.
  std::vector<std::string> advance() {
    std::vector<std::string> out{tickstats_message(session_.tick())};
    if (session_.loop().tick % frame_every_ == 0) out.push_back(frame_message(session_));
    return out;
  }

  std::string hello() const {
    const Dims& d = session_.loop().image.dims();
    return "hello " + std::to_string(d.nx) + ' ' + std::to_string(d.ny) + ' ' + std::to_string(d.nz) + ' ' +
           std::to_string(session_.config().n_labels) + ' ' + to_string(session_.config().dynamics) + ' ' +
           session_.id();
  }

 private:
  static std::string error_message(const std::string& code, const std::string& what) {
    std::string msg = what;
    for (char& c : msg)
      if (c == '\n' || c == '\r') c = ' ';
    return "error " + code + ' ' + msg;
  }

  std::vector<std::string> stroke(const std::string& line) {
    const Dims& d = session_.loop().image.dims();
    ParsedStroke ps;
    try {
      ps = parse_stroke(line, d.rank);
    } catch (const Error& e) {
      return {error_message("malformed_stroke", e.what())};
    }
    for (const auto& p : ps.stroke.voxels)
      if (!d.contains(p)) return {error_message(to_string(errc::out_of_bounds), "stroke voxel outside the image")};
    if (ps.session_id != session_.id())
      return {error_message("protocol", "stroke for session '" + ps.session_id + "' on '" + session_.id() + "'")};
    const Stroke applied = session_.ingest_stroke(ps.stroke);
    return {"impulse_ack " + std::to_string(applied.label) + ' ' + std::to_string(applied.k) + ' ' +
                hex64(checksum(session_.labels())),
            frame_message(session_)};
  }

  Session session_;
  int frame_every_ = 1;
  bool closed_ = false;
};

}  // namespace segctl
