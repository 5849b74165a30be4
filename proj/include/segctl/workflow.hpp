#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "segctl/session.hpp"

namespace segctl {

/// Starting partition for region mode when no seeds are given: intensity
/// (channel mean) split into n equal-width bins, brightest bin label 1,
/// darkest bin the background label n.
inline LabelMap intensity_partition(const ImageVolume& img, int n) {
  const Dims& d = img.dims();
  std::vector<double> mean(d.size(), 0.0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < d.size(); ++k) {
    for (int c = 0; c < img.channels(); ++c) mean[k] += img(k, c);
    mean[k] /= img.channels();
    lo = std::min(lo, mean[k]);
    hi = std::max(hi, mean[k]);
  }
  LabelMap out(d, n);
  if (!(hi > lo)) return out;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const int bin = std::min(n - 1, static_cast<int>((mean[k] - lo) / (hi - lo) * n));
    out[k] = n - bin;
  }
  return out;
}

/// Seeds file: one voxel per line, `label x y [z]`; `#` starts a comment.
inline std::vector<SeedSet> parse_seeds(std::istream& in, const Dims& d) {
  std::vector<SeedSet> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    int label = 0;
    GridIndex p;
    if (!(ls >> label)) continue;
    if (!(ls >> p.x >> p.y) || (d.rank == 3 && !(ls >> p.z)))
      throw Error(errc::invalid_argument, "seeds line " + std::to_string(lineno) + ": expected label x y" +
                                              (d.rank == 3 ? " z" : ""));
    if (!d.contains(p)) throw Error(errc::out_of_bounds, "seeds line " + std::to_string(lineno) + " outside the image");
    auto it = std::find_if(out.begin(), out.end(), [&](const SeedSet& s) { return s.label == label; });
    if (it == out.end()) {
      out.push_back(SeedSet{label, {}});
      it = out.end() - 1;
    }
    it->voxels.push_back(p);
  }
  return out;
}

inline std::vector<SeedSet> load_seeds(const std::string& path, const Dims& d) {
  std::ifstream in(path);
  if (!in) throw Error(errc::unreadable_file, "cannot open seeds file " + path);
  return parse_seeds(in, d);
}

struct AutoResult {
  bool converged = false;
  long ticks = 0;
};

/// Open-loop run: tick until no voxel changes label for `quiet` consecutive
/// ticks or `max_ticks` is reached.
inline AutoResult run_automatic(Session& s, long max_ticks, int quiet = 10) {
  AutoResult r;
  int still = 0;
  while (s.loop().tick < max_ticks) {
    s.tick();
    still = s.metrics().reclassified == 0 ? still + 1 : 0;
    if (still >= quiet) {
      r.converged = true;
      break;
    }
  }
  r.ticks = s.loop().tick;
  return r;
}

/// Writes the session log to $SEGCTL_LOG_DIR/<name>.seglog when the variable
/// is set. Returns the path written, or empty.
inline std::string write_session_log(const Session& s, const std::string& name) {
  const char* dir = std::getenv("SEGCTL_LOG_DIR");
  if (!dir || !*dir) return {};
  const std::string path = std::string(dir) + "/" + name + ".seglog";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::unreadable_file, "cannot write session log " + path);
  out << s.log_text();
  return path;
}

inline void write_file_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::unreadable_file, "cannot write " + path);
  out << text;
}

/// Label map output: PGM with raw label values for `.pgm`, RAWF otherwise.
inline void save_labels(const std::string& path, const LabelMap& labels) {
  if (format_from_path(path) == ImageFormat::pgm) {
    ImageVolume img(labels.dims(), 1, 0.0);
    for (std::size_t k = 0; k < labels.size(); ++k) img(k, 0) = labels[k];
    save_pgm(path, img);
  } else {
    save_rawf(path, labels);
  }
}

}  // namespace segctl
