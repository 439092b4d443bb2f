#include "weylscope/cache.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace weylscope::cache {
namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string cache_directory() {
  if (const char* env = std::getenv("WEYLSCOPE_CACHE"); env != nullptr && *env != '\0')
    return env;
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0')
    return std::string(home) + "/.cache/weylscope";
  return ".weylscope-cache";
}

std::string spectrum_cache_path(const std::string& model_id, double lambda_max) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "spectrum-%016llx-%.6g.csv",
                static_cast<unsigned long long>(fnv1a(model_id)), lambda_max);
  return cache_directory() + "/" + buf;
}

void write_spectrum_cache(const std::string& path, const spectrum::SpectrumTable& t) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    require(out.good(), ErrorKind::Io, "write_spectrum_cache: cannot open " + tmp);
    out << "WEYLSCOPE-SPECTRUM v1\n" << t.model_id << "\n" << g17(t.lambda_max) << "\n";
    for (const auto& e : t.entries) out << g17(e.lambda) << "," << e.mult << "\n";
    require(out.good(), ErrorKind::Io, "write_spectrum_cache: write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::Io, "write_spectrum_cache: cannot move table into " + path);
}

spectrum::SpectrumTable read_spectrum_cache(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "read_spectrum_cache: cannot open " + path);
  std::string magic;
  std::getline(in, magic);
  require(magic == "WEYLSCOPE-SPECTRUM v1", ErrorKind::Io,
          "read_spectrum_cache: not a spectrum table: " + path);

  spectrum::SpectrumTable t;
  std::getline(in, t.model_id);
  require(!t.model_id.empty(), ErrorKind::Io,
          "read_spectrum_cache: missing model descriptor in " + path);

  std::string line;
  std::getline(in, line);
  {
    std::istringstream is(line);
    is >> t.lambda_max;
    require(!is.fail() && t.lambda_max > 0.0, ErrorKind::Io,
            "read_spectrum_cache: bad lambda_max line in " + path);
  }

  double prev = -1.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::Io,
            "read_spectrum_cache: malformed row in " + path);
    spectrum::SpectrumEntry e;
    try {
      e.lambda = std::stod(line.substr(0, comma));
      e.mult = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      fail(ErrorKind::Io, "read_spectrum_cache: unparsable row in " + path);
    }
    require(e.lambda >= 0.0 && e.mult >= 1, ErrorKind::Io,
            "read_spectrum_cache: row out of range in " + path);
    require(e.lambda > prev, ErrorKind::Io,
            "read_spectrum_cache: rows out of order in " + path);
    prev = e.lambda;
    t.entries.push_back(e);
  }
  return t;
}

spectrum::SpectrumTable load_or_compute(const geometry::ManifoldModel& m, double lambda_max,
                                        const spectrum::RevolutionOptions& opt) {
  std::string id = m.descriptor();
  std::string path = spectrum_cache_path(id, lambda_max);
  if (std::filesystem::exists(path)) {
    try {
      spectrum::SpectrumTable t = read_spectrum_cache(path);
      if (t.model_id == id && t.lambda_max == lambda_max) return t;
    } catch (const Error&) {
      // fall through to recompute
    }
  }
  spectrum::SpectrumTable t = spectrum::compute_spectrum(m, lambda_max, opt);
  write_spectrum_cache(path, t);
  return t;
}

}  // namespace weylscope::cache
