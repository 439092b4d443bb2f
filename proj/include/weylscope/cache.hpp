#pragma once

#include <string>

#include "weylscope/spectrum.hpp"

// On-disk spectrum tables. A file holds one table: the magic line
// "WEYLSCOPE-SPECTRUM v1", the model descriptor JSON on its own line, the
// completeness cutoff lambda_max, then CSV rows "lambda,mult" in ascending
// lambda with 17 significant digits, enough for doubles to round-trip.
// Files live under cache_directory(), which the WEYLSCOPE_CACHE environment
// variable overrides.

namespace weylscope::cache {

std::string cache_directory();

std::string spectrum_cache_path(const std::string& model_id, double lambda_max);

void write_spectrum_cache(const std::string& path, const spectrum::SpectrumTable& t);

spectrum::SpectrumTable read_spectrum_cache(const std::string& path);

// Returns the cached table when a valid file for this model and cutoff
// exists, otherwise computes, stores, and returns it. A stale or unreadable
// file is recomputed and replaced rather than reported as an error.
spectrum::SpectrumTable load_or_compute(const geometry::ManifoldModel& m, double lambda_max,
                                        const spectrum::RevolutionOptions& opt = {});

}  // namespace weylscope::cache
