#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "mcbd/model.hpp"

namespace mcbd {

/// Optional trailing `NOISE <snr_db> <seed>` block of an instance file.
struct NoiseDirective {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

/// Text format:
///   L K N
///   s[0] ... s[L-1]
///   h_0[0] ... h_0[K-1]          (N such lines)
///   NOISE <snr_db> <seed>        (optional)
/// Observations are recomputed on load; a NOISE block injects noise.
/// Malformed input throws ParseError carrying the offending line number.
ProblemInstance read_instance(std::istream& in);
ProblemInstance load_instance(const std::filesystem::path& path);

void write_instance(std::ostream& out, const ProblemInstance& inst,
                    const std::optional<NoiseDirective>& noise = std::nullopt);
void save_instance(const std::filesystem::path& path, const ProblemInstance& inst,
                   const std::optional<NoiseDirective>& noise = std::nullopt);

}  // namespace mcbd
