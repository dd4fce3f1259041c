#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hdgfwi/hdg.hpp"

namespace hdgfwi {

/// Receiver measurements indexed (frequency, source, receiver).
struct DataSet {
  std::vector<double> frequencies;  ///< Hz
  double laplace_shift = 0.0;
  std::vector<PointSource> sources;
  std::vector<Point> receivers;
  std::vector<std::vector<CVector>> values;  ///< values[f][s][r]
  std::optional<double> snr_db;              ///< noise level used at synthesis, if any
  std::optional<std::uint64_t> seed;         ///< noise seed used at synthesis, if any

  /// Throws ConfigError unless the array shape matches the header and
  /// every value is finite.
  void validate() const;
  double energy() const;  ///< sum of |d|^2
};

}  // namespace hdgfwi
