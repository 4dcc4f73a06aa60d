#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedshield/data.hpp"
#include "fedshield/defense.hpp"
#include "fedshield/nn.hpp"

// Local model test voting: every submitted model is scored per class on a
// trusted test set and compared against the population.
namespace fedshield::lmtv {

struct CarTable {
  std::vector<std::size_t> client_ids;
  std::size_t class_count = 0;
  std::vector<double> values;  // row-major, client x class

  std::size_t client_count() const noexcept { return client_ids.size(); }
  double at(std::size_t row, std::size_t cls) const {
    return values[row * class_count + cls];
  }
};

struct LmtvConfig {
  double beta = 0.8;
  double absolute_floor = 0.5;

  void validate() const;
};

// Evaluates models[i] (submitted by client_ids[i]) once on `test`. Throws
// ConfigError if some class has no test sample.
CarTable build_car_table(std::span<const nn::Mlp> models,
                         std::span<const std::size_t> client_ids,
                         const data::Dataset& test, std::size_t threads = 1);

// Median of each column; the mean of the middle pair for even counts.
std::vector<double> column_medians(const CarTable& table);

// Per-class cut-off max(absolute_floor, beta * median).
std::vector<double> class_thresholds(const CarTable& table, const LmtvConfig& cfg);

// A client is flagged iff one of its CARs falls strictly below its class
// threshold. Needs at least three clients.
Verdict detect(const CarTable& table, const LmtvConfig& cfg);

// Header `client_id,car_0,...,car_{C-1}`.
void write_csv(const CarTable& table, std::ostream& out);

}  // namespace fedshield::lmtv
