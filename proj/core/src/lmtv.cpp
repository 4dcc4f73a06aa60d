#include "fedshield/lmtv.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "fedshield/errors.hpp"
#include "fedshield/metrics.hpp"
#include "fedshield/parallel.hpp"

namespace fedshield::lmtv {

void LmtvConfig::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("lmtv.beta must lie in (0, 1]");
  if (!(absolute_floor >= 0.0 && absolute_floor <= 1.0)) {
    throw ConfigError("lmtv.absolute_floor must lie in [0, 1]");
  }
}

CarTable build_car_table(std::span<const nn::Mlp> models,
                         std::span<const std::size_t> client_ids,
                         const data::Dataset& test, std::size_t threads) {
  if (models.empty()) throw DomainError("no models to evaluate");
  if (models.size() != client_ids.size()) {
    throw ShapeError("models and client ids differ in length");
  }
  const auto counts = test.class_counts();
  std::string missing;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) missing += (missing.empty() ? "" : ", ") + std::to_string(c);
  }
  if (!missing.empty()) {
    throw ConfigError("trusted test set has no samples of class(es) " + missing);
  }

  CarTable table;
  table.client_ids.assign(client_ids.begin(), client_ids.end());
  table.class_count = test.class_count;
  table.values.assign(models.size() * test.class_count, 0.0);
  parallel_for(models.size(), threads, [&](std::size_t i) {
    const auto cm = nn::evaluate(models[i], test);
    for (std::size_t c = 0; c < table.class_count; ++c) {
      table.values[i * table.class_count + c] = metrics::class_accuracy_rate(cm, c);
    }
  });
  return table;
}

std::vector<double> column_medians(const CarTable& table) {
  std::vector<double> medians(table.class_count, 0.0);
  std::vector<double> column(table.client_count());
  for (std::size_t c = 0; c < table.class_count; ++c) {
    for (std::size_t i = 0; i < table.client_count(); ++i) column[i] = table.at(i, c);
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    medians[c] = (n % 2 == 1) ? column[n / 2]
                              : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return medians;
}

std::vector<double> class_thresholds(const CarTable& table, const LmtvConfig& cfg) {
  auto thresholds = column_medians(table);
  for (auto& t : thresholds) t = std::max(cfg.absolute_floor, cfg.beta * t);
  return thresholds;
}

Verdict detect(const CarTable& table, const LmtvConfig& cfg) {
  cfg.validate();
  if (table.client_count() < 3) {
    throw DomainError("LMTV voting needs at least three clients");
  }
  const auto thresholds = class_thresholds(table, cfg);
  Verdict verdict;
  for (std::size_t i = 0; i < table.client_count(); ++i) {
    bool flagged = false;
    for (std::size_t c = 0; c < table.class_count && !flagged; ++c) {
      flagged = table.at(i, c) < thresholds[c];
    }
    (flagged ? verdict.flagged_ids : verdict.benign_ids).push_back(table.client_ids[i]);
  }
  std::sort(verdict.benign_ids.begin(), verdict.benign_ids.end());
  std::sort(verdict.flagged_ids.begin(), verdict.flagged_ids.end());
  return verdict;
}

void write_csv(const CarTable& table, std::ostream& out) {
  out << "client_id";
  for (std::size_t c = 0; c < table.class_count; ++c) out << ",car_" << c;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < table.client_count(); ++i) {
    out << table.client_ids[i];
    for (std::size_t c = 0; c < table.class_count; ++c) out << ',' << table.at(i, c);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace fedshield::lmtv
