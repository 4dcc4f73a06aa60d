#pragma once

#include <string>

#include "fedshield/experiment.hpp"

// Serialized run outputs. Everything except round timings is a pure function
// of the configuration, so report.json and report.csv are byte-stable.
namespace fedshield::report {

// One JSON object on one line, including per-phase wall-clock timings.
std::string round_json_line(const fl::RoundRecord& record);

// Final report: configuration echo, per-round metrics (no timings),
// confusion matrices, poisoning-precision matrix and J.
std::string report_json(const fl::ExperimentConfig& cfg,
                        const fl::ExperimentResult& result);

// One row per round:
// round,submitted,benign,flagged,removed_malicious,removed_benign,accuracy,
// baseline_accuracy,accuracy_reduction,poisoning_precision,j_malicious_only,
// j_total_removed
std::string report_csv(const fl::ExperimentResult& result);

}  // namespace fedshield::report
