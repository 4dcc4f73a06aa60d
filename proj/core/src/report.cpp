#include "fedshield/report.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace fedshield::report {

using nlohmann::ordered_json;

namespace {

ordered_json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

ordered_json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

ordered_json round_metrics(const fl::RoundRecord& r) {
  ordered_json j;
  j["round"] = r.round_index;
  j["submitted"] = r.submitted;
  j["benign_count"] = r.benign_count;
  j["flagged_ids"] = r.flagged_ids;
  j["removed_malicious"] = r.removed_malicious;
  j["removed_benign"] = r.removed_benign;
  j["global_accuracy"] = r.global_accuracy;
  j["baseline_accuracy"] = r.baseline_accuracy;
  j["accuracy_reduction"] = r.accuracy_reduction;
  j["poisoning_precision"] = number_or_null(r.poisoning_precision);
  j["j_malicious_only"] = optional_number(r.success_malicious_only);
  j["j_total_removed"] = optional_number(r.success_total_removed);
  j["aggregation_max_error"] = r.aggregation_max_error;
  j["notices"] = r.notices;
  return j;
}

ordered_json confusion(const nn::ConfusionMatrix& cm) {
  ordered_json rows = ordered_json::array();
  for (std::size_t t = 0; t < cm.class_count(); ++t) {
    ordered_json row = ordered_json::array();
    for (std::size_t p = 0; p < cm.class_count(); ++p) row.push_back(cm.at(t, p));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string csv_optional(const std::optional<double>& v) {
  return v ? csv_number(*v) : std::string();
}

}  // namespace

std::string round_json_line(const fl::RoundRecord& record) {
  ordered_json j = round_metrics(record);
  j["wall_clock_ms"] = {{"train", record.timing.train_ms},
                        {"encrypt", record.timing.encrypt_ms},
                        {"defend", record.timing.defend_ms},
                        {"aggregate", record.timing.aggregate_ms},
                        {"decrypt", record.timing.decrypt_ms}};
  return j.dump() + "\n";
}

std::string report_json(const fl::ExperimentConfig& cfg,
                        const fl::ExperimentResult& result) {
  ordered_json j;
  j["defense"] = fl::to_string(cfg.defense);
  j["clients"] = cfg.client_count;
  j["rounds"] = cfg.rounds;
  j["gamma"] = cfg.gamma;
  j["seed"] = cfg.master_seed;
  j["key_bits"] = result.key_bits;
  j["parameter_count"] = result.parameter_count;
  j["flip"] = {{"source_class", cfg.attack.flip.source_class},
               {"target_class", cfg.attack.flip.target_class},
               {"flip_fraction", cfg.attack.flip.flip_fraction},
               {"bidirectional", cfg.attack.bidirectional}};
  j["poisoned_client_ids"] = result.poisoned_client_ids;
  j["planted"] = result.planted;

  ordered_json final_round;
  final_round["global_accuracy"] = result.final_accuracy;
  final_round["baseline_accuracy"] = result.baseline_accuracy;
  final_round["accuracy_reduction"] = result.accuracy_reduction;
  final_round["poisoning_precision"] = number_or_null(result.poisoning_precision);
  final_round["baseline_poisoning_precision"] =
      number_or_null(result.baseline_poisoning_precision);
  if (cfg.defense != DefenseMode::kNone) {
    const auto& last = result.rounds.back();
    ordered_json defense;
    defense["removed_malicious"] = last.removed_malicious;
    defense["removed_benign"] = last.removed_benign;
    if (result.planted == 0) {
      defense["j_malicious_only"] = "not-applicable";
      defense["j_total_removed"] = "not-applicable";
    } else {
      defense["j_malicious_only"] = optional_number(result.success_malicious_only);
      defense["j_total_removed"] = optional_number(result.success_total_removed);
    }
    final_round["defense"] = std::move(defense);
  }
  j["final"] = std::move(final_round);

  ordered_json pr = ordered_json::array();
  for (const auto& row : fl::precision_matrix(result.final_confusion)) {
    ordered_json out_row = ordered_json::array();
    for (double v : row) out_row.push_back(number_or_null(v));
    pr.push_back(std::move(out_row));
  }
  j["poisoning_precision_matrix"] = std::move(pr);
  j["confusion_matrix"] = confusion(result.final_confusion);
  j["baseline_confusion_matrix"] = confusion(result.baseline_confusion);

  ordered_json rounds = ordered_json::array();
  for (const auto& r : result.rounds) rounds.push_back(round_metrics(r));
  j["round_records"] = std::move(rounds);
  return j.dump(2) + "\n";
}

std::string report_csv(const fl::ExperimentResult& result) {
  std::ostringstream out;
  out << "round,submitted,benign,flagged,removed_malicious,removed_benign,accuracy,"
         "baseline_accuracy,accuracy_reduction,poisoning_precision,j_malicious_only,"
         "j_total_removed\n";
  for (const auto& r : result.rounds) {
    out << r.round_index << ',' << r.submitted << ',' << r.benign_count << ','
        << r.flagged_ids.size() << ',' << r.removed_malicious << ','
        << r.removed_benign << ',' << csv_number(r.global_accuracy) << ','
        << csv_number(r.baseline_accuracy) << ','
        << csv_number(r.accuracy_reduction) << ','
        << csv_number(r.poisoning_precision) << ','
        << csv_optional(r.success_malicious_only) << ','
        << csv_optional(r.success_total_removed) << '\n';
  }
  return out.str();
}

}  // namespace fedshield::report
