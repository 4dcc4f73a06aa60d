#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedshield/codec.hpp"
#include "fedshield/data.hpp"
#include "fedshield/defense.hpp"
#include "fedshield/klad.hpp"
#include "fedshield/lmtv.hpp"
#include "fedshield/nn.hpp"
#include "fedshield/paillier.hpp"
#include "fedshield/transport.hpp"

// Round orchestration: clients train and encrypt, the defense server decrypts
// and filters, the aggregation server averages ciphertexts, clients decrypt
// the new global model.
namespace fedshield::fl {

enum class DataSource { kBlobs, kIdx };

struct DataConfig {
  DataSource source = DataSource::kBlobs;
  std::size_t classes = 4;
  std::size_t per_class = 400;
  std::size_t test_per_class = 200;
  std::size_t dim = 4;
  double spread = 1.0;
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
};

struct AttackConfig {
  data::FlipSpec flip;
  bool bidirectional = true;
};

struct ExperimentConfig {
  std::size_t client_count = 20;
  std::size_t rounds = 5;
  double gamma = 0.0;
  DataConfig data;
  AttackConfig attack;
  DefenseMode defense = DefenseMode::kNone;
  lmtv::LmtvConfig lmtv;
  klad::KladConfig klad;
  nn::TrainConfig train;
  std::vector<std::size_t> hidden = {32};
  unsigned key_bits = 256;
  unsigned fraction_bits = 24;
  double magnitude_bound = 64.0;
  std::uint64_t master_seed = 1;
  bool evict_flagged = false;
  transport::Kind transport = transport::Kind::kInProcess;
  std::size_t threads = 0;  // 0 = hardware concurrency

  // Throws ConfigError naming the offending field. Checks everything that
  // does not need the data loaded.
  void validate() const;
  std::vector<std::size_t> model_dims(std::size_t input_dim,
                                      std::size_t class_count) const;
};

struct PhaseTiming {
  double train_ms = 0.0;
  double encrypt_ms = 0.0;
  double defend_ms = 0.0;
  double aggregate_ms = 0.0;
  double decrypt_ms = 0.0;
};

struct RoundRecord {
  std::size_t round_index = 0;  // 1-based
  std::size_t submitted = 0;
  std::vector<std::size_t> flagged_ids;
  std::size_t benign_count = 0;
  std::size_t removed_malicious = 0;
  std::size_t removed_benign = 0;
  double global_accuracy = 0.0;
  double baseline_accuracy = 0.0;
  double accuracy_reduction = 0.0;
  double poisoning_precision = 0.0;  // flip pair, global model
  std::optional<double> success_malicious_only;
  std::optional<double> success_total_removed;
  // Largest |ciphertext-path average - plaintext FedAvg| over parameters.
  double aggregation_max_error = 0.0;
  std::vector<std::string> notices;
  PhaseTiming timing;
};

// Everything carried between rounds.
struct ExperimentState {
  paillier::Keypair keys;
  codec::FixedPointConfig codec;
  data::Dataset test;
  std::vector<data::Dataset> client_data;  // poisoned where planned
  std::vector<data::Dataset> clean_data;   // unpoisoned shards, baseline arm
  data::PoisonPlan plan;
  nn::Mlp global_model;
  nn::Mlp baseline_model;
  std::set<std::size_t> evicted;
  std::size_t next_round = 1;
  std::unique_ptr<transport::Channel> channel;

  std::optional<lmtv::CarTable> last_car_table;
  std::optional<klad::KladResult> last_klad;
};

// Builds keys, datasets, the poison plan and the initial global model.
ExperimentState prepare(const ExperimentConfig& cfg);

// One full protocol round. Throws AggregationError on an empty quorum.
RoundRecord run_round(ExperimentState& state, const ExperimentConfig& cfg);

struct ExperimentResult {
  std::vector<RoundRecord> rounds;
  std::vector<std::size_t> poisoned_client_ids;
  std::size_t planted = 0;
  nn::ConfusionMatrix final_confusion{0};
  nn::ConfusionMatrix baseline_confusion{0};
  double final_accuracy = 0.0;
  double baseline_accuracy = 0.0;
  double accuracy_reduction = 0.0;
  double poisoning_precision = 0.0;
  double baseline_poisoning_precision = 0.0;
  std::optional<double> success_malicious_only;  // final round
  std::optional<double> success_total_removed;
  std::size_t key_bits = 0;
  std::size_t parameter_count = 0;
  std::optional<lmtv::CarTable> car_table;  // final round, LMTV only
  std::optional<klad::KladResult> klad;     // final round, KLAD only
};

using RoundObserver = std::function<void(const RoundRecord&)>;

// Validates, prepares and runs cfg.rounds rounds. Deterministic given
// cfg.master_seed apart from the timings.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const RoundObserver& observer = {});

// Pairwise poisoning precision; entry (a, b) for a != b, NaN on the diagonal
// or when undefined.
std::vector<std::vector<double>> precision_matrix(const nn::ConfusionMatrix& cm);

std::string to_string(DefenseMode mode);

}  // namespace fedshield::fl
