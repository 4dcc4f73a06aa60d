#include "fedshield/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "fedshield/errors.hpp"
#include "fedshield/metrics.hpp"
#include "fedshield/parallel.hpp"
#include "fedshield/random.hpp"

namespace fedshield::fl {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Smallest modulus a key of `bits` bits can have.
mpz_class min_modulus(unsigned bits) {
  mpz_class n = 1;
  mpz_mul_2exp(n.get_mpz_t(), n.get_mpz_t(), bits - 1);
  return n;
}

data::Dataset load_train(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  if (d.source == DataSource::kIdx) {
    return data::load_idx(d.train_images, d.train_labels, d.classes);
  }
  return data::synth_blobs(d.classes, d.per_class, d.dim, d.spread,
                           derive_seed(cfg.master_seed, {seed_tag::kTrainData}));
}

data::Dataset load_test(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  if (d.source == DataSource::kIdx) {
    return data::load_idx(d.test_images, d.test_labels, d.classes);
  }
  return data::synth_blobs(d.classes, d.test_per_class, d.dim, d.spread,
                           derive_seed(cfg.master_seed, {seed_tag::kTestData}));
}

nn::TrainConfig local_train_config(const ExperimentConfig& cfg, std::size_t round,
                                   std::size_t client) {
  nn::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.master_seed, {seed_tag::kLocalTrain, round, client});
  return tc;
}

// Client role: flatten, encode and encrypt a local model.
transport::Submission encrypt_model(const nn::Mlp& model, std::size_t client_id,
                                    const paillier::PublicKey& pk,
                                    const codec::FixedPointConfig& codec,
                                    std::uint64_t seed) {
  paillier::RandomSource rng(seed);
  const auto params = nn::flatten(model).values;
  transport::Submission sub;
  sub.client_id = client_id;
  sub.ciphertexts.reserve(params.size());
  for (double v : params) {
    sub.ciphertexts.push_back(paillier::encrypt(pk, codec::encode(v, codec), rng));
  }
  return sub;
}

std::vector<double> decrypt_model(const transport::Submission& sub,
                                  const paillier::PrivateKey& sk,
                                  const codec::FixedPointConfig& codec) {
  std::vector<double> out;
  out.reserve(sub.ciphertexts.size());
  for (const auto& c : sub.ciphertexts) {
    out.push_back(codec::decode(paillier::decrypt(sk, c), codec));
  }
  return out;
}

// Plaintext mirror of the encrypted average: the same modular sum of
// encodings, so it reproduces the ciphertext path bit for bit.
std::vector<double> quantized_average(const std::vector<std::vector<double>>& params,
                                      const codec::FixedPointConfig& codec) {
  const std::size_t width = params.front().size();
  const mpz_class inv = [&] {
    mpz_class out;
    mpz_invert(out.get_mpz_t(), mpz_class(params.size()).get_mpz_t(),
               codec.modulus_n.get_mpz_t());
    return out;
  }();
  std::vector<double> out(width);
  for (std::size_t k = 0; k < width; ++k) {
    mpz_class sum = 0;
    for (const auto& p : params) sum += codec::encode(p[k], codec);
    out[k] = codec::decode_average((sum % codec.modulus_n) * inv % codec.modulus_n,
                                   params.size(), codec);
  }
  return out;
}

double pair_precision(const nn::ConfusionMatrix& cm, const data::FlipSpec& flip) {
  try {
    return metrics::poisoning_precision(cm, flip.source_class, flip.target_class);
  } catch (const UndefinedMetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (client_count < 3) throw ConfigError("clients must be at least 3");
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  const std::size_t planted = data::planted_count(gamma, client_count);
  if (2 * planted >= client_count) {
    throw ConfigError("gamma: round(gamma * clients) = " + std::to_string(planted) +
                      " poisoned clients must be fewer than half of " +
                      std::to_string(client_count));
  }
  if (data.classes < 2) throw ConfigError("data.classes must be at least 2");
  if (data.source == DataSource::kBlobs) {
    if (data.per_class == 0) throw ConfigError("data.per_class must be positive");
    if (data.test_per_class == 0) {
      throw ConfigError("data.test_per_class must be positive");
    }
    if (data.dim == 0) throw ConfigError("data.dim must be positive");
    if (!(data.spread >= 0.0)) throw ConfigError("data.spread must be non-negative");
    if (data.classes * data.per_class < client_count) {
      throw ConfigError("data.per_class: fewer samples than clients");
    }
  } else if (data.train_images.empty() || data.train_labels.empty() ||
             data.test_images.empty() || data.test_labels.empty()) {
    throw ConfigError("data: idx source needs train/test image and label paths");
  }
  attack.flip.validate(data.classes);
  lmtv.validate();
  klad.validate();
  train.validate();
  for (auto h : hidden) {
    if (h == 0) throw ConfigError("model.hidden sizes must be positive");
  }
  if (key_bits < 64) throw ConfigError("key_bits must be at least 64");
  codec::FixedPointConfig probe{fraction_bits, magnitude_bound, min_modulus(key_bits)};
  probe.validate(client_count);
}

std::vector<std::size_t> ExperimentConfig::model_dims(std::size_t input_dim,
                                                      std::size_t class_count) const {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(class_count);
  return dims;
}

ExperimentState prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentState state;

  paillier::RandomSource key_rng(derive_seed(cfg.master_seed, {seed_tag::kKeygen}));
  state.keys = paillier::keygen(cfg.key_bits, key_rng);
  state.codec = {cfg.fraction_bits, cfg.magnitude_bound, state.keys.public_key.n};
  state.codec.validate(cfg.client_count);

  const data::Dataset train = load_train(cfg);
  state.test = load_test(cfg);
  train.validate();
  state.test.validate();
  if (train.feature_dim() != state.test.feature_dim()) {
    throw ConfigError("data: train and test feature dimensions differ");
  }
  if (train.size() < cfg.client_count) {
    throw ConfigError("data: fewer training samples than clients");
  }
  for (std::size_t c = 0; c < state.test.class_count; ++c) {
    if (state.test.class_counts()[c] == 0) {
      throw ConfigError("data: test set has no samples of class " + std::to_string(c));
    }
  }
  cfg.attack.flip.validate(train.class_count);

  state.clean_data = data::partition_iid(
      train, cfg.client_count, derive_seed(cfg.master_seed, {seed_tag::kPartition}));
  std::size_t smallest = train.size();
  for (const auto& shard : state.clean_data) smallest = std::min(smallest, shard.size());
  cfg.train.validate(smallest);

  state.plan = data::make_poison_plan(
      cfg.client_count, cfg.gamma, cfg.attack.flip, cfg.attack.bidirectional,
      derive_seed(cfg.master_seed, {seed_tag::kPoisonPlan}));
  state.client_data = state.clean_data;
  for (std::size_t id : state.plan.poisoned_client_ids) {
    state.client_data[id] =
        data::apply_label_flips(state.clean_data[id], state.plan.specs,
                                derive_seed(cfg.master_seed, {seed_tag::kLabelFlip, id}))
            .data;
  }

  const auto dims = cfg.model_dims(train.feature_dim(), train.class_count);
  state.global_model =
      nn::init_model(dims, derive_seed(cfg.master_seed, {seed_tag::kModelInit}));
  state.baseline_model = state.global_model;
  state.channel = transport::make_channel(cfg.transport);
  return state;
}

RoundRecord run_round(ExperimentState& state, const ExperimentConfig& cfg) {
  RoundRecord rec;
  rec.round_index = state.next_round++;
  const std::size_t round = rec.round_index;
  const auto& pk = state.keys.public_key;
  const auto& sk = state.keys.private_key;

  std::vector<std::size_t> active;
  for (std::size_t id = 0; id < cfg.client_count; ++id) {
    if (!state.evicted.contains(id)) active.push_back(id);
  }
  rec.submitted = active.size();

  // (1) local training, warm-started from the current global model
  auto t = Clock::now();
  std::vector<nn::Mlp> local(active.size());
  parallel_for(active.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t id = active[k];
    local[k] = nn::train(state.global_model, state.client_data[id],
                         local_train_config(cfg, round, id));
  });
  rec.timing.train_ms = elapsed_ms(t);

  // (2) clients encode and encrypt their parameters
  t = Clock::now();
  std::vector<transport::Submission> submissions(active.size());
  parallel_for(active.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t id = active[k];
    submissions[k] = encrypt_model(
        local[k], id, pk, state.codec,
        derive_seed(cfg.master_seed, {seed_tag::kEncrypt, round, id}));
  });
  rec.timing.encrypt_ms = elapsed_ms(t);

  // (3) the defense server decrypts every submission and filters
  t = Clock::now();
  std::vector<std::vector<double>> received(active.size());
  parallel_for(active.size(), cfg.threads, [&](std::size_t k) {
    received[k] = decrypt_model(submissions[k], sk, state.codec);
  });
  std::vector<nn::Mlp> models;
  models.reserve(active.size());
  for (const auto& p : received) models.push_back(nn::unflatten(state.global_model, p));

  Verdict verdict;
  state.last_car_table.reset();
  state.last_klad.reset();
  switch (cfg.defense) {
    case DefenseMode::kNone:
      verdict.benign_ids = active;
      break;
    case DefenseMode::kLmtv: {
      auto table = lmtv::build_car_table(models, active, state.test, cfg.threads);
      verdict = lmtv::detect(table, cfg.lmtv);
      state.last_car_table = std::move(table);
      break;
    }
    case DefenseMode::kKlad: {
      klad::KladConfig kc = cfg.klad;
      kc.seed = derive_seed(cfg.master_seed, {seed_tag::kKladReference, round});
      auto result = klad::detect(models, active, kc, cfg.threads);
      if (result.degenerate) {
        rec.notices.push_back(
            "klad: all divergences are zero (degenerate population); nothing flagged");
      }
      verdict = result.verdict;
      state.last_klad = std::move(result);
      break;
    }
  }
  rec.timing.defend_ms = elapsed_ms(t);
  rec.flagged_ids = verdict.flagged_ids;
  rec.benign_count = verdict.benign_ids.size();
  if (verdict.benign_ids.empty()) {
    throw AggregationError("empty quorum in round " + std::to_string(round) +
                           ": every submitted model was flagged");
  }

  // (4) the aggregation server averages the benign ciphertexts
  t = Clock::now();
  transport::AggregationRequest request;
  request.public_key = pk;
  std::vector<std::vector<double>> benign_params;
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (std::binary_search(verdict.benign_ids.begin(), verdict.benign_ids.end(),
                           active[k])) {
      request.submissions.push_back(std::move(submissions[k]));
      benign_params.push_back(received[k]);
    }
  }
  const auto response = state.channel->send(request);
  rec.timing.aggregate_ms = elapsed_ms(t);

  // (5) clients decrypt the encrypted average into the new global model
  t = Clock::now();
  const std::size_t width = response.ciphertexts.size();
  std::vector<double> global(width);
  parallel_for(width, cfg.threads, [&](std::size_t k) {
    global[k] = codec::decode_average(paillier::decrypt(sk, response.ciphertexts[k]),
                                      benign_params.size(), state.codec);
  });
  rec.timing.decrypt_ms = elapsed_ms(t);

  for (std::size_t k = 0; k < width; ++k) {
    double mean = 0.0;
    for (const auto& p : benign_params) mean += p[k];
    mean /= static_cast<double>(benign_params.size());
    rec.aggregation_max_error =
        std::max(rec.aggregation_max_error, std::fabs(global[k] - mean));
  }
  state.global_model = nn::unflatten(state.global_model, global);

  // Clean reference arm: every client honest, no defense.
  std::vector<std::vector<double>> clean(cfg.client_count);
  parallel_for(cfg.client_count, cfg.threads, [&](std::size_t id) {
    clean[id] = nn::flatten(nn::train(state.baseline_model, state.clean_data[id],
                                      local_train_config(cfg, round, id)))
                    .values;
  });
  state.baseline_model =
      nn::unflatten(state.baseline_model, quantized_average(clean, state.codec));

  // Accounting
  if (cfg.evict_flagged) state.evicted.insert(verdict.flagged_ids.begin(),
                                              verdict.flagged_ids.end());
  std::set<std::size_t> removed(verdict.flagged_ids.begin(), verdict.flagged_ids.end());
  removed.insert(state.evicted.begin(), state.evicted.end());
  for (std::size_t id : removed) {
    (state.plan.is_poisoned(id) ? rec.removed_malicious : rec.removed_benign)++;
  }

  const auto cm = nn::evaluate(state.global_model, state.test);
  const auto baseline_cm = nn::evaluate(state.baseline_model, state.test);
  rec.global_accuracy = cm.accuracy();
  rec.baseline_accuracy = baseline_cm.accuracy();
  rec.accuracy_reduction =
      metrics::accuracy_reduction(rec.baseline_accuracy, rec.global_accuracy);
  rec.poisoning_precision = pair_precision(cm, cfg.attack.flip);

  const std::size_t planted = state.plan.poisoned_client_ids.size();
  if (cfg.defense != DefenseMode::kNone && planted > 0) {
    const metrics::DefenseOutcome outcome{rec.removed_malicious, rec.removed_benign,
                                          cfg.client_count, cfg.gamma, planted};
    rec.success_malicious_only =
        metrics::defense_success(outcome, metrics::CountingMode::kMaliciousOnly);
    rec.success_total_removed =
        metrics::defense_success(outcome, metrics::CountingMode::kTotalRemoved);
  }
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const RoundObserver& observer) {
  ExperimentState state = prepare(cfg);
  ExperimentResult result;
  result.poisoned_client_ids = state.plan.poisoned_client_ids;
  result.planted = state.plan.poisoned_client_ids.size();
  result.key_bits = state.keys.public_key.bit_length();
  result.parameter_count = state.global_model.parameter_count();
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    result.rounds.push_back(run_round(state, cfg));
    if (observer) observer(result.rounds.back());
  }
  const RoundRecord& last = result.rounds.back();
  result.final_confusion = nn::evaluate(state.global_model, state.test);
  result.baseline_confusion = nn::evaluate(state.baseline_model, state.test);
  result.final_accuracy = last.global_accuracy;
  result.baseline_accuracy = last.baseline_accuracy;
  result.accuracy_reduction = last.accuracy_reduction;
  result.poisoning_precision = last.poisoning_precision;
  result.baseline_poisoning_precision =
      pair_precision(result.baseline_confusion, cfg.attack.flip);
  result.success_malicious_only = last.success_malicious_only;
  result.success_total_removed = last.success_total_removed;
  result.car_table = std::move(state.last_car_table);
  result.klad = std::move(state.last_klad);
  return result;
}

std::vector<std::vector<double>> precision_matrix(const nn::ConfusionMatrix& cm) {
  const std::size_t c = cm.class_count();
  std::vector<std::vector<double>> out(
      c, std::vector<double>(c, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = 0; b < c; ++b) {
      if (a == b) continue;
      try {
        out[a][b] = metrics::poisoning_precision(cm, a, b);
      } catch (const UndefinedMetricError&) {
      }
    }
  }
  return out;
}

std::string to_string(DefenseMode mode) {
  switch (mode) {
    case DefenseMode::kNone: return "none";
    case DefenseMode::kLmtv: return "lmtv";
    case DefenseMode::kKlad: return "klad";
  }
  return "unknown";
}

}  // namespace fedshield::fl
