#include <benchmark/benchmark.h>

#include <vector>

#include "fedshield/codec.hpp"
#include "fedshield/data.hpp"
#include "fedshield/klad.hpp"
#include "fedshield/nn.hpp"
#include "fedshield/paillier.hpp"

namespace {

using namespace fedshield;

const paillier::Keypair& keys_for(unsigned bits) {
  static std::vector<std::pair<unsigned, paillier::Keypair>> cache;
  for (const auto& [b, k] : cache) {
    if (b == bits) return k;
  }
  paillier::RandomSource rng(bits);
  cache.emplace_back(bits, paillier::keygen(bits, rng));
  return cache.back().second;
}

void BM_Keygen(benchmark::State& state) {
  const auto bits = static_cast<unsigned>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    paillier::RandomSource rng(++seed);
    benchmark::DoNotOptimize(paillier::keygen(bits, rng));
  }
}
BENCHMARK(BM_Keygen)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Encrypt(benchmark::State& state) {
  const auto& pk = keys_for(static_cast<unsigned>(state.range(0))).public_key;
  paillier::RandomSource rng(1);
  const mpz_class m = pk.n / 3;
  for (auto _ : state) benchmark::DoNotOptimize(paillier::encrypt(pk, m, rng));
}
BENCHMARK(BM_Encrypt)->Arg(256)->Arg(512)->Arg(1024)->Arg(2048);

void BM_Decrypt(benchmark::State& state) {
  const auto& keys = keys_for(static_cast<unsigned>(state.range(0)));
  paillier::RandomSource rng(1);
  const auto c = paillier::encrypt(keys.public_key, keys.public_key.n / 3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(paillier::decrypt(keys.private_key, c));
}
BENCHMARK(BM_Decrypt)->Arg(256)->Arg(512)->Arg(1024)->Arg(2048);

// Ciphertext-domain average of `clients` vectors of 64 parameters.
void BM_AggregateAverage(benchmark::State& state) {
  const auto& pk = keys_for(512).public_key;
  const auto clients = static_cast<std::size_t>(state.range(0));
  paillier::RandomSource rng(2);
  std::vector<paillier::CipherVector> inputs(clients);
  for (auto& v : inputs) {
    for (int p = 0; p < 64; ++p) v.push_back(paillier::encrypt(pk, p, rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(paillier::aggregate_average(pk, inputs));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * clients * 64));
}
BENCHMARK(BM_AggregateAverage)->Arg(5)->Arg(20);

void BM_Encode(benchmark::State& state) {
  const codec::FixedPointConfig cfg{24, 64.0, keys_for(512).public_key.n};
  double x = -3.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(codec::encode(x, cfg));
    x = -x;
  }
}
BENCHMARK(BM_Encode);

// One local training pass: 80 samples, [4, 16, 4], 5 epochs.
void BM_LocalTrain(benchmark::State& state) {
  const auto data = data::synth_blobs(4, 20, 4, 1.0, 1);
  const std::vector<std::size_t> dims{4, 16, 4};
  const auto model = nn::init_model(dims, 1);
  nn::TrainConfig cfg;
  cfg.batch_size = 16;
  for (auto _ : state) benchmark::DoNotOptimize(nn::train(model, data, cfg));
}
BENCHMARK(BM_LocalTrain)->Unit(benchmark::kMicrosecond);

void BM_KladDetect(benchmark::State& state) {
  const std::vector<std::size_t> dims{16, 64, 10};
  std::vector<nn::Mlp> models;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < 20; ++i) {
    models.push_back(nn::init_model(dims, i));
    ids.push_back(i);
  }
  klad::KladConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(klad::detect(models, ids, cfg));
}
BENCHMARK(BM_KladDetect)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
