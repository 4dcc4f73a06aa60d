#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fedshield::data {

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One sample per row of `features`.
struct Dataset {
  FeatureMatrix features;
  std::vector<std::uint32_t> labels;
  std::size_t class_count = 0;
  // Per-sample shape; {rows, cols} for IDX images, {dim} for synthetic data.
  std::vector<std::uint32_t> sample_shape;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_dim() const noexcept {
    return static_cast<std::size_t>(features.cols());
  }
  std::vector<std::size_t> class_counts() const;

  // Throws DomainError on a broken invariant.
  void validate() const;

  // Rows `indices` in order.
  Dataset select(std::span<const std::size_t> indices) const;
};

struct FlipSpec {
  std::uint32_t source_class = 0;
  std::uint32_t target_class = 1;
  double flip_fraction = 1.0;

  void validate(std::size_t class_count) const;
};

struct FlipResult {
  Dataset data;
  std::size_t flipped = 0;
  std::vector<std::string> warnings;
};

// Relabels round(fraction * count(source)) randomly chosen source-class
// samples as target. Input is not modified.
FlipResult apply_label_flip(const Dataset& data, const FlipSpec& spec,
                            std::uint64_t seed);

// Applies several specs at once, each selecting among the *original* labels,
// so a (a->b, b->a) pair swaps the two classes.
FlipResult apply_label_flips(const Dataset& data, std::span<const FlipSpec> specs,
                             std::uint64_t seed);

struct PoisonPlan {
  std::vector<std::size_t> poisoned_client_ids;  // sorted
  std::vector<FlipSpec> specs;
  double gamma = 0.0;

  bool is_poisoned(std::size_t client) const;
};

// Number of poisoned clients, round(gamma * clients).
std::size_t planted_count(double gamma, std::size_t clients);

// Chooses round(gamma * clients) clients. Throws ConfigError unless that
// count is strictly below clients / 2.
PoisonPlan make_poison_plan(std::size_t clients, double gamma,
                            const FlipSpec& flip, bool bidirectional,
                            std::uint64_t seed);

// Gaussian clusters with standard deviation `spread` around fixed centers.
Dataset synth_blobs(std::size_t class_count, std::size_t per_class,
                    std::size_t dim, double spread, std::uint64_t seed);

// Seeded shuffle, then contiguous shards whose sizes differ by at most one.
std::vector<Dataset> partition_iid(const Dataset& data, std::size_t clients,
                                   std::uint64_t seed);

// IDX (big-endian): images magic 0x00000803 (count, rows, cols, u8 pixels),
// labels magic 0x00000801 (count, u8 labels). Pixels are scaled by 1/255.
// class_count = 0 infers max(label) + 1.
Dataset parse_idx(std::span<const std::uint8_t> images,
                  std::span<const std::uint8_t> labels,
                  std::size_t class_count = 0);
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::size_t class_count = 0);

// Inverse of parse_idx for datasets whose features are multiples of 1/255.
std::vector<std::uint8_t> serialize_idx_images(const Dataset& data);
std::vector<std::uint8_t> serialize_idx_labels(const Dataset& data);

// Header `label,f0,f1,...`.
void write_csv(const Dataset& data, std::ostream& out);

}  // namespace fedshield::data
