#include "fedshield/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <random>

#include "fedshield/errors.hpp"
#include "fedshield/random.hpp"

namespace fedshield::data {

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (auto label : labels) {
    if (label < class_count) ++counts[label];
  }
  return counts;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DomainError("feature rows and labels differ in length");
  }
  for (auto label : labels) {
    if (label >= class_count) {
      throw DomainError("label " + std::to_string(label) +
                        " is not below class_count " +
                        std::to_string(class_count));
    }
  }
  if (!features.allFinite()) throw DomainError("non-finite feature value");
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out;
  out.class_count = class_count;
  out.sample_shape = sample_shape;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t row = 0; row < indices.size(); ++row) {
    out.features.row(static_cast<Eigen::Index>(row)) =
        features.row(static_cast<Eigen::Index>(indices[row]));
    out.labels.push_back(labels[indices[row]]);
  }
  return out;
}

void FlipSpec::validate(std::size_t class_count) const {
  if (source_class == target_class) {
    throw ConfigError("flip source and target class must differ");
  }
  if (source_class >= class_count || target_class >= class_count) {
    throw ConfigError("flip classes must be below the class count " +
                      std::to_string(class_count));
  }
  if (!(flip_fraction > 0.0 && flip_fraction <= 1.0)) {
    throw ConfigError("flip_fraction must lie in (0, 1]");
  }
}

FlipResult apply_label_flip(const Dataset& data, const FlipSpec& spec,
                            std::uint64_t seed) {
  return apply_label_flips(data, std::span<const FlipSpec>(&spec, 1), seed);
}

FlipResult apply_label_flips(const Dataset& data, std::span<const FlipSpec> specs,
                             std::uint64_t seed) {
  FlipResult result{data, 0, {}};
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const FlipSpec& spec = specs[s];
    spec.validate(data.class_count);

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
      if (data.labels[i] == spec.source_class) eligible.push_back(i);
    }
    if (eligible.empty()) {
      result.warnings.push_back("no samples of class " +
                                std::to_string(spec.source_class) +
                                "; flip skipped");
      continue;
    }
    const auto picks = static_cast<std::size_t>(
        std::lround(spec.flip_fraction * static_cast<double>(eligible.size())));
    Rng rng(derive_seed(seed, {s}));
    std::shuffle(eligible.begin(), eligible.end(), rng);
    for (std::size_t k = 0; k < picks; ++k) {
      result.data.labels[eligible[k]] = spec.target_class;
    }
    result.flipped += picks;
  }
  return result;
}

bool PoisonPlan::is_poisoned(std::size_t client) const {
  return std::binary_search(poisoned_client_ids.begin(),
                            poisoned_client_ids.end(), client);
}

std::size_t planted_count(double gamma, std::size_t clients) {
  return static_cast<std::size_t>(
      std::lround(gamma * static_cast<double>(clients)));
}

PoisonPlan make_poison_plan(std::size_t clients, double gamma,
                            const FlipSpec& flip, bool bidirectional,
                            std::uint64_t seed) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must lie in [0, 1)");
  }
  const std::size_t planted = planted_count(gamma, clients);
  if (2 * planted >= clients) {
    throw ConfigError("gamma: " + std::to_string(planted) + " poisoned of " +
                      std::to_string(clients) +
                      " clients violates the honest-majority bound (< M/2)");
  }
  PoisonPlan plan;
  plan.gamma = gamma;
  plan.specs.push_back(flip);
  if (bidirectional) {
    plan.specs.push_back(
        FlipSpec{flip.target_class, flip.source_class, flip.flip_fraction});
  }
  std::vector<std::size_t> ids(clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(planted);
  std::sort(ids.begin(), ids.end());
  plan.poisoned_client_ids = std::move(ids);
  return plan;
}

namespace {

constexpr double kBlobSeparation = 4.0;

// Center k lies on axis (k mod dim), alternating sign every `dim` classes and
// moving further out after every 2*dim classes.
std::vector<double> blob_center(std::size_t k, std::size_t dim) {
  std::vector<double> c(dim, 0.0);
  const double sign = ((k / dim) % 2 == 0) ? 1.0 : -1.0;
  const double ring = 1.0 + static_cast<double>(k / (2 * dim));
  c[k % dim] = sign * kBlobSeparation * ring;
  return c;
}

}  // namespace

Dataset synth_blobs(std::size_t class_count, std::size_t per_class,
                    std::size_t dim, double spread, std::uint64_t seed) {
  if (class_count < 2) throw DomainError("synth_blobs needs >= 2 classes");
  if (dim < 1) throw DomainError("synth_blobs needs dim >= 1");
  if (!(spread >= 0.0)) throw DomainError("spread must be non-negative");

  Dataset out;
  out.class_count = class_count;
  out.sample_shape = {static_cast<std::uint32_t>(dim)};
  out.features.resize(static_cast<Eigen::Index>(class_count * per_class),
                      static_cast<Eigen::Index>(dim));
  out.labels.reserve(class_count * per_class);

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < class_count; ++k) {
    const auto center = blob_center(k, dim);
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (std::size_t d = 0; d < dim; ++d) {
        out.features(row, static_cast<Eigen::Index>(d)) =
            center[d] + spread * noise(rng);
      }
      out.labels.push_back(static_cast<std::uint32_t>(k));
    }
  }
  return out;
}

std::vector<Dataset> partition_iid(const Dataset& data, std::size_t clients,
                                   std::uint64_t seed) {
  if (clients == 0) throw DomainError("partition_iid needs at least one client");
  if (clients > data.size()) {
    throw DomainError("more clients than samples");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t base = data.size() / clients;
  const std::size_t extra = data.size() % clients;
  std::vector<Dataset> shards;
  shards.reserve(clients);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < clients; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    shards.push_back(data.select(std::span(order).subspan(offset, len)));
    offset += len;
  }
  return shards;
}

namespace {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const char* what)
      : bytes_(bytes), what_(what) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t offset() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string(what_) + ": truncated payload", pos_);
    }
  }

  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset parse_idx(std::span<const std::uint8_t> images,
                  std::span<const std::uint8_t> labels,
                  std::size_t class_count) {
  ByteReader img(images, "IDX images");
  if (img.u32() != kImagesMagic) throw ParseError("IDX images: bad magic", 0);
  const std::uint32_t count = img.u32();
  const std::uint32_t rows = img.u32();
  const std::uint32_t cols = img.u32();
  const std::size_t pixels = std::size_t{rows} * cols;

  ByteReader lab(labels, "IDX labels");
  if (lab.u32() != kLabelsMagic) throw ParseError("IDX labels: bad magic", 0);
  const std::size_t label_count_offset = lab.offset();
  const std::uint32_t label_count = lab.u32();
  if (label_count != count) {
    throw ParseError("IDX labels: count " + std::to_string(label_count) +
                         " does not match image count " + std::to_string(count),
                     label_count_offset);
  }

  Dataset out;
  out.sample_shape = {rows, cols};
  out.features.resize(count, static_cast<Eigen::Index>(pixels));
  for (std::uint32_t i = 0; i < count; ++i) {
    auto px = img.take(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      out.features(i, static_cast<Eigen::Index>(p)) = px[p] / 255.0;
    }
  }
  auto raw = lab.take(count);
  out.labels.assign(raw.begin(), raw.end());

  std::size_t inferred = 0;
  for (auto l : out.labels) inferred = std::max<std::size_t>(inferred, l + 1u);
  if (class_count == 0) {
    out.class_count = inferred;
  } else if (inferred > class_count) {
    throw ParseError("IDX labels: label exceeds class count",
                     label_count_offset + 4);
  } else {
    out.class_count = class_count;
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::size_t class_count) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return parse_idx(images, labels, class_count);
}

std::vector<std::uint8_t> serialize_idx_images(const Dataset& data) {
  if (data.sample_shape.size() != 2) {
    throw ShapeError("IDX images need a {rows, cols} sample shape");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + static_cast<std::size_t>(data.features.size()));
  put_u32(out, kImagesMagic);
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  put_u32(out, data.sample_shape[0]);
  put_u32(out, data.sample_shape[1]);
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index p = 0; p < data.features.cols(); ++p) {
      const double v = std::round(data.features(i, p) * 255.0);
      out.push_back(static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const Dataset& data) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + data.size());
  put_u32(out, kLabelsMagic);
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  for (auto l : data.labels) out.push_back(static_cast<std::uint8_t>(l));
  return out;
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "label";
  for (std::size_t d = 0; d < data.feature_dim(); ++d) out << ",f" << d;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (Eigen::Index d = 0; d < data.features.cols(); ++d) {
      out << ',' << data.features(static_cast<Eigen::Index>(i), d);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace fedshield::data
