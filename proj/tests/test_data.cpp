#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "fedshield/data.hpp"
#include "fedshield/errors.hpp"
#include "idx_fixture.hpp"
#include "support.hpp"

namespace fedshield::data {
namespace {

using testing::kIdxImages;
using testing::kIdxLabels;

TEST(Idx, FixtureParsesToExpectedTensors) {
  const auto d = parse_idx(kIdxImages, kIdxLabels);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.feature_dim(), 6u);
  EXPECT_EQ(d.sample_shape, (std::vector<std::uint32_t>{2, 3}));
  EXPECT_EQ(d.labels, (std::vector<std::uint32_t>{0, 1, 2, 1}));
  EXPECT_EQ(d.class_count, 3u);
  for (int i = 0; i < 4; ++i) {
    for (int p = 0; p < 6; ++p) {
      EXPECT_EQ(d.features(i, p), testing::kIdxPixels[i][p] / 255.0);
    }
  }
  EXPECT_EQ(d.features(1, 0), 1.0);
}

TEST(Idx, ReserializesBitExactly) {
  const auto d = parse_idx(kIdxImages, kIdxLabels);
  EXPECT_EQ(serialize_idx_images(d), kIdxImages);
  EXPECT_EQ(serialize_idx_labels(d), kIdxLabels);
}

TEST(Idx, ErrorsCarryOffsets) {
  const std::vector<std::uint8_t> empty;
  try {
    parse_idx(empty, kIdxLabels);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }

  auto bad_magic = kIdxImages;
  bad_magic[3] = 0x01;
  try {
    parse_idx(bad_magic, kIdxLabels);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }

  const std::vector<std::uint8_t> truncated(kIdxImages.begin(), kIdxImages.end() - 3);
  try {
    parse_idx(truncated, kIdxLabels);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 34u);  // start of image 3
  }

  auto count_mismatch = kIdxLabels;
  count_mismatch[7] = 0x05;
  try {
    parse_idx(kIdxImages, count_mismatch);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }

  EXPECT_THROW(parse_idx(kIdxImages, kIdxLabels, 2), ParseError);
}

TEST(Blobs, CountsDeterminismAndZeroSpread) {
  const auto d = synth_blobs(2, 50, 2, 0.1, 9);
  EXPECT_EQ(d.size(), 100u);
  EXPECT_EQ(d.class_counts(), (std::vector<std::size_t>{50, 50}));
  EXPECT_EQ(synth_blobs(2, 50, 2, 0.1, 9).features, d.features);

  const auto z = synth_blobs(3, 5, 2, 0.0, 1);
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (z.labels[i] == z.labels[j]) {
        EXPECT_EQ(z.features.row(static_cast<Eigen::Index>(i)),
                  z.features.row(static_cast<Eigen::Index>(j)));
      }
    }
  }
}

TEST(Partition, ExactAndRemainderShards) {
  const auto d100 = synth_blobs(2, 50, 2, 1.0, 1);
  for (const auto& s : partition_iid(d100, 10, 3)) EXPECT_EQ(s.size(), 10u);

  std::vector<std::size_t> first101(101);
  std::iota(first101.begin(), first101.end(), std::size_t{0});
  const auto d101 = synth_blobs(2, 51, 2, 1.0, 1).select(first101);
  const auto shards = partition_iid(d101, 10, 3);
  std::vector<std::size_t> sizes;
  for (const auto& s : shards) sizes.push_back(s.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 10, 10, 10, 10, 10, 10, 10, 10, 11}));

  EXPECT_THROW(partition_iid(d100, 0, 1), Error);
  EXPECT_THROW(partition_iid(d100, 101, 1), Error);
}

TEST(LabelFlip, CountsAndIdentity) {
  const auto d = synth_blobs(2, 100, 2, 1.0, 5);
  const auto full = apply_label_flip(d, {0, 1, 1.0}, 1);
  EXPECT_EQ(full.flipped, 100u);
  EXPECT_EQ(full.data.class_counts()[0], 0u);

  const auto part = apply_label_flip(d, {0, 1, 0.4}, 1);
  EXPECT_EQ(part.flipped, 40u);
  EXPECT_EQ(part.data.class_counts()[1], 140u);

  const auto none = apply_label_flip(d, {0, 1, 0.001}, 1);
  EXPECT_EQ(none.flipped, 0u);
  EXPECT_EQ(none.data.labels, d.labels);
  EXPECT_EQ(none.data.features, d.features);
}

TEST(LabelFlip, BidirectionalSwapUsesOriginalLabels) {
  const auto d = synth_blobs(3, 10, 2, 1.0, 5);
  const std::vector<FlipSpec> specs{{0, 1, 1.0}, {1, 0, 1.0}};
  const auto r = apply_label_flips(d, specs, 2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto want = d.labels[i] == 0 ? 1u : d.labels[i] == 1 ? 0u : d.labels[i];
    EXPECT_EQ(r.data.labels[i], want);
  }
}

TEST(LabelFlip, MissingSourceWarnsAndValidates) {
  const auto d = synth_blobs(3, 10, 2, 1.0, 5);
  const auto only1 = d.select(std::vector<std::size_t>{10, 11, 12});
  const auto r = apply_label_flip(only1, {0, 2, 1.0}, 1);
  EXPECT_EQ(r.flipped, 0u);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_THROW((FlipSpec{0, 0, 1.0}.validate(3)), ConfigError);
  EXPECT_THROW((FlipSpec{0, 5, 1.0}.validate(3)), ConfigError);
  EXPECT_THROW((FlipSpec{0, 1, 1.5}.validate(3)), ConfigError);
}

TEST(PoisonPlan, RespectsMinorityBound) {
  const auto plan = make_poison_plan(20, 0.4, {0, 1, 1.0}, true, 3);
  EXPECT_EQ(plan.poisoned_client_ids.size(), 8u);
  EXPECT_TRUE(std::is_sorted(plan.poisoned_client_ids.begin(),
                             plan.poisoned_client_ids.end()));
  EXPECT_EQ(plan.specs.size(), 2u);
  EXPECT_THROW(make_poison_plan(20, 0.5, {0, 1, 1.0}, true, 3), ConfigError);
  EXPECT_EQ(make_poison_plan(20, 0.0, {0, 1, 1.0}, true, 3).poisoned_client_ids.size(), 0u);
  EXPECT_EQ(planted_count(0.4, 50), 20u);
}

TEST(Csv, HeaderAndRows) {
  const auto d = parse_idx(kIdxImages, kIdxLabels);
  std::ostringstream out;
  write_csv(d, out);
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "label,f0,f1,f2,f3,f4,f5");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(Property, PartitionConservesMultiset) {
  testing::Gen g(55);
  for (int i = 0; i < testing::kPropertyCases / 4; ++i) {
    const std::size_t n = testing::uniform_size(g, 10, 120);
    const std::size_t m = testing::uniform_size(g, 1, n);
    auto d = testing::random_dataset(g, n, 2, 3);
    const auto shards = partition_iid(d, m, g());
    std::vector<std::pair<double, std::uint32_t>> before, after;
    for (std::size_t r = 0; r < d.size(); ++r) {
      before.emplace_back(d.features(static_cast<Eigen::Index>(r), 0), d.labels[r]);
    }
    std::size_t lo = n, hi = 0;
    for (const auto& s : shards) {
      lo = std::min(lo, s.size());
      hi = std::max(hi, s.size());
      for (std::size_t r = 0; r < s.size(); ++r) {
        after.emplace_back(s.features(static_cast<Eigen::Index>(r), 0), s.labels[r]);
      }
    }
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    EXPECT_EQ(before, after);
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(Property, FlipCountFollowsRoundToNearest) {
  testing::Gen g(56);
  for (int i = 0; i < testing::kPropertyCases / 4; ++i) {
    const std::size_t per = testing::uniform_size(g, 1, 60);
    const double frac = testing::uniform(g, 0.0, 1.0);
    const auto d = synth_blobs(3, per, 2, 1.0, g());
    const auto r = apply_label_flip(d, {2, 0, frac}, g());
    EXPECT_EQ(r.flipped, static_cast<std::size_t>(std::lround(frac * per)));
    EXPECT_EQ(r.data.class_counts()[2], per - r.flipped);
  }
}

}  // namespace
}  // namespace fedshield::data
