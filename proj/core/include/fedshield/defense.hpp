#pragma once

#include <cstddef>
#include <vector>

namespace fedshield {

enum class DefenseMode { kNone, kLmtv, kKlad };

// Partition of the submitting clients into kept and removed.
struct Verdict {
  std::vector<std::size_t> benign_ids;   // ascending
  std::vector<std::size_t> flagged_ids;  // ascending
};

}  // namespace fedshield
