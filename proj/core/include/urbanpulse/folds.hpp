#pragma once

#include <vector>

#include "urbanpulse/activity.hpp"

namespace urbanpulse {

// Test intervals for k-fold temporal cross-validation. When `test_ranges` is
// empty the span is cut into `count` contiguous blocks of whole days; the
// last block absorbs any remainder.
struct FoldSpec {
  int count = 3;
  std::vector<MinuteRange> test_ranges;
};

struct Fold {
  MinuteRange test_range;
  ActivityCube train;  // full span, test minutes marked missing
  ActivityCube test;   // restricted to test_range
};

// Resolves the test interval of every fold. Throws SpecError if intervals
// overlap, leave the span, fail to cover it, or leave a fold without training
// minutes.
std::vector<MinuteRange> fold_ranges(MinuteRange span, const FoldSpec& spec);

std::vector<Fold> slice_folds(const ActivityCube& cube, const FoldSpec& spec);

}  // namespace urbanpulse
