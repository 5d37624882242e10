#include "urbanpulse/folds.hpp"

#include <algorithm>

#include "urbanpulse/error.hpp"

namespace urbanpulse {

std::vector<MinuteRange> fold_ranges(MinuteRange span, const FoldSpec& spec) {
  std::vector<MinuteRange> ranges = spec.test_ranges;
  if (ranges.empty()) {
    if (spec.count < 1) throw SpecError("fold count must be at least 1");
    const std::int64_t days = span.length() / kMinutesPerDay;
    if (days < spec.count) throw SpecError("span shorter than one day per fold");
    for (int i = 0; i < spec.count; ++i) {
      const Minute b = span.begin + (days * i / spec.count) * kMinutesPerDay;
      const Minute e =
          i + 1 == spec.count ? span.end : span.begin + (days * (i + 1) / spec.count) * kMinutesPerDay;
      ranges.push_back({b, e});
    }
  }
  std::sort(ranges.begin(), ranges.end(),
            [](const MinuteRange& a, const MinuteRange& b) { return a.begin < b.begin; });
  Minute cursor = span.begin;
  for (const auto& r : ranges) {
    if (r.empty()) throw SpecError("empty fold test interval");
    if (r.begin < span.begin || r.end > span.end) throw SpecError("fold interval exceeds data span");
    if (r.begin < cursor) throw SpecError("fold test intervals overlap");
    if (r.begin > cursor) throw SpecError("fold test intervals leave a gap in the span");
    if (r == span) throw SpecError("fold covers the whole span, leaving no training data");
    cursor = r.end;
  }
  if (cursor != span.end) throw SpecError("fold test intervals do not cover the span");
  return ranges;
}

std::vector<Fold> slice_folds(const ActivityCube& cube, const FoldSpec& spec) {
  std::vector<Fold> folds;
  for (const auto& r : fold_ranges(cube.span(), spec)) {
    folds.push_back(Fold{r, cube.without(r), cube.restricted(r)});
  }
  return folds;
}

}  // namespace urbanpulse
