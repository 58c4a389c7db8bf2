#include <algorithm>
#include <numeric>

#include "hapforge/core/error.hpp"
#include "hapforge/core/rng.hpp"
#include "hapforge/dataset.hpp"

namespace hapforge::dataset {

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  fail(ErrorKind::Validation, "unknown split '" + name + "'");
}

SplitSizes split_sizes(std::size_t n, const SplitRatio& ratio) {
  require(n >= 3, ErrorKind::Parameter, "splitting needs at least 3 samples");
  const std::size_t total = std::size_t{ratio.train} + ratio.val + ratio.test;
  require(ratio.train > 0 && ratio.val > 0 && ratio.test > 0, ErrorKind::Parameter,
          "every split ratio term must be positive");
  SplitSizes s;
  s.train = n * ratio.train / total;
  s.val = n * ratio.val / total;
  s.test = n - s.train - s.val;
  return s;
}

namespace {

// Fisher-Yates with an explicit modulus draw so the permutation does not depend on
// the standard library's distribution implementation.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

std::vector<Split> stratified_split(std::span<const std::size_t> class_of, const SplitRatio& ratio,
                                    std::uint64_t seed) {
  const std::size_t n = class_of.size();
  const SplitSizes sizes = split_sizes(n, ratio);
  Rng rng(derive_seed(seed, "split"));

  std::size_t n_classes = 0;
  for (std::size_t c : class_of) n_classes = std::max(n_classes, c + 1);
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < n; ++i) members[class_of[i]].push_back(i);

  std::vector<std::size_t> class_rank(n_classes);
  std::iota(class_rank.begin(), class_rank.end(), 0);
  shuffle(class_rank, rng);

  // Each unit gets the key (position + 1/2) / class size after an in-class shuffle.
  // Sorting by key interleaves classes proportionally, so any prefix holds every class
  // in (nearly) its overall share.
  struct Slot {
    std::size_t pos;
    std::size_t size;
    std::size_t rank;
    std::size_t unit;
  };
  std::vector<Slot> slots;
  slots.reserve(n);
  for (std::size_t c = 0; c < n_classes; ++c) {
    shuffle(members[c], rng);
    for (std::size_t k = 0; k < members[c].size(); ++k)
      slots.push_back({k, members[c].size(), class_rank[c], members[c][k]});
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    // Compare (a.pos + 1/2) / a.size with (b.pos + 1/2) / b.size exactly in integers.
    const std::size_t lhs = (2 * a.pos + 1) * b.size;
    const std::size_t rhs = (2 * b.pos + 1) * a.size;
    if (lhs != rhs) return lhs < rhs;
    return a.rank < b.rank;
  });

  std::vector<Split> out(n, Split::Test);
  for (std::size_t i = 0; i < n; ++i) {
    const Split s = i < sizes.train ? Split::Train : i < sizes.train + sizes.val ? Split::Val : Split::Test;
    out[slots[i].unit] = s;
  }
  return out;
}

std::vector<Split> split(std::size_t n, const SplitRatio& ratio, std::uint64_t seed) {
  const std::vector<std::size_t> one_class(n, 0);
  return stratified_split(one_class, ratio, seed);
}

}  // namespace hapforge::dataset
