#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "msi/core/random.hpp"

namespace msi::sequencing {

/// Seeded uniform permutation (Fisher-Yates). The output multiset always
/// equals the input multiset.
template <class T>
std::vector<T> constrained_shuffle(std::vector<T> items, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = rng.index(i);
        using std::swap;
        swap(items[i - 1], items[j]);
    }
    return items;
}

}  // namespace msi::sequencing
