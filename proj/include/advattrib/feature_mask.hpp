#pragma once

#include <bitset>
#include <string>
#include <string_view>
#include <vector>

#include "advattrib/corpus.hpp"

namespace advattrib {

/// One bit per alphabet character; set bits select the features a model sees.
using FeatureMask = std::bitset<kAlphabetSize>;

inline FeatureMask full_mask() {
    return FeatureMask{}.set();
}

inline std::size_t count_active(const FeatureMask& mask) {
    return mask.count();
}

/// Element-wise product of the mask with the feature values.
FeatureVector apply_mask(const FeatureMask& mask, const FeatureVector& v);

/// Indices of the set bits, ascending.
std::vector<std::size_t> active_indices(const FeatureMask& mask);

/// 95 characters of '0'/'1'; character j is feature j.
std::string mask_to_string(const FeatureMask& mask);
FeatureMask mask_from_string(std::string_view bits);

}  // namespace advattrib
