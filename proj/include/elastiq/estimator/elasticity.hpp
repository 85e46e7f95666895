#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "elastiq/data/dataset.hpp"

namespace elastiq {

/// Entries of an elasticity vector: own-elasticity e_0 and the cross
/// elasticities e_1..e_8 of the following eight periods.
inline constexpr int kElasticityLength = 9;

using Elasticities = std::array<double, kElasticityLength>;

struct ElasticityVector {
    std::size_t anchor = 0; // dataset index T_c
    data::LocalTime anchor_time;
    Elasticities e{};
};

} // namespace elastiq
