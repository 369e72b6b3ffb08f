#pragma once

#include <cstdint>
#include <string>

#include "sparseseg/annot.hpp"
#include "sparseseg/core.hpp"

namespace sparseseg {

enum class ChangeDirection : std::uint8_t { Increase, Decrease, Flat };

const std::string& direction_name(ChangeDirection d);

struct ClassChange {
    std::int64_t count_t1 = 0;
    std::int64_t count_t2 = 0;
    std::int64_t delta_count = 0;
    double mean_t1 = 0.0;
    double mean_t2 = 0.0;
    double delta_mean = 0.0;
    double sum_t1 = 0.0;
    double sum_t2 = 0.0;
    double delta_sum = 0.0;
    ChangeDirection direction = ChangeDirection::Flat;
};

struct ChangeReport {
    ClassChange waterhole;
    ClassChange omuti;
    ClassChange bigtree;

    const ClassChange& row(ClassId c) const;
};

// Per-class deltas between two epochs of stats; direction follows the sign
// of the mean-area delta with a 0.005 m2 flat band.
ChangeReport compare_epochs(const ClassStats& t1, const ClassStats& t2);

std::string change_to_csv(const ChangeReport& report);
std::string change_to_json(const ChangeReport& report);

}  // namespace sparseseg
