#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mlm {

struct SplitRatios {
    double train = 0.90;
    double validation = 0.05;
    double test = 0.05;

    void validate() const;
};

/// Person ids assigned to training, validation and test.
struct PersonSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

/// Seeded random split over persons. Validation and test each receive
/// max(1, round(ratio * P)) persons; the rest are training persons. Each list is
/// returned sorted. Requires at least three persons.
PersonSplit split_persons(std::vector<std::string> persons, std::uint64_t seed, const SplitRatios& ratios = {});

} // namespace mlm
