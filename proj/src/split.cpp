#include "mlm/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mlm/error.hpp"

namespace mlm {

void SplitRatios::validate() const {
    if (!(train > 0.0) || !(validation >= 0.0) || !(test >= 0.0)) {
        throw InvalidArgument("split ratios must be non-negative with a positive training share");
    }
    if (std::abs(train + validation + test - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
}

PersonSplit split_persons(std::vector<std::string> persons, std::uint64_t seed, const SplitRatios& ratios) {
    ratios.validate();
    const auto n = persons.size();
    if (n < 3) throw InvalidArgument("person split needs at least 3 persons, got " + std::to_string(n));
    std::sort(persons.begin(), persons.end());
    if (std::adjacent_find(persons.begin(), persons.end()) != persons.end()) {
        throw InvalidArgument("person split: duplicate person ids");
    }

    auto share = [n](double r) {
        return r > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(r * static_cast<double>(n)))) : 0;
    };
    const std::size_t n_val = share(ratios.validation);
    const std::size_t n_test = share(ratios.test);
    if (n_val + n_test >= n) throw InvalidArgument("person split leaves no training persons");

    std::mt19937_64 rng(seed);
    std::shuffle(persons.begin(), persons.end(), rng);

    PersonSplit out;
    out.seed = seed;
    out.validation.assign(persons.begin(), persons.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.test.assign(persons.begin() + static_cast<std::ptrdiff_t>(n_val),
                    persons.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
    out.train.assign(persons.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), persons.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

} // namespace mlm
