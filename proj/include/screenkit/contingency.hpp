#pragma once

#include <cstddef>

namespace screenkit {

struct ContingencyTable {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t positives() const { return tp + fn; }
    std::size_t negatives() const { return fp + tn; }
    std::size_t total() const { return tp + fp + tn + fn; }

    bool operator==(const ContingencyTable&) const = default;
};

} // namespace screenkit
