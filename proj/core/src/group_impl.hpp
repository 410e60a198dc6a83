#pragma once

#include "carnot/group.hpp"

#include <mutex>
#include <vector>

namespace carnot::detail {

struct Entry {
    int i;
    int j;
    int k;
    double c;
    Rational exact;
};

struct GroupImpl {
    StrataSpec strata;
    int N = 0;
    int M = 0;
    int r = 0;
    std::vector<int> weights;
    std::vector<int> offsets;
    std::vector<Rational> c; // dense N*N*N, index (i*N + j)*N + k
    std::vector<Entry> entries;
    std::vector<unsigned> exponents; // 2 r! / weight

    mutable std::once_flag volume_once;
    mutable double volume = 0.0;

    const Rational& at(int i, int j, int k) const { return c[(static_cast<std::size_t>(i) * N + j) * N + k]; }
    Rational& at(int i, int j, int k) { return c[(static_cast<std::size_t>(i) * N + j) * N + k]; }
};

} // namespace carnot::detail
