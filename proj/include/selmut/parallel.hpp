#pragma once

#include <cstddef>
#include <functional>

namespace selmut {

/// Runs body(begin, end) over [0, n) split in chunks on at most `workers`
/// threads. Callers write disjoint outputs per index, so the result does not
/// depend on the worker count or the chunking.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise (tree) summation of term(0..n-1) in index order. The split
/// points depend only on n, so the rounding is reproducible.
template <class Term>
double pairwise_sum(std::size_t begin, std::size_t end, const Term& term) {
    constexpr std::size_t kLeaf = 16;
    if (end - begin <= kLeaf) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

template <class Term>
double pairwise_sum(std::size_t n, const Term& term) {
    return pairwise_sum(std::size_t{0}, n, term);
}

}  // namespace selmut
