#ifndef SCSPARC_HADAMARD_HPP
#define SCSPARC_HADAMARD_HPP

#include <cstddef>
#include <span>

namespace scsparc {

// In-place fast Walsh-Hadamard transform (unnormalized, entries +/-1).
// data.size() must be a power of two.
inline void fwht(std::span<double> data) {
    const size_t n = data.size();
    for (size_t h = 1; h < n; h <<= 1) {
        for (size_t i = 0; i < n; i += h << 1) {
            for (size_t j = i; j < i + h; ++j) {
                const double x = data[j];
                const double y = data[j + h];
                data[j] = x + y;
                data[j + h] = x - y;
            }
        }
    }
}

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

} // namespace scsparc

#endif
