#include "ham/sobol.hpp"

#include <stdexcept>

#include "ham/errors.hpp"

namespace ham::qmc {

namespace {

// Primitive polynomial data for dimensions 2..9 (dimension 1 is the van der
// Corput sequence in base 2 and needs no table): polynomial degree s,
// encoded inner coefficients a, and initial odd direction integers m.
struct DimensionSeed {
    int s;
    std::uint32_t a;
    std::uint32_t m[5];
};

const DimensionSeed k_seeds[8] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
};

} // namespace

SobolSequence::SobolSequence(int dim) : dim_(dim) {
    if (dim < 1 || dim > k_sobol_max_dim) {
        throw ConfigError("sobol dimension must be in [1, 9]");
    }
    direction_.assign(static_cast<std::size_t>(dim) * k_sobol_bits, 0);
    for (int d = 0; d < dim; ++d) {
        std::uint32_t* v = &direction_[static_cast<std::size_t>(d) * k_sobol_bits];
        if (d == 0) {
            for (int k = 0; k < k_sobol_bits; ++k) {
                v[k] = 1u << (31 - k);
            }
            continue;
        }
        const DimensionSeed& seed = k_seeds[d - 1];
        const int s = seed.s;
        for (int k = 0; k < s; ++k) {
            v[k] = seed.m[k] << (31 - k);
        }
        for (int k = s; k < k_sobol_bits; ++k) {
            std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
            for (int j = 1; j < s; ++j) {
                if ((seed.a >> (s - 1 - j)) & 1u) {
                    value ^= v[k - j];
                }
            }
            v[k] = value;
        }
    }
}

void SobolSequence::point_bits(std::uint64_t i,
                               std::span<std::uint32_t> out) const {
    if (out.size() != static_cast<std::size_t>(dim_)) {
        throw std::invalid_argument("point_bits output span has wrong size");
    }
    std::uint64_t gray = i ^ (i >> 1);
    for (int d = 0; d < dim_; ++d) {
        out[d] = 0;
    }
    const std::uint32_t* base = direction_.data();
    for (int k = 0; gray != 0 && k < k_sobol_bits; ++k, gray >>= 1) {
        if (gray & 1u) {
            for (int d = 0; d < dim_; ++d) {
                out[d] ^= base[static_cast<std::size_t>(d) * k_sobol_bits + k];
            }
        }
    }
}

void SobolSequence::shifted_point(std::uint64_t i,
                                  std::span<const std::uint32_t> shift,
                                  std::span<double> out) const {
    if (shift.size() != static_cast<std::size_t>(dim_) ||
        out.size() != static_cast<std::size_t>(dim_)) {
        throw std::invalid_argument("shifted_point span has wrong size");
    }
    std::uint32_t bits[k_sobol_max_dim];
    point_bits(i, std::span<std::uint32_t>(bits, static_cast<std::size_t>(dim_)));
    for (int d = 0; d < dim_; ++d) {
        out[d] = (double(bits[d] ^ shift[d]) + 0.5) * 0x1p-32;
    }
}

} // namespace ham::qmc
