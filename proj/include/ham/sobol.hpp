#pragma once

// Sobol low-discrepancy points in up to 9 dimensions, gray-code order,
// 32-bit digits. Randomization is a per-dimension XOR digital shift, which
// preserves the digital net structure of the point set.

#include <cstdint>
#include <span>
#include <vector>

namespace ham::qmc {

inline constexpr int k_sobol_max_dim = 9;
inline constexpr int k_sobol_bits = 32;

class SobolSequence {
  public:
    explicit SobolSequence(int dim);

    int dim() const { return dim_; }

    // Raw 32-bit digits of point i (gray-code enumeration, point 0 is the
    // origin). `out` must have dim() entries.
    void point_bits(std::uint64_t i, std::span<std::uint32_t> out) const;

    // Point i mapped to (0,1)^dim after a digital shift: the shifted digits
    // are offset by half an ulp so coordinates never hit 0 or 1 exactly.
    void shifted_point(std::uint64_t i, std::span<const std::uint32_t> shift,
                       std::span<double> out) const;

  private:
    int dim_;
    // direction_[d][k] is direction number k of dimension d, msb-aligned.
    std::vector<std::uint32_t> direction_;
};

} // namespace ham::qmc
