#pragma once

#include <cstdint>

namespace cepstra {

struct CostParams {
  std::uint64_t channels = 7;      // C
  std::uint64_t frame_len = 2048;  // N, a power of two
  std::uint64_t filters = 40;      // M
  std::uint64_t coeffs = 12;       // L
};

/// Multiplications per frame set: C (N/2 log2 N + M N + M L). Throws DomainError.
std::uint64_t estimate_cost(const CostParams& params);

}  // namespace cepstra
