#include "cepstra/cost.hpp"

#include <bit>
#include <string>

#include "cepstra/error.hpp"

namespace cepstra {

std::uint64_t estimate_cost(const CostParams& p) {
  if (p.channels < 1 || p.frame_len < 1 || p.filters < 1 || p.coeffs < 1) {
    throw DomainError("cost: every parameter must be >= 1");
  }
  if (!std::has_single_bit(p.frame_len) || p.frame_len < 2) {
    throw DomainError("cost: frame length " + std::to_string(p.frame_len) + " is not a power of two >= 2");
  }
  const auto log2n = static_cast<std::uint64_t>(std::countr_zero(p.frame_len));
  std::uint64_t fft = 0, mel = 0, dct = 0, per_channel = 0, total = 0;
  const bool overflow = __builtin_mul_overflow(p.frame_len / 2, log2n, &fft) ||
                        __builtin_mul_overflow(p.filters, p.frame_len, &mel) ||
                        __builtin_mul_overflow(p.filters, p.coeffs, &dct) ||
                        __builtin_add_overflow(fft, mel, &per_channel) ||
                        __builtin_add_overflow(per_channel, dct, &per_channel) ||
                        __builtin_mul_overflow(per_channel, p.channels, &total);
  if (overflow) throw DomainError("cost: result overflows 64 bits");
  return total;
}

}  // namespace cepstra
