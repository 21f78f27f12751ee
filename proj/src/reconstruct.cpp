// Cepstral edit -> time domain.
//
// Each frame's edited DCT vector is turned back into a target mel vector.
// The linear spectrum is rescaled by per-bin gains g = W^T lambda / colsum(W),
// with lambda solved so that the bank applied to the rescaled magnitudes hits
// the target exactly; bins outside every filter keep their magnitude. Original
// phases are reused, frames are recombined by weighted overlap-add and the
// pre-emphasis is undone. Overlapping frames interact, so the pass is repeated
// on the re-analysed signal until the edited coefficients sit on target.

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "cepstra/cepstrum.hpp"
#include "cepstra/error.hpp"

namespace cepstra {

namespace {

using Targets = std::vector<std::vector<std::pair<std::size_t, double>>>;  // per frame: (dim, value)

// Dense Gaussian elimination with partial pivoting; false when singular.
bool solve_dense(std::vector<double> a, std::vector<double>& b, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    }
    if (!(std::abs(a[pivot * n + col]) > 1e-300)) return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i * n + c] * b[c];
    b[i] = acc / a[i * n + i];
  }
  return true;
}

// Per-bin gains that move the bank output from state.mel_energies to target.
std::vector<double> mel_gains(const MelFilterBank& bank, const std::vector<double>& col_sums,
                              const CepstralFrameState& state, const std::vector<double>& target) {
  const std::size_t m_count = bank.size();
  const auto& mag = state.magnitudes;
  std::vector<double> a(m_count * m_count, 0.0);
  std::vector<double> rhs(m_count);
  for (std::size_t j = 0; j < m_count; ++j) {
    const auto& row_j = bank.filters[j];
    if (!(state.mel_energies[j] > 0.0)) {
      // Nothing to rescale in an empty band; pin its multiplier.
      a[j * m_count + j] = 1.0;
      rhs[j] = 1.0;
      continue;
    }
    rhs[j] = target[j];
    const std::size_t lo = j == 0 ? 0 : j - 1;
    const std::size_t hi = std::min(m_count - 1, j + 1);
    for (std::size_t m = lo; m <= hi; ++m) {
      double acc = 0.0;
      for (std::size_t i = 0; i < row_j.weights.size(); ++i) {
        const std::size_t k = row_j.first_bin + i;
        if (col_sums[k] <= 0.0) continue;
        acc += row_j.weights[i] * bank.weight(m, k) * mag[k] / col_sums[k];
      }
      a[j * m_count + m] = acc;
    }
  }

  std::vector<double> lambda = rhs;
  if (!solve_dense(a, lambda, m_count)) {
    // Fall back to the plain normalized transpose of the mel-domain ratio.
    for (std::size_t j = 0; j < m_count; ++j) {
      lambda[j] = state.mel_energies[j] > 0.0 ? target[j] / state.mel_energies[j] : 1.0;
    }
  }

  std::vector<double> gains(bank.bin_count, 1.0);
  std::vector<double> acc(bank.bin_count, 0.0);
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto& row = bank.filters[m];
    for (std::size_t i = 0; i < row.weights.size(); ++i) acc[row.first_bin + i] += row.weights[i] * lambda[m];
  }
  for (std::size_t k = 0; k < bank.bin_count; ++k) {
    if (col_sums[k] > 0.0) gains[k] = acc[k] / col_sums[k];
  }
  return gains;
}

struct ChannelOutcome {
  std::vector<double> samples;
  std::size_t iterations = 0;
  double residual = 0.0;
};

std::vector<FrameCepstrum> analyze_emphasized(const CepstralAnalyzer& an, std::span<const double> emphasized,
                                              std::size_t frames) {
  const auto& cfg = an.config();
  std::vector<FrameCepstrum> out;
  out.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) out.push_back(an.analyze_frame(emphasized.subspan(f * cfg.hop, cfg.frame_len)));
  return out;
}

double target_residual(const std::vector<FrameCepstrum>& frames, const Targets& targets) {
  double worst = 0.0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (const auto& [dim, value] : targets[f]) {
      worst = std::max(worst, std::abs(frames[f].state.full_dct[dim] - value));
    }
  }
  return worst;
}

// One synthesis pass: current emphasized signal + its analysis -> edited signal.
std::vector<double> synthesis_pass(const CepstralAnalyzer& an, const std::vector<double>& col_sums,
                                   const std::vector<double>& current, const std::vector<FrameCepstrum>& frames,
                                   const Targets& targets) {
  const auto& cfg = an.config();
  const auto& bank = an.bank();
  const auto& dct = an.dct();
  std::vector<std::vector<double>> synthesized;
  synthesized.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const CepstralFrameState& st = frames[f].state;
    std::vector<double> edited = st.full_dct;
    for (const auto& [dim, value] : targets[f]) edited[dim] = value;

    const auto log_before = dct.inverse(st.full_dct);
    const auto log_after = dct.inverse(edited);
    std::vector<double> target(bank.size());
    for (std::size_t m = 0; m < bank.size(); ++m) {
      target[m] = st.mel_energies[m] * std::exp(log_after[m] - log_before[m]);
    }
    const auto gains = mel_gains(bank, col_sums, st, target);

    std::vector<std::complex<double>> half(bank.bin_count);
    for (std::size_t k = 0; k < bank.bin_count; ++k) half[k] = std::polar(st.magnitudes[k] * gains[k], st.phases[k]);
    synthesized.push_back(an.fft().inverse_real(half));
  }

  auto out = overlap_add(synthesized, cfg.hop, an.window(), current.size());
  const auto covered = overlap_coverage(frames.size(), cfg.hop, an.window(), current.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (!covered[t]) out[t] = current[t];
  }
  return out;
}

ChannelOutcome reconstruct_channel(const CepstralAnalyzer& an, const std::vector<double>& col_sums,
                                   std::span<const double> raw, const CepstralEdit& edit, std::size_t channel,
                                   const ReconstructionOptions& options) {
  const auto& cfg = an.config();
  const Signal emphasized = pre_emphasize(Signal({raw.begin(), raw.end()}, cfg.fs), cfg.beta);
  const std::size_t count = frame_count(emphasized.size(), cfg.frame_len, cfg.hop);
  std::vector<double> current(emphasized.samples().begin(), emphasized.samples().end());
  auto frames = analyze_emphasized(an, current, count);

  // Targets are fixed by the original analysis.
  Targets targets(count);
  for (std::size_t f = 0; f < count; ++f) {
    for (const DimEdit& e : edit.edits) {
      if (e.channel && *e.channel != channel) continue;
      const double original = frames[f].state.full_dct[e.dim];
      switch (e.kind) {
        case DimEdit::Kind::keep:
          break;
        case DimEdit::Kind::zero:
          targets[f].emplace_back(e.dim, 0.0);
          break;
        case DimEdit::Kind::affine:
          targets[f].emplace_back(e.dim, e.scale * original + e.offset);
          break;
      }
    }
  }

  ChannelOutcome out;
  const std::size_t max_iter = std::max<std::size_t>(1, options.max_iterations);
  for (std::size_t it = 0; it < max_iter; ++it) {
    current = synthesis_pass(an, col_sums, current, frames, targets);
    frames = analyze_emphasized(an, current, count);
    out.iterations = it + 1;
    out.residual = target_residual(frames, targets);
    if (out.residual <= options.tolerance) break;
  }
  for (double v : current) {
    if (!std::isfinite(v)) throw NumericalError("reconstruct_segment: synthesis produced a non-finite sample");
  }
  const Signal restored = de_emphasize(Signal(std::move(current), cfg.fs), cfg.beta);
  out.samples.assign(restored.samples().begin(), restored.samples().end());
  return out;
}

}  // namespace

ReconstructionResult reconstruct_segment(const EegSegment& segment, const CepstralEdit& edit,
                                         const CepstralAnalyzer& analyzer, const ReconstructionOptions& options) {
  const auto& cfg = analyzer.config();
  for (const DimEdit& e : edit.edits) {
    if (e.dim >= cfg.num_filters) {
      throw DomainError("reconstruct_segment: edit references DCT dimension " + std::to_string(e.dim) +
                        " outside [0, " + std::to_string(cfg.num_filters) + ")");
    }
    if (e.channel && *e.channel >= segment.channel_count()) {
      throw DomainError("reconstruct_segment: edit references channel " + std::to_string(*e.channel) +
                        " but the segment has " + std::to_string(segment.channel_count()));
    }
    if (e.kind == DimEdit::Kind::affine && !(std::isfinite(e.scale) && std::isfinite(e.offset))) {
      throw DomainError("reconstruct_segment: affine edit with non-finite parameters");
    }
  }
  if (std::abs(segment.fs() - cfg.fs) > 1e-9 * cfg.fs) {
    throw ConfigError("reconstruct_segment: segment fs differs from configured fs");
  }
  const auto col_sums = analyzer.bank().column_sums();

  ReconstructionResult result;
  std::vector<std::vector<double>> channels;
  channels.reserve(segment.channel_count());
  for (std::size_t c = 0; c < segment.channel_count(); ++c) {
    auto outcome = reconstruct_channel(analyzer, col_sums, segment.channel(c), edit, c, options);
    result.iterations = std::max(result.iterations, outcome.iterations);
    result.max_residual = std::max(result.max_residual, outcome.residual);
    channels.push_back(std::move(outcome.samples));
  }
  result.converged = result.max_residual <= options.tolerance;
  result.segment = EegSegment(std::move(channels), segment.fs(), segment.channel_names());
  return result;
}

}  // namespace cepstra
