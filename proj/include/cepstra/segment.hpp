#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cepstra/dsp.hpp"
#include "cepstra/labels.hpp"

namespace cepstra {

/// Fixed-duration multi-channel recording: the unit of classification.
/// Every channel has the same length; all samples are finite.
class EegSegment {
 public:
  EegSegment() = default;
  EegSegment(std::vector<std::vector<double>> channels, double fs,
             std::vector<std::string> channel_names = {});

  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t length() const noexcept { return channels_.empty() ? 0 : channels_.front().size(); }
  double fs() const noexcept { return fs_; }
  double duration_seconds() const noexcept { return static_cast<double>(length()) / fs_; }

  std::span<const double> channel(std::size_t c) const { return channels_.at(c); }
  Signal channel_signal(std::size_t c) const { return Signal(channels_.at(c), fs_); }
  const std::vector<std::vector<double>>& channels() const noexcept { return channels_; }
  const std::vector<std::string>& channel_names() const noexcept { return names_; }

  EegSegment scaled(double gain) const;

 private:
  std::vector<std::vector<double>> channels_;
  double fs_ = 1.0;
  std::vector<std::string> names_;
};

struct LabeledSegment {
  EegSegment segment;
  std::optional<ClassLabel> label;
  std::string name;   // file stem or generator id
  std::string split;  // "train", "validation" or empty
};

}  // namespace cepstra
