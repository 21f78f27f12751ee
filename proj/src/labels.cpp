#include "cepstra/labels.hpp"

#include <cmath>
#include <string>

#include "cepstra/error.hpp"
#include "cepstra/segment.hpp"

namespace cepstra {

namespace {
constexpr std::array<std::string_view, kClassLabelCount> kNames = {"clean",    "blinkHard", "lookUp",
                                                                   "lookDown", "lookLeft",  "lookRight"};
}

std::string_view to_string(ClassLabel label) { return kNames.at(static_cast<std::size_t>(label)); }

std::optional<ClassLabel> parse_class_label(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<ClassLabel>(i);
  }
  return std::nullopt;
}

EegSegment::EegSegment(std::vector<std::vector<double>> channels, double fs, std::vector<std::string> channel_names)
    : channels_(std::move(channels)), fs_(fs), names_(std::move(channel_names)) {
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw DomainError("segment: fs must be positive");
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    if (channels_[c].size() != channels_.front().size()) {
      throw DomainError("segment: channel " + std::to_string(c) + " has " + std::to_string(channels_[c].size()) +
                        " samples, channel 0 has " + std::to_string(channels_.front().size()));
    }
    for (double v : channels_[c]) {
      if (!std::isfinite(v)) throw DomainError("segment: non-finite sample in channel " + std::to_string(c));
    }
  }
  if (names_.empty()) {
    for (std::size_t c = 0; c < channels_.size(); ++c) names_.push_back("ch" + std::to_string(c + 1));
  } else if (names_.size() != channels_.size()) {
    throw DomainError("segment: " + std::to_string(names_.size()) + " channel names for " +
                      std::to_string(channels_.size()) + " channels");
  }
}

EegSegment EegSegment::scaled(double gain) const {
  auto copy = channels_;
  for (auto& ch : copy) {
    for (double& v : ch) v *= gain;
  }
  return EegSegment(std::move(copy), fs_, names_);
}

}  // namespace cepstra
