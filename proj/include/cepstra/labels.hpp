#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace cepstra {

/// Relax-state EEG plus the five eye-movement artifact origins.
enum class ClassLabel : int {
  clean = 0,
  blink_hard = 1,
  look_up = 2,
  look_down = 3,
  look_left = 4,
  look_right = 5,
};

inline constexpr std::size_t kClassLabelCount = 6;

inline constexpr std::array<ClassLabel, kClassLabelCount> kAllClassLabels = {
    ClassLabel::clean,     ClassLabel::blink_hard, ClassLabel::look_up,
    ClassLabel::look_down, ClassLabel::look_left,  ClassLabel::look_right};

/// Wire names: clean, blinkHard, lookUp, lookDown, lookLeft, lookRight.
std::string_view to_string(ClassLabel label);
std::optional<ClassLabel> parse_class_label(std::string_view name);

inline bool is_artifact(ClassLabel label) { return label != ClassLabel::clean; }

}  // namespace cepstra
