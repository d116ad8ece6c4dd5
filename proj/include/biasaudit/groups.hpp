#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace biasaudit {

enum class Race { Asian, Black, Latino, MiddleEastern, White };
enum class Gender { Man, Woman, Nonbinary };
enum class Markedness { Marked, Unmarked };

struct Pronouns {
  std::string_view subject;
  std::string_view object;
  std::string_view possessive;
};

// One demographic persona cell. Markedness, pronouns and display phrasing are
// all functions of (race, gender), so only those two are stored.
struct GroupSpec {
  Race race{};
  Gender gender{};

  Markedness race_markedness() const {
    return race == Race::White ? Markedness::Unmarked : Markedness::Marked;
  }
  Markedness gender_markedness() const {
    return gender == Gender::Man ? Markedness::Unmarked : Markedness::Marked;
  }

  Pronouns pronouns() const;

  // "Asian women", "White men", "Latino nonbinary people"
  std::string phrase() const;

  // "asian_woman", used in file names and failure logs
  std::string slug() const;

  // "Asian Woman", used in report tables
  std::string display() const;

  auto operator<=>(const GroupSpec&) const = default;
};

// All 15 cells in canonical order: race-major, then gender.
const std::array<GroupSpec, 15>& all_groups();

// Labels as stored in corpus files. Parsing is strict; display variants
// ("Middle-Eastern") are accepted only by the lenient flag parsers below.
std::string_view to_label(Race race);
std::string_view to_label(Gender gender);
std::optional<Race> parse_race(std::string_view label);
std::optional<Gender> parse_gender(std::string_view label);

// Lenient parsers for CLI input: case-insensitive, hyphens/spaces ignored.
std::optional<Race> parse_race_flexible(std::string_view text);
std::optional<Gender> parse_gender_flexible(std::string_view text);

// "Middle-Eastern" instead of the file label "MiddleEastern".
std::string_view display_name(Race race);
std::string_view display_name(Gender gender);

}  // namespace biasaudit
