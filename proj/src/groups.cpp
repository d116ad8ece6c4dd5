#include "biasaudit/groups.hpp"

#include <algorithm>
#include <cctype>

namespace biasaudit {

namespace {

constexpr std::array<Race, 5> kRaces = {Race::Asian, Race::Black, Race::Latino,
                                        Race::MiddleEastern, Race::White};
constexpr std::array<Gender, 3> kGenders = {Gender::Man, Gender::Woman, Gender::Nonbinary};

std::string fold(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u == '-' || u == '_' || u == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

std::string_view gender_plural(Gender gender) {
  switch (gender) {
    case Gender::Man: return "men";
    case Gender::Woman: return "women";
    case Gender::Nonbinary: return "nonbinary people";
  }
  return "";
}

}  // namespace

Pronouns GroupSpec::pronouns() const {
  switch (gender) {
    case Gender::Man: return {"he", "him", "his"};
    case Gender::Woman: return {"she", "her", "her"};
    case Gender::Nonbinary: return {"they", "them", "their"};
  }
  return {};
}

std::string GroupSpec::phrase() const {
  std::string out{display_name(race)};
  out += ' ';
  out += gender_plural(gender);
  return out;
}

std::string GroupSpec::slug() const {
  std::string out = fold(to_label(race));
  out += '_';
  out += fold(to_label(gender));
  return out;
}

std::string GroupSpec::display() const {
  std::string out{display_name(race)};
  out += ' ';
  out += to_label(gender);
  return out;
}

const std::array<GroupSpec, 15>& all_groups() {
  static const std::array<GroupSpec, 15> groups = [] {
    std::array<GroupSpec, 15> out{};
    std::size_t i = 0;
    for (Race race : kRaces)
      for (Gender gender : kGenders) out[i++] = GroupSpec{race, gender};
    return out;
  }();
  return groups;
}

std::string_view to_label(Race race) {
  switch (race) {
    case Race::Asian: return "Asian";
    case Race::Black: return "Black";
    case Race::Latino: return "Latino";
    case Race::MiddleEastern: return "MiddleEastern";
    case Race::White: return "White";
  }
  return "";
}

std::string_view to_label(Gender gender) {
  switch (gender) {
    case Gender::Man: return "Man";
    case Gender::Woman: return "Woman";
    case Gender::Nonbinary: return "Nonbinary";
  }
  return "";
}

std::optional<Race> parse_race(std::string_view label) {
  for (Race race : kRaces)
    if (label == to_label(race)) return race;
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view label) {
  for (Gender gender : kGenders)
    if (label == to_label(gender)) return gender;
  return std::nullopt;
}

std::optional<Race> parse_race_flexible(std::string_view text) {
  const std::string key = fold(text);
  for (Race race : kRaces)
    if (key == fold(to_label(race))) return race;
  if (key == "me") return Race::MiddleEastern;
  return std::nullopt;
}

std::optional<Gender> parse_gender_flexible(std::string_view text) {
  const std::string key = fold(text);
  for (Gender gender : kGenders)
    if (key == fold(to_label(gender))) return gender;
  if (key == "nb" || key == "enby") return Gender::Nonbinary;
  return std::nullopt;
}

std::string_view display_name(Race race) {
  return race == Race::MiddleEastern ? "Middle-Eastern" : to_label(race);
}

std::string_view display_name(Gender gender) { return to_label(gender); }

}  // namespace biasaudit
