#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlm {

/// Neutral plus the six basic emotions, in vocabulary order.
enum class Emotion : unsigned char { Neutral = 0, Anger, Disgust, Happiness, Fear, Sadness, Surprise };

inline constexpr std::array<Emotion, 6> kBasicEmotions = {
    Emotion::Anger, Emotion::Disgust, Emotion::Happiness, Emotion::Fear, Emotion::Sadness, Emotion::Surprise};

inline constexpr int kIntensityLevels = 4;

std::string_view to_string(Emotion e);
std::optional<Emotion> parse_emotion(std::string_view s);

/// Expression level: neutral carries intensity 0, emotions carry 1..4.
struct ExpressionLabel {
    Emotion emotion = Emotion::Neutral;
    int intensity = 0;

    bool is_neutral() const { return emotion == Emotion::Neutral; }
    std::string str() const;  // "neutral" or e.g. "happiness-2"

    auto operator<=>(const ExpressionLabel&) const = default;
};

/// Throws DataError if emotion and intensity are inconsistent.
void validate(const ExpressionLabel& e);

/// The canonical 25 expressions: neutral, then each emotion at intensities 1..4.
std::vector<ExpressionLabel> canonical_expressions();

/// Head rotation of a sample; only the two recorded poses exist.
enum class Rotation : unsigned char { Left = 0, Right = 1 };

std::string_view to_string(Rotation r);
std::optional<Rotation> parse_rotation(std::string_view s);

/// Labels of one latent code (one column of a dataset).
struct CellLabel {
    std::string person;
    ExpressionLabel expression;
    Rotation rotation = Rotation::Left;

    std::string str() const;
    bool operator==(const CellLabel&) const = default;
};

/// Ordered label sets along the person, expression and rotation modes.
struct AxisLabels {
    std::vector<std::string> persons;
    std::vector<ExpressionLabel> expressions;
    std::vector<Rotation> rotations;

    bool operator==(const AxisLabels&) const = default;

    std::optional<std::size_t> person_index(std::string_view id) const;
    std::optional<std::size_t> expression_index(const ExpressionLabel& e) const;
    std::optional<std::size_t> rotation_index(Rotation r) const;
    std::optional<std::size_t> neutral_index() const;
};

} // namespace mlm
