#include "mlm/labels.hpp"

#include <algorithm>

#include "mlm/error.hpp"

namespace mlm {

namespace {

constexpr std::array<std::string_view, 7> kEmotionNames = {
    "neutral", "anger", "disgust", "happiness", "fear", "sadness", "surprise"};

template <typename T>
std::optional<std::size_t> find_index(const std::vector<T>& v, const T& x) {
    auto it = std::find(v.begin(), v.end(), x);
    if (it == v.end()) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
}

} // namespace

std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<std::size_t>(e)]; }

std::optional<Emotion> parse_emotion(std::string_view s) {
    for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
        if (kEmotionNames[i] == s) return static_cast<Emotion>(i);
    }
    return std::nullopt;
}

std::string ExpressionLabel::str() const {
    if (is_neutral()) return std::string(to_string(emotion));
    return std::string(to_string(emotion)) + "-" + std::to_string(intensity);
}

void validate(const ExpressionLabel& e) {
    if (e.is_neutral() && e.intensity != 0) {
        throw DataError("neutral expression must have intensity 0, got " + std::to_string(e.intensity));
    }
    if (!e.is_neutral() && (e.intensity < 1 || e.intensity > kIntensityLevels)) {
        throw DataError("expression " + std::string(to_string(e.emotion)) + " has intensity " +
                        std::to_string(e.intensity) + ", expected 1.." + std::to_string(kIntensityLevels));
    }
}

std::vector<ExpressionLabel> canonical_expressions() {
    std::vector<ExpressionLabel> out{{Emotion::Neutral, 0}};
    for (Emotion e : kBasicEmotions) {
        for (int i = 1; i <= kIntensityLevels; ++i) out.push_back({e, i});
    }
    return out;
}

std::string_view to_string(Rotation r) { return r == Rotation::Left ? "left" : "right"; }

std::optional<Rotation> parse_rotation(std::string_view s) {
    if (s == "left") return Rotation::Left;
    if (s == "right") return Rotation::Right;
    return std::nullopt;
}

std::string CellLabel::str() const {
    return "(person " + person + ", " + expression.str() + ", " + std::string(to_string(rotation)) + ")";
}

std::optional<std::size_t> AxisLabels::person_index(std::string_view id) const {
    return find_index(persons, std::string(id));
}

std::optional<std::size_t> AxisLabels::expression_index(const ExpressionLabel& e) const {
    return find_index(expressions, e);
}

std::optional<std::size_t> AxisLabels::rotation_index(Rotation r) const { return find_index(rotations, r); }

std::optional<std::size_t> AxisLabels::neutral_index() const {
    return expression_index(ExpressionLabel{Emotion::Neutral, 0});
}

} // namespace mlm
