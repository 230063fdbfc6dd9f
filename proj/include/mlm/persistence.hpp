#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "mlm/model.hpp"

namespace mlm {

using AnyModel = std::variant<TensorModel, StackedModel>;

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary model file: magic "MLMMODEL", version, kind, then every submodel's
/// labels, standardizer, core, factors and singular values, and a CRC-32 trailer.
std::vector<std::uint8_t> serialize_model(const AnyModel& model);
AnyModel deserialize_model(std::span<const std::uint8_t> bytes, const std::string& what = "model");

void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

/// Treat a single model as a stacked model with one style spanning all coordinates.
StackedModel as_stacked(const AnyModel& model);

} // namespace mlm
