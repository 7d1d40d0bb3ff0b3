#pragma once

#include <nlohmann/json.hpp>

#include "fluxnet/datagen.hpp"
#include "fluxnet/processing.hpp"
#include "fluxnet/trainer.hpp"
#include "fluxnet/vnet.hpp"

namespace fluxnet {

// JSON conversion for the configuration structs. Parsing starts from the
// struct defaults, overrides the keys present and throws ConfigError on
// unknown keys or wrong types.

void to_json(nlohmann::json& j, const VNetConfig& c);
void from_json(const nlohmann::json& j, VNetConfig& c);

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);

void to_json(nlohmann::json& j, const StandardizationStats& s);
void from_json(const nlohmann::json& j, StandardizationStats& s);

/// Throws ConfigError if `j` is not an object or has a key outside `allowed`.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const char* where);

}  // namespace fluxnet
