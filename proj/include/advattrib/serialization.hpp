#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "advattrib/defense.hpp"
#include "advattrib/models.hpp"
#include "advattrib/scaling.hpp"

namespace advattrib {

using Json = nlohmann::ordered_json;

Json to_json(const PipelineSpec& spec);
PipelineSpec pipeline_spec_from_json(const nlohmann::json& j);

Json to_json(const Pipeline& pipeline);
Pipeline pipeline_from_json(const nlohmann::json& j);

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Model artifact: kind, config, labels, pipeline, mask bits and flattened
/// weights. Doubles are written in shortest round-trip form.
Json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

Json to_json(const MaskBank& bank);
MaskBank bank_from_json(const nlohmann::json& j);

Json to_json(const NormalcyBaseline& baseline);
NormalcyBaseline baseline_from_json(const nlohmann::json& j);

std::string dump(const Json& j);
nlohmann::json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace advattrib
