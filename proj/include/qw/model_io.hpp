#pragma once

#include <string>

#include "qw/normality_model.hpp"

namespace qw {

inline constexpr int kModelSchemaVersion = 1;

/// Snapshot text (JSON). Field layout is documented in docs/model_format.md.
std::string serialize_model(const NormalityModel& model);
NormalityModel deserialize_model(const std::string& text);

void save_model(const NormalityModel& model, const std::string& path);
NormalityModel load_model(const std::string& path);

}  // namespace qw
