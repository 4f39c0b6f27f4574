#pragma once

// JSON conversions shared by the model, config and dataset formats.
// Internal: only translation units include this.

#include "file_io.hpp"
#include "linear_svm.hpp"

#include "json.hpp"

namespace thumbtrak::svm {

nlohmann::json model_to_json(const LinearModel &m);
LinearModel model_from_json_value(const nlohmann::json &j);

} // namespace thumbtrak::svm
