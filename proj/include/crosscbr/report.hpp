#pragma once

#include <string>

#include <json.hpp>

#include "crosscbr/evaluator.hpp"
#include "crosscbr/objectives.hpp"
#include "crosscbr/trainer.hpp"

namespace crosscbr {

using Json = nlohmann::ordered_json;

/// {"step":…, "bpr":…, "cl_u":…, "cl_b":…, "l2":…, "total":…}
Json to_json(const StepRecord& rec);
Json to_json(const EpochRecord& rec);
Json to_json(const MetricsReport& report);
Json to_json(const AlignmentDispersionReport& report);

/// Aligned text table with columns view / metric / K / value.
std::string to_table(const MetricsReport& report);
std::string to_table(const AlignmentDispersionReport& report);
/// view,metric,k,value rows with a header line.
std::string to_csv(const MetricsReport& report);

}  // namespace crosscbr
