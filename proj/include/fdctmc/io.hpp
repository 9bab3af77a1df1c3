#pragma once

#include <optional>
#include <string>

#include "fdctmc/model.hpp"
#include "fdctmc/policy.hpp"

namespace fdctmc {

/// A model file carries either a rate matrix or a uniformized (lambda, P)
/// pair; exactly one of the two.
struct ParsedModel {
    std::optional<RateModel> rate;
    std::optional<FdCtmc> uniform;

    /// Uniformize when needed.
    FdCtmc to_fdctmc() const;
};

/// Parse and validate a model document. Errors carry a JSON-pointer-style
/// location ("/P/3", "/costs/R/idle0", ...).
ParsedModel parse_model(const std::string& json_text);

std::string serialize_model(const RateModel& m);
std::string serialize_model(const FdCtmc& c);

/// Delay file: {"delays": {state: seconds}} or a bare {state: seconds}
/// object; synthesized report files are accepted directly.
DelayFunction parse_delays(const std::string& json_text, const FdCtmc& c,
                           const StateClassification& cls);

/// Report document; numbers carry 9 significant digits, keys in fixed order.
std::string report_to_json(const SynthesisReport& rep, const DiscretizationParams& params,
                           const FdCtmc& c);

int cli_main(int argc, char** argv);

}  // namespace fdctmc
