#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "gmewit/expsim.hpp"

namespace gmewit::config {

using json = nlohmann::json;

// Fully resolved run configuration: scalars broadcast to per-mode arrays,
// defaults filled, "auto" choices decided.
struct RunConfig {
  int parties = 0;
  int n_max = 2;
  witness::DisplacementSpec alpha;
  std::optional<double> lambda;  // nullopt: "tune"
  std::optional<double> mu;
  expsim::SourceModel source;
  witness::SigmaConvention sigma = witness::SigmaConvention::conservative;
  bool symmetric_bipartitions = false;
  std::uint64_t seed = 1;
  std::string output_format = "json";

  expsim::Conventions conventions() const;
  // Requires numeric lambda and mu; names the missing field otherwise.
  witness::WitnessParams params() const;
};

// Parses JSON; rejects duplicate object keys.
json parse_strict(const std::string& text);

// Fills defaults and validates; errors name the offending field.  Validating
// an already-resolved document is the identity on its serialized form.
RunConfig validate_config(const json& doc);

// Resolved echo of the configuration.
json to_json(const RunConfig& cfg);

// Applies a `--a.b.c value` style override; the value is parsed as JSON when
// possible and taken as a string otherwise.
void apply_override(json& doc, const std::string& dotted_key, const std::string& value);

std::string sigma_name(witness::SigmaConvention conv);

}  // namespace gmewit::config
