#include "gmewit/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gmewit::config {

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ValidationError("config: unknown key '" + where + key + "'");
    }
  }
}

double number_field(const json& obj, const std::string& where, const std::string& key,
                    double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ValidationError("config: '" + where + key + "' must be a number");
  }
  return obj[key].get<double>();
}

std::vector<double> broadcast(const json& value, int n, const std::string& field) {
  std::vector<double> out;
  if (value.is_number()) {
    out.assign(n, value.get<double>());
  } else if (value.is_array()) {
    if (static_cast<int>(value.size()) != n) {
      throw ValidationError("config: '" + field + "' must have N entries");
    }
    for (const auto& v : value) {
      if (!v.is_number()) throw ValidationError("config: '" + field + "' must be numeric");
      out.push_back(v.get<double>());
    }
  } else {
    throw ValidationError("config: '" + field + "' must be a number or an array");
  }
  return out;
}

std::optional<double> param_field(const json& doc, const std::string& key) {
  if (!doc.contains(key)) return std::nullopt;  // default: tune
  const json& v = doc[key];
  if (v.is_string()) {
    if (v.get<std::string>() != "tune") {
      throw ValidationError("config: '" + key + "' must be a positive number or \"tune\"");
    }
    return std::nullopt;
  }
  if (!v.is_number()) {
    throw ValidationError("config: '" + key + "' must be a positive number or \"tune\"");
  }
  double x = v.get<double>();
  if (!(x > 0.0)) throw ValidationError("config: '" + key + "' must be positive");
  return x;
}

}  // namespace

expsim::Conventions RunConfig::conventions() const {
  expsim::Conventions conv;
  conv.sigma = sigma;
  conv.symmetric_bipartitions = symmetric_bipartitions;
  conv.symmetric_modes = alpha.uniform_values() &&
                         (!source.per_mode_eta ||
                          std::all_of(source.per_mode_eta->begin(), source.per_mode_eta->end(),
                                      [&](double e) {
                                        return e == source.per_mode_eta->front();
                                      }));
  return conv;
}

witness::WitnessParams RunConfig::params() const {
  if (!lambda) throw ValidationError("config: 'lambda' must be numeric for this command");
  if (!mu) throw ValidationError("config: 'mu' must be numeric for this command");
  return {parties, *lambda, *mu};
}

json parse_strict(const std::string& text) {
  std::vector<std::set<std::string>> stack;
  json::parser_callback_t cb = [&stack](int /*depth*/, json::parse_event_t event,
                                        json& parsed) {
    if (event == json::parse_event_t::object_start) {
      stack.emplace_back();
    } else if (event == json::parse_event_t::object_end) {
      stack.pop_back();
    } else if (event == json::parse_event_t::key) {
      if (!stack.back().insert(parsed.get<std::string>()).second) {
        throw ValidationError("config: duplicate key '" + parsed.get<std::string>() + "'");
      }
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("config: ") + err.what());
  }
}

RunConfig validate_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: document must be a JSON object");
  require_keys(doc, "", {"N", "n_max", "alpha", "lambda", "mu", "source", "conventions",
                         "seed", "output_format"});

  RunConfig cfg;
  if (!doc.contains("N")) throw ValidationError("config: 'N' is required");
  if (!doc["N"].is_number_integer()) throw ValidationError("config: 'N' must be an integer");
  cfg.parties = doc["N"].get<int>();
  if (cfg.parties < 2) throw ValidationError("config: 'N' must be >= 2");

  if (doc.contains("n_max")) {
    if (!doc["n_max"].is_number_integer() || doc["n_max"].get<int>() < 1) {
      throw ValidationError("config: 'n_max' must be a positive integer");
    }
    cfg.n_max = doc["n_max"].get<int>();
  }

  // alpha: number shorthand or {nominal, min, max}, scalars broadcast.
  double default_alpha = witness::alpha_f_zero();
  json alpha = doc.contains("alpha") ? doc["alpha"] : json(default_alpha);
  if (alpha.is_number() || alpha.is_array()) {
    json obj;
    obj["nominal"] = alpha;
    alpha = obj;
  }
  if (!alpha.is_object()) {
    throw ValidationError("config: 'alpha' must be a number, an array, or an object");
  }
  require_keys(alpha, "alpha.", {"nominal", "min", "max"});
  cfg.alpha.nominal = broadcast(alpha.contains("nominal") ? alpha["nominal"]
                                                          : json(default_alpha),
                                cfg.parties, "alpha.nominal");
  cfg.alpha.box_min = alpha.contains("min")
                          ? broadcast(alpha["min"], cfg.parties, "alpha.min")
                          : cfg.alpha.nominal;
  cfg.alpha.box_max = alpha.contains("max")
                          ? broadcast(alpha["max"], cfg.parties, "alpha.max")
                          : cfg.alpha.nominal;
  try {
    cfg.alpha.validate();
  } catch (const ValidationError& err) {
    throw ValidationError(std::string("config: 'alpha' invalid: ") + err.what());
  }

  cfg.lambda = param_field(doc, "lambda");
  cfg.mu = param_field(doc, "mu");

  json source = doc.contains("source") ? doc["source"] : json::object();
  if (!source.is_object()) throw ValidationError("config: 'source' must be an object");
  require_keys(source, "source.",
               {"p", "eta", "per_mode_eta", "p_dc", "herald_dark_fraction"});
  cfg.source.parties = cfg.parties;
  cfg.source.n_max = cfg.n_max;
  cfg.source.p = number_field(source, "source.", "p", 5e-3);
  cfg.source.eta = number_field(source, "source.", "eta", 0.3);
  cfg.source.p_dc = number_field(source, "source.", "p_dc", 0.0);
  cfg.source.herald_dark_fraction =
      number_field(source, "source.", "herald_dark_fraction", 0.0);
  if (source.contains("per_mode_eta") && !source["per_mode_eta"].is_null()) {
    cfg.source.per_mode_eta =
        broadcast(source["per_mode_eta"], cfg.parties, "source.per_mode_eta");
  }
  try {
    cfg.source.validate();
  } catch (const ValidationError& err) {
    throw ValidationError(std::string("config: 'source' invalid: ") + err.what());
  }

  json conv = doc.contains("conventions") ? doc["conventions"] : json::object();
  if (!conv.is_object()) throw ValidationError("config: 'conventions' must be an object");
  require_keys(conv, "conventions.", {"sigma", "symmetric_bipartitions"});
  if (conv.contains("sigma") && !conv["sigma"].is_string()) {
    throw ValidationError("config: 'conventions.sigma' must be a string");
  }
  std::string sigma = conv.contains("sigma") ? conv["sigma"].get<std::string>()
                                             : "conservative";
  if (sigma == "conservative") {
    cfg.sigma = witness::SigmaConvention::conservative;
  } else if (sigma == "paper-tables") {
    cfg.sigma = witness::SigmaConvention::paper_tables;
  } else {
    throw ValidationError(
        "config: 'conventions.sigma' must be \"conservative\" or \"paper-tables\"");
  }
  bool uniform = cfg.alpha.uniform_values() &&
                 (!cfg.source.per_mode_eta ||
                  std::all_of(cfg.source.per_mode_eta->begin(),
                              cfg.source.per_mode_eta->end(), [&](double e) {
                                return e == cfg.source.per_mode_eta->front();
                              }));
  if (!conv.contains("symmetric_bipartitions") ||
      (conv["symmetric_bipartitions"].is_string() &&
       conv["symmetric_bipartitions"].get<std::string>() == "auto")) {
    cfg.symmetric_bipartitions = uniform;
  } else if (conv["symmetric_bipartitions"].is_boolean()) {
    cfg.symmetric_bipartitions = conv["symmetric_bipartitions"].get<bool>();
    if (cfg.symmetric_bipartitions && !uniform) {
      throw ValidationError(
          "config: 'conventions.symmetric_bipartitions' requires uniform amplitudes "
          "and transmissions");
    }
  } else {
    throw ValidationError(
        "config: 'conventions.symmetric_bipartitions' must be a boolean or \"auto\"");
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      throw ValidationError("config: 'seed' must be a non-negative integer");
    }
    long long seed = doc["seed"].get<long long>();
    if (seed < 0) throw ValidationError("config: 'seed' must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }

  if (doc.contains("output_format")) {
    if (!doc["output_format"].is_string()) {
      throw ValidationError("config: 'output_format' must be a string");
    }
    std::string fmt = doc["output_format"].get<std::string>();
    if (fmt != "json" && fmt != "json+csv") {
      throw ValidationError("config: 'output_format' must be \"json\" or \"json+csv\"");
    }
    cfg.output_format = fmt;
  }
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json doc;
  doc["N"] = cfg.parties;
  doc["n_max"] = cfg.n_max;
  doc["alpha"]["nominal"] = cfg.alpha.nominal;
  doc["alpha"]["min"] = cfg.alpha.box_min;
  doc["alpha"]["max"] = cfg.alpha.box_max;
  doc["lambda"] = cfg.lambda ? json(*cfg.lambda) : json("tune");
  doc["mu"] = cfg.mu ? json(*cfg.mu) : json("tune");
  doc["source"]["p"] = cfg.source.p;
  doc["source"]["eta"] = cfg.source.eta;
  doc["source"]["p_dc"] = cfg.source.p_dc;
  doc["source"]["herald_dark_fraction"] = cfg.source.herald_dark_fraction;
  if (cfg.source.per_mode_eta) doc["source"]["per_mode_eta"] = *cfg.source.per_mode_eta;
  doc["conventions"]["sigma"] = sigma_name(cfg.sigma);
  doc["conventions"]["symmetric_bipartitions"] = cfg.symmetric_bipartitions;
  doc["seed"] = cfg.seed;
  doc["output_format"] = cfg.output_format;
  return doc;
}

void apply_override(json& doc, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ValidationError("config: empty override key");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted_key.find('.', start);
    std::string part = dotted_key.substr(start, dot - start);
    if (part.empty()) throw ValidationError("config: malformed override key " + dotted_key);
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::parse_error&) {
        parsed = value;  // bare strings stay strings
      }
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::string sigma_name(witness::SigmaConvention conv) {
  return conv == witness::SigmaConvention::conservative ? "conservative" : "paper-tables";
}

}  // namespace gmewit::config
