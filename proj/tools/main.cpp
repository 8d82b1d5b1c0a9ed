#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

// comma-free mode list for CSV cells
std::string join_modes(const std::vector<int>& modes) {
  std::string out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(modes[i]);
  }
  return out;
}

}  // namespace

#include <CLI11.hpp>

#include "gmewit/config.hpp"
#include "gmewit/stats.hpp"
#include "gmewit/version.hpp"

namespace {

using gmewit::config::json;
using gmewit::config::RunConfig;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gmewit::ValidationError("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw gmewit::ValidationError("cannot write file: " + path);
  out << content;
}

// Leftover `--a.b.c value` arguments become config overrides.
void apply_remaining(json& doc, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& key = extras[i];
    if (key.rfind("--", 0) != 0) {
      throw gmewit::ValidationError("unexpected argument: " + key);
    }
    if (i + 1 >= extras.size()) {
      throw gmewit::ValidationError("override " + key + " is missing a value");
    }
    gmewit::config::apply_override(doc, key.substr(2), extras[++i]);
  }
}

json result_envelope(const std::string& command, const RunConfig& cfg) {
  json out;
  out["schema_version"] = gmewit::kResultSchemaVersion;
  out["library"]["name"] = gmewit::kLibraryName;
  out["library"]["version"] = gmewit::kLibraryVersion;
  out["command"] = command;
  out["config"] = gmewit::config::to_json(cfg);
  return out;
}

json partition_json(const gmewit::bisep::Bipartition& part) {
  json out;
  out["g1"] = part.g1;
  out["g2"] = part.g2();
  return out;
}

json bound_json(const gmewit::bisep::BoundResult& bound) {
  json out;
  out["value"] = bound.value;
  out["argmax"]["partition"] = partition_json(bound.argmax_partition);
  out["argmax"]["angle"] = bound.argmax_angle;
  out["argmax"]["alpha"] = bound.argmax_alpha;
  json rows = json::array();
  for (const auto& row : bound.per_partition) {
    json r;
    r["partition"] = partition_json(row.partition);
    r["value"] = row.value;
    r["angle"] = row.angle;
    rows.push_back(std::move(r));
  }
  out["per_partition"] = std::move(rows);
  return out;
}

json triple_json(const gmewit::witness::ObservableTriple& t) {
  json out;
  out["o"] = t.o;
  out["z"] = t.z;
  out["s"] = t.s;
  out["p0"] = t.p0;
  out["p_star"] = t.p_star;
  return out;
}

std::string csv_escape(const json& cell) {
  if (cell.is_string()) return cell.get<std::string>();
  return cell.dump();
}

// Rows of flat objects -> CSV with a fixed column order.
std::string to_csv(const std::vector<std::string>& columns, const json& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << columns[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out << (i ? "," : "") << csv_escape(row.at(columns[i]));
    }
    out << "\n";
  }
  return out.str();
}

struct CommonArgs {
  std::string config_path;
  std::string out_path = "result.json";
  std::string csv_path;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "JSON configuration file")->required();
  cmd->add_option("--out", args.out_path, "result file (default result.json)");
  cmd->add_option("--csv", args.csv_path, "CSV export path");
  cmd->allow_extras();
}

RunConfig load_config(CLI::App* cmd, const CommonArgs& args) {
  json doc = gmewit::config::parse_strict(read_file(args.config_path));
  apply_remaining(doc, cmd->remaining());
  return gmewit::config::validate_config(doc);
}

void emit(const CommonArgs& args, const RunConfig& cfg, json result,
          const std::vector<std::string>& csv_columns = {},
          const json& csv_rows = json::array()) {
  write_file(args.out_path, result.dump(2) + "\n");
  std::string csv_path = args.csv_path;
  if (csv_path.empty() && cfg.output_format == "json+csv" && !csv_columns.empty()) {
    csv_path = "curve.csv";
  }
  if (!csv_path.empty() && !csv_columns.empty()) {
    write_file(csv_path, to_csv(csv_columns, csv_rows));
  }
  std::cerr << "wrote " << args.out_path << "\n";
}

// Tuned or fixed parameters, depending on the config.
gmewit::witness::WitnessParams resolve_params(const RunConfig& cfg, json* result) {
  if (cfg.lambda && cfg.mu) {
    if (result) (*result)["tuned"] = false;
    return cfg.params();
  }
  gmewit::expsim::TuneGrid grid;
  grid.refine = 3;
  auto tuned = gmewit::expsim::tune_params(cfg.source, cfg.alpha, grid, cfg.conventions());
  if (result) (*result)["tuned"] = true;
  double lambda = cfg.lambda.value_or(tuned.lambda);
  double mu = cfg.mu.value_or(tuned.mu);
  return {cfg.parties, lambda, mu};
}

int run_bound(CLI::App* cmd, const CommonArgs& args) {
  RunConfig cfg = load_config(cmd, args);
  json result;
  auto params = resolve_params(cfg, &result);
  gmewit::bisep::WorstCaseOptions options;
  options.symmetric_partitions = cfg.symmetric_bipartitions;
  auto bound = gmewit::bisep::worst_case_bound(params, cfg.alpha, options);
  result.update(bound_json(bound));
  result["lambda"] = params.lambda;
  result["mu"] = params.mu;

  json envelope = result_envelope("bound", cfg);
  envelope["result"] = result;
  json csv_rows = json::array();
  for (const auto& row : bound.per_partition) {
    json r;
    r["g1"] = join_modes(row.partition.g1);
    r["size_g1"] = row.partition.g1.size();
    r["value"] = row.value;
    r["angle"] = row.angle;
    csv_rows.push_back(std::move(r));
  }
  emit(args, cfg, envelope, {"g1", "size_g1", "value", "angle"}, csv_rows);
  return 0;
}

int run_simulate(CLI::App* cmd, const CommonArgs& args) {
  RunConfig cfg = load_config(cmd, args);
  json result;
  auto params = resolve_params(cfg, &result);
  auto report = gmewit::expsim::evaluate(cfg.source, params, cfg.alpha, cfg.conventions());
  result["triple"] = triple_json(report.triple);
  result["bound"] = bound_json(report.bound);
  result["dark_penalty"] = report.dark_penalty;
  result["violation"] = report.violation;
  result["lambda"] = params.lambda;
  result["mu"] = params.mu;
  json envelope = result_envelope("simulate", cfg);
  envelope["result"] = result;
  emit(args, cfg, envelope);
  return 0;
}

int run_sample(CLI::App* cmd, const CommonArgs& args, long long n, long long m, long long l) {
  RunConfig cfg = load_config(cmd, args);
  json result;
  auto params = resolve_params(cfg, &result);
  gmewit::expsim::TrialRequest counts{n, m, l};
  auto trials =
      gmewit::expsim::sample_trials(cfg.source, params, cfg.alpha, cfg.conventions(), counts,
                                    cfg.seed);
  result["o_bar"] = trials.o_bar;
  result["z_bar"] = trials.z_bar;
  result["s_bar"] = trials.s_bar;
  result["n"] = trials.n;
  result["m"] = trials.m;
  result["l"] = trials.l;
  result["seed"] = trials.seed;
  result["lambda"] = params.lambda;
  result["mu"] = params.mu;
  json envelope = result_envelope("sample", cfg);
  envelope["result"] = result;
  emit(args, cfg, envelope);
  return 0;
}

gmewit::stats::TrialCounts load_trials(const std::string& path) {
  json doc = gmewit::config::parse_strict(read_file(path));
  if (doc.contains("result")) doc = doc["result"];  // accept `sample` output directly
  gmewit::stats::TrialCounts counts;
  for (const char* key : {"o_bar", "z_bar", "s_bar", "n", "m", "l"}) {
    if (!doc.contains(key)) {
      throw gmewit::ValidationError(std::string("trials file: missing '") + key + "'");
    }
  }
  counts.o_bar = doc["o_bar"].get<double>();
  counts.z_bar = doc["z_bar"].get<double>();
  counts.s_bar = doc["s_bar"].get<double>();
  counts.n = doc["n"].get<long long>();
  counts.m = doc["m"].get<long long>();
  counts.l = doc["l"].get<long long>();
  if (doc.contains("seed")) counts.seed = doc["seed"].get<std::uint64_t>();
  return counts;
}

int run_pvalue(CLI::App* cmd, const CommonArgs& args, const std::string& trials_path,
               double bound) {
  RunConfig cfg = load_config(cmd, args);
  auto params = cfg.params();
  auto counts = load_trials(trials_path);
  auto ranges = gmewit::stats::ranges(params, gmewit::witness::F_coeffs(cfg.alpha), cfg.sigma);
  double log10_p = gmewit::stats::log10_p_value(counts, bound, ranges);

  json result;
  result["t"] = counts.o_bar + counts.z_bar + counts.s_bar - bound;
  result["log10_p"] = log10_p;
  result["bound"] = bound;
  result["ranges"]["delta_o"] = ranges.delta_o;
  result["ranges"]["delta_z"] = ranges.delta_z;
  result["ranges"]["delta_s"] = ranges.delta_s;
  result["counts"]["o_bar"] = counts.o_bar;
  result["counts"]["z_bar"] = counts.z_bar;
  result["counts"]["s_bar"] = counts.s_bar;
  result["counts"]["n"] = counts.n;
  result["counts"]["m"] = counts.m;
  result["counts"]["l"] = counts.l;
  json envelope = result_envelope("pvalue", cfg);
  envelope["result"] = result;
  emit(args, cfg, envelope);
  return 0;
}

int run_subsets(CLI::App* cmd, const CommonArgs& args) {
  RunConfig cfg = load_config(cmd, args);
  std::optional<gmewit::witness::WitnessParams> fixed;
  if (cfg.lambda && cfg.mu) fixed = cfg.params();
  gmewit::expsim::TuneGrid grid;
  grid.refine = 3;
  auto rows = gmewit::expsim::subset_analysis(cfg.source, fixed, cfg.alpha,
                                              cfg.conventions(), grid);
  json result;
  json jrows = json::array();
  for (const auto& row : rows) {
    json r;
    r["subset"] = row.subset;
    r["size"] = row.size;
    r["lambda"] = row.lambda;
    r["mu"] = row.mu;
    r["value"] = row.value;
    r["bound"] = row.bound;
    r["violation"] = row.violation;
    r["one_minus_p0"] = row.one_minus_p0;
    jrows.push_back(std::move(r));
  }
  result["rows"] = jrows;
  json envelope = result_envelope("subsets", cfg);
  envelope["result"] = result;

  json csv_rows = json::array();
  for (const auto& row : rows) {
    json r;
    r["subset"] = join_modes(row.subset);
    r["size"] = row.size;
    r["lambda"] = row.lambda;
    r["mu"] = row.mu;
    r["value"] = row.value;
    r["bound"] = row.bound;
    r["violation"] = row.violation;
    r["one_minus_p0"] = row.one_minus_p0;
    csv_rows.push_back(std::move(r));
  }
  emit(args, cfg, envelope,
       {"subset", "size", "lambda", "mu", "value", "bound", "violation", "one_minus_p0"},
       csv_rows);
  return 0;
}

int run_scan_n(CLI::App* cmd, const CommonArgs& args, int n_min, int n_max) {
  RunConfig cfg = load_config(cmd, args);
  if (n_max == 0) n_max = cfg.parties;
  gmewit::expsim::ScanOptions options;
  if (cfg.lambda && cfg.mu) options.fixed_params = cfg.params();
  auto curve = gmewit::expsim::scan_parties(cfg.source, cfg.alpha, n_min, n_max,
                                            cfg.conventions(), options);
  json result;
  json rows = json::array();
  for (const auto& point : curve) {
    json r;
    r["N"] = point.parties;
    r["lambda"] = point.lambda;
    r["mu"] = point.mu;
    r["value"] = point.value;
    r["bound"] = point.bound;
    r["penalty"] = point.penalty;
    r["violation"] = point.violation;
    rows.push_back(std::move(r));
  }
  result["rows"] = rows;
  result["last_positive_N"] = gmewit::expsim::last_positive_parties(curve);
  json envelope = result_envelope("scan-n", cfg);
  envelope["result"] = result;
  emit(args, cfg, envelope,
       {"N", "lambda", "mu", "value", "bound", "penalty", "violation"}, rows);
  return 0;
}

std::vector<double> parse_grid_spec(const std::string& spec) {
  // "lo:hi:count" or comma-separated values
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double lo, hi;
    int count;
    char c1, c2;
    std::istringstream in(spec);
    if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1) {
      throw gmewit::ValidationError("malformed grid spec: " + spec);
    }
    for (int i = 0; i < count; ++i) {
      out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }
    return out;
  }
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw gmewit::ValidationError("empty grid spec");
  return out;
}

int run_scan_eta(CLI::App* cmd, const CommonArgs& args, const std::string& eta_spec,
                 std::vector<std::string> case_specs, int max_n) {
  RunConfig cfg = load_config(cmd, args);
  std::vector<double> etas = parse_grid_spec(eta_spec);
  std::vector<gmewit::expsim::EtaScanCase> cases;
  if (case_specs.empty()) {
    cases.push_back({cfg.source.p, cfg.source.p_dc});
  } else {
    for (const auto& spec : case_specs) {
      auto values = parse_grid_spec(spec);
      if (values.size() != 2) {
        throw gmewit::ValidationError("case spec must be 'p,p_dc': " + spec);
      }
      cases.push_back({values[0], values[1]});
    }
  }
  gmewit::expsim::EtaScanOptions options;
  options.max_parties = max_n;
  options.alpha = cfg.alpha.nominal[0];
  auto rows = gmewit::expsim::scan_eta(cfg.source, etas, cases, cfg.conventions(), options);

  json result;
  json jrows = json::array();
  for (const auto& row : rows) {
    json r;
    r["eta"] = row.eta;
    r["p"] = row.p;
    r["p_dc"] = row.p_dc;
    r["n_max"] = row.n_max_parties;
    r["capped"] = row.capped;
    jrows.push_back(std::move(r));
  }
  result["rows"] = jrows;
  json envelope = result_envelope("scan-eta", cfg);
  envelope["result"] = result;
  emit(args, cfg, envelope, {"eta", "p", "p_dc", "n_max", "capped"}, jrows);
  return 0;
}

int run_tune(CLI::App* cmd, const CommonArgs& args, const std::string& lambda_spec,
             const std::string& mu_spec, int refine) {
  RunConfig cfg = load_config(cmd, args);
  gmewit::expsim::TuneGrid grid;
  if (!lambda_spec.empty()) {
    auto v = parse_grid_spec(lambda_spec);
    if (v.size() != 3) throw gmewit::ValidationError("--lambda-grid must be lo,hi,count");
    grid.lambda_min = v[0];
    grid.lambda_max = v[1];
    grid.lambda_points = static_cast<int>(v[2]);
  }
  if (!mu_spec.empty()) {
    auto v = parse_grid_spec(mu_spec);
    if (v.size() != 3) throw gmewit::ValidationError("--mu-grid must be lo,hi,count");
    grid.mu_min = v[0];
    grid.mu_max = v[1];
    grid.mu_points = static_cast<int>(v[2]);
  }
  grid.refine = refine;
  auto tuned = gmewit::expsim::tune_params(cfg.source, cfg.alpha, grid, cfg.conventions());
  json result;
  result["lambda"] = tuned.lambda;
  result["mu"] = tuned.mu;
  result["violation"] = tuned.violation;
  result["grid"]["lambda_min"] = grid.lambda_min;
  result["grid"]["lambda_max"] = grid.lambda_max;
  result["grid"]["lambda_points"] = grid.lambda_points;
  result["grid"]["mu_min"] = grid.mu_min;
  result["grid"]["mu_max"] = grid.mu_max;
  result["grid"]["mu_points"] = grid.mu_points;
  result["grid"]["refine"] = grid.refine;
  json envelope = result_envelope("tune", cfg);
  envelope["result"] = result;
  emit(args, cfg, envelope);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GME witness pipeline for single-photon path-entangled states"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gmewit::kLibraryVersion));

  CommonArgs bound_args, simulate_args, sample_args, pvalue_args, subsets_args;
  CommonArgs scan_n_args, scan_eta_args, tune_args;

  auto* bound = app.add_subcommand("bound", "Biseparable bound with per-partition table");
  add_common(bound, bound_args);

  auto* simulate = app.add_subcommand("simulate", "Witness evaluation on the source model");
  add_common(simulate, simulate_args);

  auto* sample = app.add_subcommand("sample", "Monte Carlo trials of the three observables");
  add_common(sample, sample_args);
  long long trials_n = 100000, trials_m = 100000, trials_l = 100000;
  sample->add_option("--n", trials_n, "o-trials (default 1e5)");
  sample->add_option("--m", trials_m, "z-trials (default 1e5)");
  sample->add_option("--l", trials_l, "s-trials (default 1e5)");

  auto* pvalue = app.add_subcommand("pvalue", "Hoeffding p-value from trial averages");
  add_common(pvalue, pvalue_args);
  std::string trials_path;
  double pvalue_bound = 0.0;
  pvalue->add_option("--trials", trials_path, "trials JSON (from `sample`)")->required();
  pvalue->add_option("--bound", pvalue_bound, "biseparable bound w_bisep^max")->required();

  auto* subsets = app.add_subcommand("subsets", "Witness on every subset of parties");
  add_common(subsets, subsets_args);

  auto* scan_n = app.add_subcommand("scan-n", "Violation as a function of N");
  add_common(scan_n, scan_n_args);
  int n_min = 2, n_max = 0;
  scan_n->add_option("--n-min", n_min, "smallest N (default 2)");
  scan_n->add_option("--n-max", n_max, "largest N (default: config N)");

  auto* scan_eta = app.add_subcommand("scan-eta", "Largest violating N per transmission");
  add_common(scan_eta, scan_eta_args);
  std::string eta_spec = "0.1:1.0:10";
  std::vector<std::string> case_specs;
  int max_n = 64;
  scan_eta->add_option("--eta-grid", eta_spec, "eta grid, lo:hi:count or comma list");
  scan_eta->add_option("--case", case_specs, "p,p_dc pair (repeatable)");
  scan_eta->add_option("--max-n", max_n, "party cap for the climb (default 64)");

  auto* tune = app.add_subcommand("tune", "Grid search for lambda and mu");
  add_common(tune, tune_args);
  std::string lambda_spec, mu_spec;
  int refine = 0;
  tune->add_option("--lambda-grid", lambda_spec, "lo,hi,count (default 0.1,100,40)");
  tune->add_option("--mu-grid", mu_spec, "lo,hi,count (default 1,1e4,40)");
  tune->add_option("--refine", refine, "local refinement rounds (default 0)");

  try {
    app.parse(argc, argv);
    if (bound->parsed()) return run_bound(bound, bound_args);
    if (simulate->parsed()) return run_simulate(simulate, simulate_args);
    if (sample->parsed()) {
      return run_sample(sample, sample_args, trials_n, trials_m, trials_l);
    }
    if (pvalue->parsed()) {
      return run_pvalue(pvalue, pvalue_args, trials_path, pvalue_bound);
    }
    if (subsets->parsed()) return run_subsets(subsets, subsets_args);
    if (scan_n->parsed()) return run_scan_n(scan_n, scan_n_args, n_min, n_max);
    if (scan_eta->parsed()) {
      return run_scan_eta(scan_eta, scan_eta_args, eta_spec, case_specs, max_n);
    }
    if (tune->parsed()) return run_tune(tune, tune_args, lambda_spec, mu_spec, refine);
    return 1;
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const gmewit::DimensionGuardError& err) {
    std::cerr << "guard error: " << err.what() << "\n";
    return 2;
  } catch (const gmewit::ValidationError& err) {
    std::cerr << "validation error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return 3;
  }
}
