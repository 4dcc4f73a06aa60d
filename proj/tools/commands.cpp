#include "commands.hpp"

#include <gmp.h>
#include <json.hpp>
#include <Eigen/Core>

#include <fstream>
#include <iostream>
#include <sstream>

#include "fedshield/errors.hpp"
#include "fedshield/key_io.hpp"
#include "fedshield/klad.hpp"
#include "fedshield/lmtv.hpp"
#include "fedshield/random.hpp"
#include "fedshield/report.hpp"

#ifndef FEDSHIELD_VERSION
#define FEDSHIELD_VERSION "unknown"
#endif

namespace fedshield::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

// Maps library exceptions to the exit-code contract.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

ordered_json versions() {
  return {{"fedshield", FEDSHIELD_VERSION},
          {"gmp", gmp_version},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}};
}

ordered_json overrides_json(const std::vector<config::Override>& overrides) {
  ordered_json arr = ordered_json::array();
  for (const auto& o : overrides) arr.push_back({{"key", o.key}, {"value", o.value}});
  return arr;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const RunOptions& opts, const fl::ExperimentConfig& cfg,
                    const ordered_json& extra = {}) {
  ordered_json m;
  m["command"] = command;
  m["config_path"] = opts.config_path.string();
  m["output_dir"] = opts.out_dir.string();
  m["overrides"] = overrides_json(opts.overrides);
  m["master_seed"] = cfg.master_seed;
  m["artifact_versions"] = versions();
  m["resolved_config_file"] = "config.toml";
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
  write_file(dir / "config.toml", config::render(cfg));
}

fl::ExperimentResult execute(const fl::ExperimentConfig& cfg, const fs::path& dir,
                             std::ostream& out) {
  std::ofstream rounds(dir / "rounds.jsonl", std::ios::binary);
  if (!rounds) throw Error("cannot write " + (dir / "rounds.jsonl").string());
  auto result = fl::run_experiment(cfg, [&](const fl::RoundRecord& r) {
    rounds << report::round_json_line(r);
    rounds.flush();
    out << "round " << r.round_index << ": accuracy " << r.global_accuracy
        << ", flagged " << r.flagged_ids.size() << "/" << r.submitted << '\n';
  });

  write_file(dir / "report.json", report::report_json(cfg, result));
  write_file(dir / "report.csv", report::report_csv(result));
  if (result.car_table) {
    std::ostringstream csv;
    lmtv::write_csv(*result.car_table, csv);
    write_file(dir / "car_table.csv", csv.str());
  }
  if (result.klad) {
    std::ostringstream csv;
    klad::write_csv(*result.klad, csv);
    write_file(dir / "divergence.csv", csv.str());
  }
  return result;
}

std::string csv_value(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(17);
  s << *v;
  return s.str();
}

}  // namespace

std::vector<config::Override> parse_overrides(const std::vector<std::string>& args) {
  std::vector<config::Override> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& tok = args[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) {
      throw ConfigError("unexpected argument \"" + tok + "\"; overrides are --key value");
    }
    const std::string body = tok.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      out.push_back({body.substr(0, eq), body.substr(eq + 1)});
      continue;
    }
    if (i + 1 >= args.size()) throw ConfigError("override --" + body + " lacks a value");
    out.push_back({body, args[++i]});
  }
  return out;
}

int cmd_keygen(const KeygenOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.bits < kMinCliKeyBits) {
      throw ConfigError("--bits " + std::to_string(opts.bits) + " is below the floor of " +
                        std::to_string(kMinCliKeyBits) +
                        " bits; use 2048 or more for realistic runs (small toy keys "
                        "exist only in the test suite)");
    }
    if (opts.bits < 2048) {
      err << "warning: " << opts.bits << "-bit keys are for experiments only; "
          << "2048 bits or more are recommended\n";
    }
    fs::create_directories(opts.out_dir);
    paillier::RandomSource rng(derive_seed(opts.seed, {seed_tag::kKeygen}));
    const auto keys = paillier::keygen(opts.bits, rng);
    write_file(opts.out_dir / "public_key.json",
               paillier::public_key_to_json(keys.public_key));
    write_file(opts.out_dir / "private_key.json",
               paillier::private_key_to_json(keys.private_key));
    out << "wrote " << (opts.out_dir / "public_key.json").string() << " and "
        << (opts.out_dir / "private_key.json").string() << '\n';
    return kExitOk;
  });
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = config::load(opts.config_path, opts.overrides);
    fs::create_directories(opts.out_dir);
    write_manifest(opts.out_dir, "run", opts, cfg);
    const auto result = execute(cfg, opts.out_dir, out);
    out << "final accuracy " << result.final_accuracy << ", poisoning precision "
        << result.poisoning_precision;
    if (result.success_malicious_only) {
      out << ", J " << *result.success_malicious_only;
    }
    out << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.values.empty()) throw ConfigError("sweep needs at least one value");
    if (opts.axis != "gamma" && opts.axis != "beta" && opts.axis != "theta") {
      throw ConfigError("sweep axis must be gamma, beta or theta");
    }
    const auto base = config::load(opts.run.config_path, opts.run.overrides);
    if (opts.axis == "beta" && base.defense != DefenseMode::kLmtv) {
      throw ConfigError("axis beta needs defense = \"lmtv\"");
    }
    if (opts.axis == "theta" && base.defense != DefenseMode::kKlad) {
      throw ConfigError("axis theta needs defense = \"klad\"");
    }
    // Resolve every point before any work so a bad value fails fast.
    std::vector<fl::ExperimentConfig> points;
    for (const auto& v : opts.values) {
      auto overrides = opts.run.overrides;
      overrides.push_back({opts.axis, v});
      points.push_back(config::load(opts.run.config_path, overrides));
    }

    fs::create_directories(opts.run.out_dir);
    ordered_json extra;
    extra["axis"] = opts.axis;
    extra["values"] = opts.values;
    write_manifest(opts.run.out_dir, "sweep", opts.run, base, extra);

    std::ostringstream csv;
    csv << "axis,value,j_malicious_only,j_total_removed,flagged,removed_malicious,"
           "removed_benign,final_accuracy,poisoning_precision\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      const fs::path dir = opts.run.out_dir / (opts.axis + "_" + opts.values[i]);
      fs::create_directories(dir);
      write_file(dir / "config.toml", config::render(points[i]));
      out << opts.axis << " = " << opts.values[i] << '\n';
      const auto result = execute(points[i], dir, out);
      const auto& last = result.rounds.back();
      csv << opts.axis << ',' << opts.values[i] << ','
          << csv_value(result.success_malicious_only) << ','
          << csv_value(result.success_total_removed) << ',' << last.flagged_ids.size()
          << ',' << last.removed_malicious << ',' << last.removed_benign << ','
          << csv_value(result.final_accuracy) << ','
          << csv_value(std::isnan(result.poisoning_precision)
                           ? std::optional<double>{}
                           : std::optional<double>{result.poisoning_precision})
          << '\n';
    }
    write_file(opts.run.out_dir / "sweep.csv", csv.str());
    out << "wrote " << (opts.run.out_dir / "sweep.csv").string() << '\n';
    return kExitOk;
  });
}

}  // namespace fedshield::cli
