// Copyright 2026 The fic-stack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fic: experiment runner and profile exports.
//
//   fic run --config <file> [--out <dir>]
//   fic profile --preset <name> [--emit force|energy|both] [--out <file>]
//   fic phase-portrait --preset <name> [--out <file>]
//   fic sweep --config <file> --param <json-pointer> --values <v1,v2,..> [--out <dir>]
//   fic presets list
//
// Output directory: --out, else $FIC_OUT_DIR, else ./out.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fic/attractor.hpp"
#include "fic/experiment.hpp"
#include "fic/io.hpp"

namespace fs = std::filesystem;
using fic::io::json;

namespace {

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FIC_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "out";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fic::Error("cannot write '" + path.string() + "'");
  out << text;
}

// Runs one config, writes <dir>/<name>.csv and <dir>/<name>.report.json.
fic::RunReport run_into(const fic::ExperimentConfig& cfg, const fs::path& dir) {
  const fic::RunLog log = fic::run_log(cfg);
  fic::RunReport report = fic::report_metrics(log, cfg.window_start());
  report.name = cfg.name;
  const fs::path csv_path = dir / (cfg.name + ".csv");
  std::ostringstream csv;
  fic::write_log_csv(csv, log);
  write_text(csv_path, csv.str());
  report.log_path = csv_path.string();
  write_text(dir / (cfg.name + ".report.json"), fic::io::dump(fic::io::report_to_json(report)));
  return report;
}

void emit(const std::string& out_file, const std::string& text) {
  if (out_file.empty()) {
    std::cout << text;
  } else {
    write_text(out_file, text);
  }
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw fic::Error("bad sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw fic::Error("--values is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superimposed fractal impedance controllers: experiments and exports"};
  app.require_subcommand(1);
  std::string preset_dir = fic::io::kDefaultPresetDir;
  app.add_option("--preset-dir", preset_dir, "Directory holding fic/ and experiments/ presets");

  auto* run_cmd = app.add_subcommand("run", "Run one experiment config");
  std::string run_config, run_out;
  run_cmd->add_option("--config", run_config, "Experiment JSON")->required();
  run_cmd->add_option("--out", run_out, "Output directory");

  auto* profile_cmd = app.add_subcommand("profile", "Export the divergence force/energy profile as CSV");
  std::string profile_preset, profile_emit = "both", profile_out;
  double profile_extent = 0.0;
  int profile_samples = 601;
  profile_cmd->add_option("--preset", profile_preset, "FIC preset name")->required();
  profile_cmd->add_option("--emit", profile_emit, "force, energy or both")
      ->check(CLI::IsMember({"force", "energy", "both"}));
  profile_cmd->add_option("--extent", profile_extent, "Half-width of the error range (default 3 xb)");
  profile_cmd->add_option("--samples", profile_samples, "Number of samples")->check(CLI::Range(2, 10000000));
  profile_cmd->add_option("--out", profile_out, "Output file (default stdout)");

  auto* phase_cmd = app.add_subcommand("phase-portrait", "Export 1 kg mass trajectories as CSV");
  std::string phase_preset, phase_out;
  int phase_count = 16;
  double phase_duration = 1.0, phase_radius = 0.0;
  phase_cmd->add_option("--preset", phase_preset, "FIC preset name")->required();
  phase_cmd->add_option("--count", phase_count, "Initial conditions on the ring")->check(CLI::Range(1, 100000));
  phase_cmd->add_option("--duration", phase_duration, "Seconds per trajectory")->check(CLI::PositiveNumber);
  phase_cmd->add_option("--radius", phase_radius, "Error radius of the ring (default 2 xb)");
  phase_cmd->add_option("--out", phase_out, "Output file (default stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Re-run a config with one parameter overridden");
  std::string sweep_config, sweep_param, sweep_values, sweep_out;
  sweep_cmd->add_option("--config", sweep_config, "Experiment JSON")->required();
  sweep_cmd->add_option("--param", sweep_param, "JSON pointer, e.g. /stack/0/position/f_max")->required();
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep_cmd->add_option("--out", sweep_out, "Output directory");

  auto* presets_cmd = app.add_subcommand("presets", "Inspect bundled presets");
  presets_cmd->require_subcommand(1);
  auto* presets_list = presets_cmd->add_subcommand("list", "List FIC and experiment presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const fic::ExperimentConfig cfg = fic::io::load_experiment(run_config, preset_dir);
      const fic::RunReport r = run_into(cfg, output_dir(run_out));
      std::cout << fic::io::dump(fic::io::report_to_json(r));
    } else if (profile_cmd->parsed()) {
      const fic::FicParams p = fic::io::load_fic_preset(preset_dir, profile_preset);
      const double extent = profile_extent > 0.0 ? profile_extent : 3.0 * p.xb;
      std::ostringstream os;
      fic::write_profile_csv(os, p, extent, profile_samples, profile_emit != "energy", profile_emit != "force");
      emit(profile_out, os.str());
    } else if (phase_cmd->parsed()) {
      const fic::FicParams p = fic::io::load_fic_preset(preset_dir, phase_preset);
      const double radius = phase_radius > 0.0 ? phase_radius : 2.0 * p.xb;
      // Velocity radius: the speed a 1 kg mass reaches falling through E(radius).
      const double vel = std::sqrt(2.0 * fic::profile_energy(p, radius));
      fic::PhasePortraitOptions opt;
      opt.duration = phase_duration;
      const auto trajs = fic::phase_portrait(p, 1.0, fic::ring_initial_conditions(phase_count, radius, vel), opt);
      std::ostringstream os;
      fic::write_phase_portrait_csv(os, trajs);
      emit(phase_out, os.str());
    } else if (sweep_cmd->parsed()) {
      const std::vector<double> values = parse_values(sweep_values);
      const json base = fic::io::expand_presets(fic::io::experiment_document(sweep_config), preset_dir);
      const json::json_pointer ptr(sweep_param);
      if (!base.contains(ptr)) throw fic::Error("config has no value at '" + sweep_param + "'");
      const fs::path dir = output_dir(sweep_out);
      std::cout << "index,value,rmse_x,rmse_y,rmse_z,torque_peak_max,status\n";
      bool all_ok = true;
      for (std::size_t i = 0; i < values.size(); ++i) {
        json doc = base;
        doc[ptr] = values[i];
        std::cout << i << ',' << fic::csv::num(values[i]);
        try {
          const fic::ExperimentConfig cfg =
              fic::io::experiment_from_json(doc, preset_dir, fs::path(sweep_config).parent_path());
          const fic::RunReport r = run_into(cfg, dir / ("run_" + std::to_string(i)));
          std::cout << ',' << fic::csv::num(r.rmse.x()) << ',' << fic::csv::num(r.rmse.y()) << ','
                    << fic::csv::num(r.rmse.z()) << ',' << fic::csv::num(r.torque_peak.maxCoeff()) << ",ok\n";
        } catch (const fic::Error& e) {
          all_ok = false;
          std::cout << ",,,,,aborted\n";
          std::cerr << "value " << values[i] << ": " << e.what() << '\n';
        }
      }
      return all_ok ? 0 : 1;
    } else if (presets_list->parsed()) {
      for (const auto& e : fic::io::list_presets(preset_dir))
        std::cout << e.kind << '\t' << e.name << '\t' << e.description << '\n';
    }
  } catch (const fic::RunAborted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
