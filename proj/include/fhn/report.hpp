#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhn/model.hpp"
#include "fhn/pde_sim.hpp"
#include "fhn/wave_solver.hpp"

namespace fhn {

// insertion-ordered, so emitted key order is fixed by the writers below
using Json = nlohmann::ordered_json;

Json to_json(const ModelParams& p);
ModelParams params_from_json(const Json& j);

Json to_json(const DerivedConstants& k);
Json to_json(const RegimeReport& r);

Json to_json(const ValidationReport& r);
ValidationReport validation_from_json(const Json& j);

// scalar part of a wave; the profiles go to the companion CSV
Json to_json(const WaveSolution& s);
WaveSolution wave_from_json(const Json& j, const Profile& u, const Profile& v);

Json to_json(const SpeedCurve& c);

struct WaveReport {
    ModelParams params;
    WaveSolution solution;
    ValidationReport validation;
    std::vector<double> scan_grid;
    SpeedCurve curve;
    Json config;  // resolved run configuration, echoed verbatim
};

Json to_json(const WaveReport& r);
// profiles are read separately and attached by the caller
WaveReport wave_report_from_json(const Json& j, const Profile& u, const Profile& v);

Json to_json(const SimReport& r);
SimReport sim_report_from_json(const Json& j);

void write_snapshots_csv(std::ostream& os, const std::vector<Snapshot>& snaps);
std::vector<Snapshot> read_snapshots_csv(std::istream& is);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);

}  // namespace fhn
