#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fhn/report.hpp"

using namespace fhn;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, bad_input = 1, inadmissible = 2, solver_failure = 3 };

struct RunConfig {
    std::string config_file;
    double beta = 0.45, gamma = 50, d = 1e-5;
    std::string out = ".";
    std::optional<double> z_left;
    double z_right = 20, h = 0.01;

    std::string regime_kind = "front";
    bool reversed = false;

    std::string sim_kind = "front";
    double widths = 400;
    int n = 1 << 14;
    double dtau = 0.1, tau_max = 2e4, min_disp = 20, v_lag = 8;
    int track_every = 50, snapshot_every = 0, snapshot_stride = 16;
    bool predict = false;

    std::vector<double> d_list;
    std::string input, profile;

    ModelParams params() const { return {beta, gamma, d}; }
    WindowOptions window() const { return {z_left, z_right, h}; }
};

Json common_json(const RunConfig& c)
{
    Json j;
    j["config_file"] = c.config_file;
    j["beta"] = c.beta;
    j["gamma"] = c.gamma;
    j["d"] = c.d;
    j["out"] = c.out;
    return j;
}

Json window_json(const RunConfig& c, Json j)
{
    j["z_left"] = c.z_left ? Json(*c.z_left) : Json(nullptr);
    j["z_right"] = c.z_right;
    j["h"] = c.h;
    return j;
}

void write_json(const fs::path& p, const Json& j)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << j.dump(2) << '\n';
}

template <class Fn>
void write_file(const fs::path& p, Fn fn)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    fn(os);
}

// beta and gamma ranges per wave kind; fronts from mu3 also exist above gamma*
bool admits_kind(const RegimeReport& r, const DerivedConstants& k, const ModelParams& p, const std::string& kind)
{
    if (!(p.beta > k.beta0)) return false;
    if (kind == "front") return r.regime != Regime::outside;
    return r.regime == Regime::subcritical;
}

// plus the d-dependent hypothesis at mu3
bool admits(const RegimeReport& r, const DerivedConstants& k, const ModelParams& p, const std::string& kind)
{
    return r.h1_holds && admits_kind(r, k, p, kind);
}

int cmd_regime(const RunConfig& c)
{
    const auto p = c.params();
    p.validate();
    Json j;
    j["params"] = to_json(p);
    const auto r = classify_regime(p);
    j["regime"] = to_json(r);
    std::optional<DerivedConstants> k;
    try {
        k = derive_constants(p);
        j["constants"] = to_json(*k);
    } catch (const ModelError& e) {
        if (e.kind() != ModelError::Kind::regime) throw;
        j["constants"] = nullptr;
        j["note"] = e.what();
    }
    const bool adm = k && admits(r, *k, p, c.regime_kind);
    j["kind"] = c.regime_kind;
    j["admissible"] = adm;
    Json cfg = common_json(c);
    cfg["kind"] = c.regime_kind;
    j["config"] = cfg;
    std::cout << j.dump(2) << '\n';
    return adm ? ok : inadmissible;
}

int check_admissible(const ModelParams& p, const std::string& kind)
{
    const auto r = classify_regime(p);
    if (r.regime == Regime::outside) {
        std::cerr << "regime does not admit a " << kind << ": fewer than three equilibria\n";
        return inadmissible;
    }
    const auto k = derive_constants(p);
    // too large d is left to the speed search, which refuses without a negative bracket
    if (!admits_kind(r, k, p, kind)) {
        std::cerr << "regime does not admit a " << kind << " (regime " << to_string(r.regime) << ", beta0 "
                  << k.beta0 << ")\n";
        return inadmissible;
    }
    return ok;
}

WaveReport wave_report(const SolveResult& R, const ModelParams& p, Json cfg)
{
    WaveReport w;
    w.params = p;
    w.solution = R.solution;
    w.validation = R.report;
    w.scan_grid = R.speed.scan_grid;
    w.curve = R.speed.curve;
    w.config = std::move(cfg);
    return w;
}

void print_failures(const ValidationReport& v)
{
    for (const auto& ch : v.checks)
        if (ch.applicable && !ch.pass)
            std::cerr << "  failed check " << ch.name << ": measured " << ch.measured << ", bound " << ch.bound << '\n';
}

int cmd_wave(const RunConfig& c, WaveKind kind)
{
    const auto p = c.params();
    p.validate();
    const std::string name = kind == WaveKind::pulse ? "pulse" : (kind == WaveKind::front ? "front" : "reversed");
    if (int e = check_admissible(p, name)) return e;

    Json cfg = window_json(c, common_json(c));
    cfg["command"] = kind == WaveKind::pulse ? "pulse" : "front";
    cfg["reversed"] = kind == WaveKind::reversed_front;
    const auto R = solve_wave(p, kind, {}, c.window());
    Json j = to_json(wave_report(R, p, cfg));
    if (kind == WaveKind::pulse) {
        const auto F = solve_wave(p, WaveKind::front, {}, c.window());
        j["coexistence"] = {{"c_pulse", R.solution.c}, {"c_front", F.solution.c},
                            {"pulse_faster", R.solution.c > F.solution.c}};
    }
    fs::create_directories(c.out);
    write_json(fs::path(c.out) / "wave.json", j);
    write_file(fs::path(c.out) / "profile.csv", [&](std::ostream& os) { write_pair_csv(os, R.solution.u, R.solution.v); });
    std::cout << "c = " << R.solution.c << ", d c^2 = " << R.solution.kappa << ", validation "
              << (R.report.all_pass() ? "pass" : "FAIL (candidate)") << '\n';
    if (!R.report.all_pass()) {
        print_failures(R.report);
        return solver_failure;
    }
    return ok;
}

SimKind sim_kind(const std::string& s)
{
    if (s == "front") return SimKind::front;
    if (s == "reversed") return SimKind::reversed_front;
    return SimKind::pulse;
}

int cmd_simulate(const RunConfig& c)
{
    const auto p = c.params();
    p.validate();
    SimConfig sc;
    sc.params = p;
    sc.widths = c.widths;
    sc.n = c.n;
    sc.dtau = c.dtau;
    sc.tau_max = c.tau_max;
    sc.min_displacement_widths = c.min_disp;
    sc.v_lag_widths = c.v_lag;
    sc.track_every = c.track_every;
    sc.snapshot_every = c.snapshot_every;
    sc.snapshot_stride = c.snapshot_stride;

    auto predicted = [&](WaveKind k) -> std::optional<double> {
        if (!c.predict) return std::nullopt;
        return solve_wave(p, k).solution.c * std::sqrt(p.d);
    };

    Json cfg = common_json(c);
    cfg["kind"] = c.sim_kind;
    cfg["widths"] = c.widths;
    cfg["n"] = c.n;
    cfg["dtau"] = c.dtau;
    cfg["tau_max"] = c.tau_max;
    cfg["min_displacement_widths"] = c.min_disp;
    cfg["v_lag_widths"] = c.v_lag;
    cfg["track_every"] = c.track_every;
    cfg["snapshot_every"] = c.snapshot_every;
    cfg["snapshot_stride"] = c.snapshot_stride;
    cfg["predict"] = c.predict;

    fs::create_directories(c.out);
    std::vector<SimReport> runs;
    Json j;
    bool good = false;
    if (c.sim_kind == "both") {
        sc.sigma_predicted = predicted(WaveKind::front);
        const auto b = run_bidirectional(sc, predicted(WaveKind::reversed_front));
        runs = {b.forward, b.reversed};
        j["both_invade"] = b.both_invade;
        good = b.both_invade;
    } else {
        sc.kind = sim_kind(c.sim_kind);
        const auto wk = c.sim_kind == "front" ? WaveKind::front
                        : c.sim_kind == "reversed" ? WaveKind::reversed_front : WaveKind::pulse;
        sc.sigma_predicted = predicted(wk);
        runs = {run_experiment(sc)};
        good = runs[0].outcome == (sc.kind == SimKind::pulse ? Outcome::pulse : Outcome::front_right);
    }
    j["runs"] = Json::array();
    for (const auto& r : runs) {
        j["runs"].push_back(to_json(r));
        if (c.snapshot_every > 0)
            write_file(fs::path(c.out) / (std::string("snapshots_") + to_string(r.kind) + ".csv"),
                       [&](std::ostream& os) { write_snapshots_csv(os, r.snapshots); });
        std::cout << to_string(r.kind) << ": " << to_string(r.outcome) << ", sigma = " << r.sigma_measured;
        if (r.sigma_predicted != 0) std::cout << " (predicted " << r.sigma_predicted << ")";
        if (!r.note.empty()) std::cout << " [" << r.note << "]";
        std::cout << '\n';
    }
    j["config"] = cfg;
    write_json(fs::path(c.out) / "simulation.json", j);
    return good ? ok : solver_failure;
}

int cmd_sweep(const RunConfig& c)
{
    ModelParams base = c.params();
    base.validate();
    if (c.d_list.size() < 3) throw CLI::ValidationError("--d-list", "needs at least three values");
    for (size_t i = 0; i < c.d_list.size(); ++i) {
        if (!(c.d_list[i] > 0)) throw CLI::ValidationError("--d-list", "values must be positive");
        if (i > 0 && !(c.d_list[i] < c.d_list[i - 1])) throw CLI::ValidationError("--d-list", "values must be descending");
    }
    const auto rows = d_sweep(base, c.d_list);
    fs::create_directories(c.out);
    write_file(fs::path(c.out) / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, rows); });

    Json j;
    j["params"] = {{"beta", base.beta}, {"gamma", base.gamma}};
    j["delta0"] = derive_constants(base).delta0;
    j["rows"] = Json::array();
    bool all = true;
    for (const auto& r : rows) {
        Json row = {{"d", r.d}, {"ok", r.ok}};
        if (r.ok) {
            row["c"] = r.c;
            row["dc2"] = r.dc2;
            row["sup_u"] = r.sup_u;
            row["v_at_zetaM"] = r.v_at_zetaM;
            row["dist_to_front"] = r.dist_to_front;
        } else {
            row["error"] = r.error;
            std::cerr << "d = " << r.d << ": " << r.error << '\n';
        }
        all = all && r.ok;
        j["rows"].push_back(row);
    }
    Json cfg = common_json(c);
    cfg["d_list"] = c.d_list;
    j["config"] = cfg;
    write_json(fs::path(c.out) / "sweep.json", j);
    return all ? ok : solver_failure;
}

int cmd_validate(const RunConfig& c)
{
    std::ifstream js(c.input);
    if (!js) throw std::runtime_error("cannot read " + c.input);
    const Json saved = Json::parse(js);
    const fs::path prof = c.profile.empty() ? fs::path(c.input).parent_path() / "profile.csv" : fs::path(c.profile);
    std::ifstream ps(prof);
    if (!ps) throw std::runtime_error("cannot read " + prof.string());
    auto [u, v] = read_pair_csv(ps);
    auto w = wave_report_from_json(saved, u, v);
    w.validation = validate_profile(w.solution, w.params);
    // keep any extra sections of the saved report, e.g. the pulse coexistence block
    Json again = saved;
    again["validation"] = to_json(w.validation);
    again["candidate"] = !w.validation.all_pass();
    const bool same = again.dump() == saved.dump();
    fs::create_directories(c.out);
    write_json(fs::path(c.out) / "validation.json", again);
    std::cout << "validation " << (w.validation.all_pass() ? "pass" : "FAIL") << ", report "
              << (same ? "reproduced identically" : "differs from the saved one") << '\n';
    if (!same) return bad_input;
    if (!w.validation.all_pass()) {
        print_failures(w.validation);
        return solver_failure;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"FitzHugh-Nagumo traveling fronts and pulses"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file; command-line flags take precedence");
    RunConfig c;
    app.add_option("--beta", c.beta, "cubic parameter, 0 < beta < 1/2")->capture_default_str();
    app.add_option("--gamma", c.gamma, "recovery coupling")->capture_default_str();
    app.add_option("--d", c.d, "diffusion ratio")->capture_default_str();
    app.add_option("--out", c.out, "output directory")->capture_default_str();
    app.add_option("--z-left", c.z_left, "left end of the moving-frame window");
    app.add_option("--z-right", c.z_right, "right end of the moving-frame window")->capture_default_str();
    app.add_option("--dz", c.h, "moving-frame grid spacing")->capture_default_str()->check(CLI::PositiveNumber);

    auto* regime = app.add_subcommand("regime", "parameter analysis and admissibility")->fallthrough();
    regime->add_option("--kind", c.regime_kind)->check(CLI::IsMember({"front", "reversed", "pulse"}))->capture_default_str();

    auto* front = app.add_subcommand("front", "traveling front from mu3 to 0")->fallthrough();
    front->add_flag("--reversed", c.reversed, "front from 0 to mu3");
    auto* pulse = app.add_subcommand("pulse", "traveling pulse")->fallthrough();

    auto* sim = app.add_subcommand("simulate", "direct PDE run in rescaled lab coordinates")->fallthrough();
    sim->add_option("--kind", c.sim_kind)->check(CLI::IsMember({"front", "reversed", "pulse", "both"}))->capture_default_str();
    sim->add_option("--widths", c.widths, "domain length in transition widths")->capture_default_str();
    sim->add_option("--n", c.n, "grid nodes")->capture_default_str();
    sim->add_option("--dtau", c.dtau)->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--tau-max", c.tau_max)->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--min-displacement", c.min_disp, "stop after this many widths of travel")->capture_default_str();
    sim->add_option("--v-lag", c.v_lag, "initial lag of the v step behind the u step, in widths")->capture_default_str();
    sim->add_option("--track-every", c.track_every)->capture_default_str();
    sim->add_option("--snapshot-every", c.snapshot_every, "steps between snapshots, 0 for none")->capture_default_str();
    sim->add_option("--snapshot-stride", c.snapshot_stride)->capture_default_str();
    sim->add_flag("--predict", c.predict, "solve the traveling-wave problem for the expected speed");

    auto* sweep = app.add_subcommand("sweep", "front solves over descending d")->fallthrough();
    sweep->add_option("--d-list", c.d_list, "comma separated, descending")->delimiter(',')->required();

    auto* validate = app.add_subcommand("validate", "recheck a saved front or pulse")->fallthrough();
    validate->add_option("--input", c.input, "wave.json")->required();
    validate->add_option("--profile", c.profile, "profile CSV, default profile.csv next to the input");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return bad_input;
    }
    if (auto* f = app.get_config_ptr(); f && f->count()) c.config_file = f->as<std::string>();

    try {
        if (*regime) return cmd_regime(c);
        if (*front) return cmd_wave(c, c.reversed ? WaveKind::reversed_front : WaveKind::front);
        if (*pulse) return cmd_wave(c, WaveKind::pulse);
        if (*sim) return cmd_simulate(c);
        if (*sweep) return cmd_sweep(c);
        if (*validate) return cmd_validate(c);
    } catch (const ModelError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return e.kind() == ModelError::Kind::invalid_params ? bad_input : inadmissible;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return bad_input;
    } catch (const SolverError& e) {
        std::cerr << "solver failure in " << to_string(e.stage()) << ": " << e.what() << '\n';
        return solver_failure;
    } catch (const SimError& e) {
        std::cerr << "simulation failure: " << e.what() << '\n';
        return solver_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_input;
    }
    return bad_input;
}
