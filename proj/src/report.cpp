#include "fhn/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fhn {

namespace {

WaveKind kind_from(const std::string& s)
{
    if (s == "front") return WaveKind::front;
    if (s == "reversed_front") return WaveKind::reversed_front;
    if (s == "pulse") return WaveKind::pulse;
    throw std::runtime_error("unknown wave kind '" + s + "'");
}

SimKind sim_kind_from(const std::string& s)
{
    for (auto k : {SimKind::front, SimKind::reversed_front, SimKind::pulse, SimKind::custom})
        if (s == to_string(k)) return k;
    throw std::runtime_error("unknown simulation kind '" + s + "'");
}

Outcome outcome_from(const std::string& s)
{
    for (auto o : {Outcome::front_right, Outcome::front_left, Outcome::pulse, Outcome::collapsed,
                   Outcome::undetermined})
        if (s == to_string(o)) return o;
    throw std::runtime_error("unknown outcome '" + s + "'");
}

// JSON has no NaN; non-finite values are written as null and read back as NaN
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }
double num_of(const Json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

std::string fmt(double x)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

double parse(const std::string& cell)
{
    double x = 0;
    auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
    if (ec != std::errc() || end != cell.data() + cell.size()) throw std::runtime_error("bad CSV number '" + cell + "'");
    return x;
}

std::vector<std::vector<double>> read_rows(std::istream& is, const std::string& header)
{
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty CSV input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw std::runtime_error("unexpected CSV header '" + line + "', expected '" + header + "'");
    const size_t ncol = std::count(header.begin(), header.end(), ',') + 1;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> r;
        while (std::getline(ls, cell, ',')) r.push_back(parse(cell));
        if (r.size() != ncol) throw std::runtime_error("CSV row with " + std::to_string(r.size()) + " cells: " + line);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

Json to_json(const ModelParams& p)
{
    Json j;
    j["beta"] = p.beta;
    j["gamma"] = p.gamma;
    j["d"] = p.d;
    return j;
}

ModelParams params_from_json(const Json& j)
{
    ModelParams p{j.at("beta").get<double>(), j.at("gamma").get<double>(), j.at("d").get<double>()};
    p.validate();
    return p;
}

Json to_json(const DerivedConstants& k)
{
    Json j;
    j["mu2"] = k.mu2;
    j["mu3"] = k.mu3;
    j["rho_hat"] = k.rho_hat;
    j["gamma_tilde1"] = k.gamma_tilde1;
    j["gamma_tilde2"] = k.gamma_tilde2 ? Json(*k.gamma_tilde2) : Json(nullptr);
    j["gamma_star"] = k.gamma_star;
    j["mu2_star"] = k.mu2_star;
    j["mu3_star"] = k.mu3_star;
    j["beta1"] = k.beta1;
    j["beta_tilde2"] = k.beta_tilde2;
    j["delta0"] = k.delta0;
    j["beta0"] = k.beta0;
    j["M_gamma"] = k.M_gamma;
    j["theta1"] = k.theta1;
    j["theta2"] = k.theta2;
    j["M1"] = k.M1;
    j["beta2"] = k.beta2;
    j["t2a_holds"] = k.t2a_holds;
    j["theta1_halvings"] = k.theta1_halvings;
    j["c_lower"] = k.c_lower;
    j["b0"] = k.b0;
    return j;
}

Json to_json(const RegimeReport& r)
{
    Json j;
    j["regime"] = to_string(r.regime);
    j["n1"] = r.n1_holds;
    j["n2"] = r.n2_holds;
    j["h1"] = r.h1_holds;
    j["h2"] = r.h2_holds;
    j["truncation"] = r.truncation_holds;
    j["truncation_lhs"] = r.truncation_lhs;
    j["energy_levels"] = {{"L_mu2", r.energy_levels[0]}, {"L_0", r.energy_levels[1]}, {"L_mu3", r.energy_levels[2]}};
    j["energy_order"] = to_string(r.energy_order);
    j["implications_consistent"] = r.implications_consistent;
    return j;
}

Json to_json(const ValidationReport& r)
{
    Json checks = Json::array();
    for (const auto& c : r.checks) {
        Json e;
        e["name"] = c.name;
        e["applicable"] = c.applicable;
        e["pass"] = c.pass;
        e["measured"] = num(c.measured);
        e["bound"] = num(c.bound);
        checks.push_back(e);
    }
    Json j;
    j["all_pass"] = r.all_pass();
    j["checks"] = checks;
    return j;
}

ValidationReport validation_from_json(const Json& j)
{
    ValidationReport r;
    for (const auto& e : j.at("checks")) {
        Check c;
        c.name = e.at("name").get<std::string>();
        c.applicable = e.at("applicable").get<bool>();
        c.pass = e.at("pass").get<bool>();
        c.measured = num_of(e.at("measured"));
        c.bound = num_of(e.at("bound"));
        r.checks.push_back(c);
    }
    return r;
}

Json to_json(const WaveSolution& s)
{
    Json j;
    j["kind"] = to_string(s.kind);
    j["c"] = s.c;
    j["kappa"] = s.kappa;
    j["J"] = s.J_value;
    j["el_residual"] = s.el_residual;
    j["v_residual"] = s.v_residual;
    j["newton_steps"] = s.newton_steps;
    j["decay_fits"] = {{"right_rate", num(s.decay_fits.right_rate)},
                       {"right_expected", num(s.decay_fits.right_expected)},
                       {"left_rate", num(s.decay_fits.left_rate)},
                       {"left_expected", num(s.decay_fits.left_expected)}};
    j["far_field"] = {{"left", s.far.left}, {"right", s.far.right}};
    j["window"] = {{"z_left", s.u.grid.z_left}, {"z_right", s.u.grid.z_right}, {"h", s.u.grid.h}, {"n", s.u.grid.n}};
    return j;
}

WaveSolution wave_from_json(const Json& j, const Profile& u, const Profile& v)
{
    WaveSolution s;
    s.kind = kind_from(j.at("kind").get<std::string>());
    s.c = j.at("c").get<double>();
    s.kappa = j.at("kappa").get<double>();
    s.J_value = j.at("J").get<double>();
    s.el_residual = j.at("el_residual").get<double>();
    s.v_residual = j.at("v_residual").get<double>();
    s.newton_steps = j.at("newton_steps").get<int>();
    const auto& df = j.at("decay_fits");
    s.decay_fits.right_rate = num_of(df.at("right_rate"));
    s.decay_fits.right_expected = num_of(df.at("right_expected"));
    s.decay_fits.left_rate = num_of(df.at("left_rate"));
    s.decay_fits.left_expected = num_of(df.at("left_expected"));
    s.far = {j.at("far_field").at("left").get<double>(), j.at("far_field").at("right").get<double>()};
    if (u.grid.n != j.at("window").at("n").get<int>()) throw std::runtime_error("profile length does not match the report window");
    s.u = u;
    s.v = v;
    return s;
}

Json to_json(const SpeedCurve& c)
{
    Json j;
    j["c"] = c.c_samples;
    j["J"] = c.J_values;
    j["converged"] = Json(std::vector<bool>(c.converged.begin(), c.converged.end()));
    j["bracket"] = c.bracket ? Json::array({c.bracket->first, c.bracket->second}) : Json(nullptr);
    return j;
}

Json to_json(const WaveReport& r)
{
    Json j;
    j["params"] = to_json(r.params);
    j["wave"] = to_json(r.solution);
    j["validation"] = to_json(r.validation);
    j["candidate"] = !r.validation.all_pass();
    j["scan_grid"] = r.scan_grid;
    j["speed_curve"] = to_json(r.curve);
    j["config"] = r.config.is_null() ? Json::object() : r.config;
    return j;
}

WaveReport wave_report_from_json(const Json& j, const Profile& u, const Profile& v)
{
    WaveReport r;
    r.params = params_from_json(j.at("params"));
    r.solution = wave_from_json(j.at("wave"), u, v);
    r.validation = validation_from_json(j.at("validation"));
    r.scan_grid = j.at("scan_grid").get<std::vector<double>>();
    const auto& sc = j.at("speed_curve");
    r.curve.c_samples = sc.at("c").get<std::vector<double>>();
    r.curve.J_values = sc.at("J").get<std::vector<double>>();
    for (bool b : sc.at("converged")) r.curve.converged.push_back(b);
    if (!sc.at("bracket").is_null()) r.curve.bracket = {sc["bracket"][0].get<double>(), sc["bracket"][1].get<double>()};
    r.config = j.at("config");
    return r;
}

Json to_json(const SimReport& r)
{
    Json j;
    j["kind"] = to_string(r.kind);
    j["params"] = to_json(r.params);
    j["outcome"] = to_string(r.outcome);
    j["sigma_measured"] = r.sigma_measured;
    j["fit_residual"] = r.fit_residual;
    j["sigma_predicted"] = r.sigma_predicted;
    j["relative_error"] = r.relative_error;
    j["level"] = r.level;
    j["tau_end"] = r.tau_end;
    j["dtau"] = r.dtau;
    j["h"] = r.h;
    j["note"] = r.note;
    Json t = Json::array();
    for (const auto& p : r.level_track) t.push_back(Json::array({p.tau, p.y}));
    j["level_track"] = t;
    return j;
}

SimReport sim_report_from_json(const Json& j)
{
    SimReport r;
    r.kind = sim_kind_from(j.at("kind").get<std::string>());
    r.params = params_from_json(j.at("params"));
    r.outcome = outcome_from(j.at("outcome").get<std::string>());
    r.sigma_measured = j.at("sigma_measured").get<double>();
    r.fit_residual = j.at("fit_residual").get<double>();
    r.sigma_predicted = j.at("sigma_predicted").get<double>();
    r.relative_error = j.at("relative_error").get<double>();
    r.level = j.at("level").get<double>();
    r.tau_end = j.at("tau_end").get<double>();
    r.dtau = j.at("dtau").get<double>();
    r.h = j.at("h").get<double>();
    r.note = j.at("note").get<std::string>();
    for (const auto& p : j.at("level_track")) r.level_track.push_back({p[0].get<double>(), p[1].get<double>()});
    return r;
}

void write_snapshots_csv(std::ostream& os, const std::vector<Snapshot>& snaps)
{
    os << "tau,y,u,v\n";
    for (const auto& s : snaps)
        for (size_t i = 0; i < s.y.size(); ++i)
            os << fmt(s.tau) << ',' << fmt(s.y[i]) << ',' << fmt(s.u[i]) << ',' << fmt(s.v[i]) << '\n';
}

std::vector<Snapshot> read_snapshots_csv(std::istream& is)
{
    std::vector<Snapshot> out;
    for (const auto& r : read_rows(is, "tau,y,u,v")) {
        if (out.empty() || out.back().tau != r[0]) out.push_back({r[0], {}, {}, {}});
        out.back().y.push_back(r[1]);
        out.back().u.push_back(r[2]);
        out.back().v.push_back(r[3]);
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << "d,c,dc2,sup_u,v_at_zetaM\n";
    for (const auto& r : rows) {
        if (r.ok)
            os << fmt(r.d) << ',' << fmt(r.c) << ',' << fmt(r.dc2) << ',' << fmt(r.sup_u) << ',' << fmt(r.v_at_zetaM) << '\n';
        else
            os << fmt(r.d) << ",nan,nan,nan,nan\n";
    }
}

std::vector<SweepRow> read_sweep_csv(std::istream& is)
{
    std::vector<SweepRow> out;
    for (const auto& r : read_rows(is, "d,c,dc2,sup_u,v_at_zetaM")) {
        SweepRow row;
        row.d = r[0];
        row.ok = std::isfinite(r[1]);
        if (row.ok) {
            row.c = r[1];
            row.dc2 = r[2];
            row.sup_u = r[3];
            row.v_at_zetaM = r[4];
        }
        out.push_back(row);
    }
    return out;
}

}  // namespace fhn
