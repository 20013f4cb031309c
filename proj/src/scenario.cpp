#include "sqcav/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sqcav/oracle.hpp"

namespace sqcav {

namespace {

constexpr double kCutoffConvergenceRel = 1e-6;
constexpr int kConvergenceStep = 10;

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string list_text(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ", ";
        out += num(v[k]);
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw Error(ErrorKind::InvalidConfig, "config key '" + key + "': " + why + " (got '" + value + "')");
}

double parse_real(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size() || !std::isfinite(v)) bad_value(key, text, "expected a finite number");
        return v;
    } catch (const std::logic_error&) {
        bad_value(key, text, "expected a number");
    }
}

int parse_int(const std::string& key, const std::string& text) {
    const double v = parse_real(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) bad_value(key, text, "expected an integer");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    bad_value(key, text, "expected true or false");
}

// "a, b, c" or "start:stop:step".
std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(parse_real(key, item));
        if (parts.size() != 3) bad_value(key, text, "range must be start:stop:step");
        const double start = parts[0], stop = parts[1], step = parts[2];
        if (!(step > 0.0) || stop < start) bad_value(key, text, "range needs step > 0 and stop >= start");
        const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 100000) bad_value(key, text, "range has too many points");
        for (long k = 0; k < count; ++k) {
            // snap to 12 decimals so 0.1 steps print as 0.3, not 0.30000000000000004
            out.push_back(std::round((start + static_cast<double>(k) * step) * 1e12) / 1e12);
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(key, item));
    if (out.empty()) bad_value(key, text, "expected at least one value");
    return out;
}

Frame parse_frame(const std::string& key, const std::string& text) {
    if (text == "lab") return Frame::Lab;
    if (text == "squeezed") return Frame::Squeezed;
    bad_value(key, text, "expected lab or squeezed");
}

AtomSelection parse_atom(const std::string& key, const std::string& text) {
    if (text == "both") return AtomSelection::Both;
    return parse_bool(key, text) ? AtomSelection::Present : AtomSelection::Absent;
}

void check_config(const ScenarioConfig& c) {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidConfig, m); };
    if (c.g0_values.empty()) fail("g0_over_kappa needs at least one value");
    for (double g : c.g0_values)
        if (g < 0.0) fail("g0_over_kappa must be >= 0");
    if (c.gamma < 0.0) fail("gamma_over_kappa must be >= 0");
    if (!(c.delta_c > 0.0)) fail("delta_c_over_kappa must be > 0");
    if (c.r_values.empty() && c.omega_p_values.empty()) fail("r_values is empty");
    for (double r : c.r_values)
        if (r < 0.0) fail("r_values must all be >= 0");
    for (double w : c.omega_p_values)
        if (w < 0.0) fail("omega_p_over_kappa must be >= 0");
    if (c.fock_cutoff != 0 && c.fock_cutoff < 2) fail("fock_cutoff must be auto or >= 2");
    if (c.max_cutoff < 2 || c.max_cutoff > 400) fail("max_cutoff must lie in [2, 400]");
    if (c.fock_cutoff > c.max_cutoff) fail("fock_cutoff exceeds max_cutoff");
    if (c.frame == Frame::Lab && c.report_frame == Frame::Squeezed) {
        fail("report_frame = squeezed needs frame = squeezed");
    }
    if (!(c.time_horizon > 0.0)) fail("time_horizon must be > 0");
    if (!(c.time_step > 0.0) || c.time_step > c.time_horizon) fail("time_step must lie in (0, time_horizon]");
    if (c.threads < 1 || c.threads > 256) fail("threads must lie in [1, 256]");
    if (!(c.wigner_range > 0.0)) fail("wigner_range must be > 0");
    if (c.wigner_points < 2 || c.wigner_points > 2001) fail("wigner_points must lie in [2, 2001]");
    for (double d : c.sensitivity_delta_c)
        if (!(d > 0.0)) fail("sensitivity_delta_c values must be > 0");
    if (c.output_path.empty()) fail("output_path is empty");
}

std::vector<double> delta_c_values(const ScenarioConfig& c) {
    std::vector<double> out{c.delta_c};
    if (c.sensitivity) {
        for (double d : c.sensitivity_delta_c)
            if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
    return out;
}

// (atom_present, g0) pairs in output order: empty first, then each coupling.
std::vector<std::pair<bool, double>> cases(const ScenarioConfig& c) {
    std::vector<std::pair<bool, double>> out;
    if (c.atom != AtomSelection::Present) out.emplace_back(false, 0.0);
    if (c.atom != AtomSelection::Absent)
        for (double g : c.g0_values) out.emplace_back(true, g);
    return out;
}

bool moments_close(const MomentSet& a, const MomentSet& b) {
    auto close = [](double x, double y) { return std::abs(x - y) <= kCutoffConvergenceRel * std::max(1.0, std::abs(y)); };
    return close(a.mean_photon, b.mean_photon) && close(a.abs_second_moment(), b.abs_second_moment());
}

// Squeezed-Fock populations without the truncation guard; used only when the
// cutoff check is switched off and the record is flagged unconverged.
std::vector<double> unguarded_populations(const Matrix& rho_cav, Frame frame, double r) {
    std::vector<double> p(kDistributionReportMax + 1, 0.0);
    const int levels = static_cast<int>(rho_cav.rows());
    if (frame == Frame::Squeezed) {
        for (int n = 0; n <= kDistributionReportMax && n < levels; ++n) p[n] = rho_cav(n, n).real();
    } else {
        const Matrix cols = cavity::squeeze_block(r, 0.0, levels, kDistributionReportMax + 1);
        for (int n = 0; n <= kDistributionReportMax; ++n) {
            p[n] = (cols.col(n).adjoint() * rho_cav * cols.col(n))(0, 0).real();
        }
    }
    return p;
}

ModelParams point_params(const ScenarioConfig& c, double delta_c, double r, bool atom_present, double g0,
                         Frame frame) {
    return ModelParams::from_squeezing(frame, delta_c, r, atom_present ? g0 : 0.0, c.gamma, atom_present);
}

struct PointResult {
    ObservableRecord record;
    std::optional<WignerOutput> wigner;
};

PointResult compute_point(const ScenarioConfig& c, double delta_c, double r, bool atom_present, double g0) {
    const ModelParams params = point_params(c, delta_c, r, atom_present, g0, c.frame);
    const AdaptiveSolution sol = solve_adaptive(params, c.fock_cutoff, c.cutoff_check, c.max_cutoff);
    const DensityMatrix& rho = sol.report.state;

    const MomentSet ms = moments(rho, c.frame);
    if (!ms.satisfies_bound()) {
        throw Error(ErrorKind::InvalidState, "steady state violates |<a^2>| <= sqrt(n(n+1)) at r=" + num(r));
    }
    const MomentSet lab = c.frame == Frame::Lab ? ms : lab_moments_from_squeezed(ms, r);
    const MomentSet& shown = c.report_frame == c.frame ? ms : lab;

    PointResult out;
    ObservableRecord& rec = out.record;
    rec.scenario = to_string(c.scenario);
    rec.solver_frame = c.frame;
    rec.report_frame = c.report_frame;
    rec.atom_present = atom_present;
    rec.g0 = params.g0;
    rec.gamma = c.gamma;
    rec.delta_c = delta_c;
    rec.r = r;
    rec.omega_p = params.omega_p_amp;
    rec.omega_s = params.omega_s;
    rec.mean_photon = shown.mean_photon;
    rec.abs_second_moment = shown.abs_second_moment();
    rec.output_flux = output_flux(lab, params.kappa);
    rec.fock_cutoff = sol.fock_cutoff;
    rec.solver_residual = sol.report.residual;
    rec.truncation_tail = sol.truncation_tail;
    rec.cutoff_converged = sol.cutoff_converged;

    std::vector<double> probs;
    if (c.cutoff_check) {
        // Populations of the squeezed-frame state are the squeezed-Fock
        // populations of the lab state.
        probs = c.frame == Frame::Squeezed ? photon_distribution(rho, DistributionBasis::BareFock).probs
                                           : photon_distribution(rho, DistributionBasis::SqueezedFock, r).probs;
    } else {
        probs = unguarded_populations(partial_trace_atom(rho), c.frame, r);
    }
    std::copy(probs.begin(), probs.end(), rec.probs.begin());

    if (rec.mean_photon < 0.0 || !std::isfinite(rec.mean_photon) || !std::isfinite(rec.output_flux)) {
        throw Error(ErrorKind::InvalidState, "non-physical photon number at r=" + num(r));
    }

    if (c.wigner) {
        Matrix lab_cav = partial_trace_atom(rho);
        int lab_cutoff = sol.fock_cutoff;
        if (c.frame == Frame::Squeezed) {
            const ModelParams lab_params = point_params(c, delta_c, r, atom_present, g0, Frame::Lab);
            lab_cutoff = std::max(sol.fock_cutoff, estimate_cutoff(lab_params, c.max_cutoff));
            lab_cav = squeezed_to_lab_cavity(lab_cav, r, lab_cutoff);
        }
        const auto axis = linspace(-c.wigner_range, c.wigner_range, c.wigner_points);
        WignerOutput w;
        w.label = atom_present ? "atom" : "empty";
        w.g0 = params.g0;
        w.r = r;
        w.fock_cutoff = lab_cutoff;
        w.grid = wigner_cavity(lab_cav, axis, axis);
        out.wigner = std::move(w);
    }
    return out;
}

std::vector<TrajectoryRecord> compute_trajectory(const ScenarioConfig& c, double delta_c, double r,
                                                 bool atom_present, double g0) {
    const ModelParams params = point_params(c, delta_c, r, atom_present, g0, c.frame);
    std::vector<double> times;
    const long steps = static_cast<long>(std::llround(c.time_horizon / c.time_step));
    for (long k = 0; k <= steps; ++k) times.push_back(std::min(c.time_horizon, static_cast<double>(k) * c.time_step));
    if (times.back() < c.time_horizon) times.push_back(c.time_horizon);

    int n = c.fock_cutoff > 0 ? c.fock_cutoff : estimate_cutoff(params, c.max_cutoff);
    while (true) {
        const HilbertDims dims(n);
        // |g, 0_s>: the a_s vacuum in the squeezed frame, S(r)|0> in the lab.
        const DensityMatrix rho0 = c.frame == Frame::Squeezed ? DensityMatrix::basis_state(dims, kGround, 0)
                                                              : squeezed_vacuum_state(r, dims);
        const Liouvillian l = build_liouvillian(params, dims);
        const Trajectory traj = evolve(rho0, l, times);
        double tail = 0.0;
        for (const auto& s : traj.states) tail = std::max(tail, truncation_tail(s));
        if (tail > kTruncationTailTol && c.fock_cutoff == 0 && n < c.max_cutoff) {
            n = std::min(c.max_cutoff, std::max(n + 10, static_cast<int>(std::ceil(1.3 * n))));
            continue;
        }
        if (tail > kTruncationTailTol && c.cutoff_check) {
            throw Error(ErrorKind::Truncation, "trajectory at r=" + num(r) + " puts " + num(tail) +
                                                   " of its population above 0.8 N_max at N_max=" + std::to_string(n));
        }
        std::vector<TrajectoryRecord> out;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            out.push_back({atom_present, params.g0, c.gamma, delta_c, r, traj.times[k],
                           traj.records[k].mean_photon, traj.records[k].abs_second_moment(), n});
        }
        return out;
    }
}

// Runs jobs[k] on a small worker pool; results land in slot k. The first
// failure in job order is rethrown so errors are deterministic too.
template <class Out>
std::vector<Out> run_jobs(const std::vector<std::function<Out()>>& jobs, int threads) {
    std::vector<std::optional<Out>> slots(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            try {
                slots[k] = jobs[k]();
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int pool = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> ts;
        for (int t = 0; t < pool; ++t) ts.emplace_back(worker);
        for (auto& t : ts) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Out> out;
    out.reserve(jobs.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string atom_text(AtomSelection a) {
    return a == AtomSelection::Both ? "both" : bool_text(a == AtomSelection::Present);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hash_text(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string header_block(const ScenarioConfig& c) {
    std::ostringstream os;
    os << "# sqcav scenario output\n";
    os << "# generated: " << utc_timestamp() << "\n";
    os << "# config_hash: fnv1a64:" << hash_text(config_hash(c)) << "\n";
    os << "# units: rates and frequencies in kappa, times in 1/kappa\n";
    std::istringstream cfg(resolved_config_text(c));
    for (std::string line; std::getline(cfg, line);) os << "# config: " << line << "\n";
    if (c.scenario != ScenarioKind::Fig2) {
        const double g_max = *std::max_element(c.g0_values.begin(), c.g0_values.end());
        for (double dc : delta_c_values(c)) {
            for (double r : sweep_r_values(c, dc)) {
                const ModelParams p = ModelParams::from_squeezing(Frame::Squeezed, dc, r, g_max, c.gamma, true);
                os << "# derived: delta_c=" << num(dc) << " r=" << num(r) << " omega_p=" << num(p.omega_p_amp)
                   << " omega_s=" << num(p.omega_s) << " rwa_ratio=" << num(p.rwa_ratio()) << "\n";
            }
        }
    }
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidConfig, "cannot open output file " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Internal, "failed writing " + path.string());
}

std::string wigner_label(const ScenarioConfig& c, const WignerOutput& w) {
    const bool many = c.r_values.size() + c.omega_p_values.size() > 1 || c.g0_values.size() > 1 || c.sensitivity;
    if (!many) return w.label;
    return w.label + "_g" + num(w.g0) + "_r" + num(w.r);
}

}  // namespace

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Fig2: return "fig2";
        case ScenarioKind::Fig4: return "fig4";
        case ScenarioKind::Fig5: return "fig5";
        case ScenarioKind::Fig6: return "fig6";
        case ScenarioKind::Fig7: return "fig7";
        case ScenarioKind::Fig8: return "fig8";
        case ScenarioKind::Fig9: return "fig9";
        case ScenarioKind::Custom: return "custom";
    }
    return "custom";
}

ScenarioKind scenario_from_string(std::string_view name) {
    for (const auto& info : scenario_catalog()) {
        if (to_string(info.kind) == name) return info.kind;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown scenario '" + std::string(name) + "'");
}

std::string to_string(AtomSelection sel) { return atom_text(sel); }

const std::vector<ScenarioInfo>& scenario_catalog() {
    static const std::vector<ScenarioInfo> catalog{
        {ScenarioKind::Fig2, "cosh r against e^r / 2 for r in [0, 3]"},
        {ScenarioKind::Fig4, "squeezed-frame <n_s>(t) and |<a_s^2>(t)| from |g,0_s>, g0=5, gamma=1, r=0.4,0.8,1.2"},
        {ScenarioKind::Fig5, "squeezed-frame steady <n_s> and |<a_s^2>| vs r, empty and g0=5, gamma=1"},
        {ScenarioKind::Fig6, "output flux and lab |<a^2>| vs r, empty, g0=2 and g0=5, gamma=1"},
        {ScenarioKind::Fig7, "squeezed-Fock P_n vs n and r, empty and g0=2, gamma=0.2"},
        {ScenarioKind::Fig8, "squeezed-Fock P_n at r=1.2, empty and g0=2, gamma=0.2"},
        {ScenarioKind::Fig9, "lab-frame Wigner grids at r=1, empty and g0=5, gamma=1"},
        {ScenarioKind::Custom, "every parameter from the config file"},
    };
    return catalog;
}

ScenarioConfig default_config(ScenarioKind kind) {
    ScenarioConfig c;
    c.scenario = kind;
    c.output_path = to_string(kind) + ".csv";
    auto range = [](double a, double b, double step) { return parse_list("r_values", num(a) + ":" + num(b) + ":" + num(step)); };
    switch (kind) {
        case ScenarioKind::Fig2:
            c.r_values = range(0.0, 3.0, 0.05);
            break;
        case ScenarioKind::Fig4:
            c.g0_values = {5.0};
            c.r_values = {0.4, 0.8, 1.2};
            c.atom = AtomSelection::Present;
            break;
        case ScenarioKind::Fig5:
            c.g0_values = {5.0};
            c.r_values = range(0.0, 1.2, 0.1);
            break;
        case ScenarioKind::Fig6:
            c.g0_values = {2.0, 5.0};
            c.r_values = range(0.0, 1.5, 0.1);
            c.report_frame = Frame::Lab;
            break;
        case ScenarioKind::Fig7:
            c.g0_values = {2.0};
            c.gamma = 0.2;
            c.r_values = range(0.0, 1.2, 0.2);
            break;
        case ScenarioKind::Fig8:
            c.g0_values = {2.0};
            c.gamma = 0.2;
            c.r_values = {1.2};
            break;
        case ScenarioKind::Fig9:
            c.g0_values = {5.0};
            c.r_values = {1.0};
            c.frame = Frame::Lab;
            c.report_frame = Frame::Lab;
            c.wigner = true;
            break;
        case ScenarioKind::Custom:
            break;
    }
    return c;
}

ScenarioConfig parse_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": empty key or value");
        }
        if (!seen.insert(key).second) {
            throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        entries.emplace_back(std::move(key), std::move(value));
    }

    ScenarioConfig c = default_config(ScenarioKind::Custom);
    for (const auto& [k, v] : entries) {
        if (k == "scenario") c = default_config(scenario_from_string(v));
    }
    bool report_set = false, frame_set = false;
    for (const auto& [k, v] : entries) {
        if (k == "scenario") continue;
        else if (k == "g0_over_kappa") c.g0_values = parse_list(k, v);
        else if (k == "gamma_over_kappa") c.gamma = parse_real(k, v);
        else if (k == "delta_c_over_kappa") c.delta_c = parse_real(k, v);
        else if (k == "r_values") c.r_values = parse_list(k, v);
        else if (k == "omega_p_over_kappa") c.omega_p_values = parse_list(k, v);
        else if (k == "fock_cutoff") c.fock_cutoff = v == "auto" ? 0 : parse_int(k, v);
        else if (k == "max_cutoff") c.max_cutoff = parse_int(k, v);
        else if (k == "cutoff_check") c.cutoff_check = parse_bool(k, v);
        else if (k == "atom_present") c.atom = parse_atom(k, v);
        else if (k == "frame") { c.frame = parse_frame(k, v); frame_set = true; }
        else if (k == "report_frame") { c.report_frame = parse_frame(k, v); report_set = true; }
        else if (k == "time_horizon") c.time_horizon = parse_real(k, v);
        else if (k == "time_step") c.time_step = parse_real(k, v);
        else if (k == "wigner") c.wigner = parse_bool(k, v);
        else if (k == "sensitivity") c.sensitivity = parse_bool(k, v);
        else if (k == "sensitivity_delta_c") c.sensitivity_delta_c = parse_list(k, v);
        else if (k == "threads") c.threads = parse_int(k, v);
        else if (k == "wigner_range") c.wigner_range = parse_real(k, v);
        else if (k == "wigner_points") c.wigner_points = parse_int(k, v);
        else if (k == "output_path") c.output_path = v;
        else throw Error(ErrorKind::InvalidConfig, "unknown config key '" + k + "'");
    }
    if (frame_set && !report_set) c.report_frame = c.frame;
    check_config(c);
    return c;
}

ScenarioConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

ScenarioConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot read config file " + path.string());
    return parse_config(in);
}

namespace {

std::string physics_text(const ScenarioConfig& c) {
    std::ostringstream os;
    os << "scenario = " << to_string(c.scenario) << "\n";
    os << "g0_over_kappa = " << list_text(c.g0_values) << "\n";
    os << "gamma_over_kappa = " << num(c.gamma) << "\n";
    os << "delta_c_over_kappa = " << num(c.delta_c) << "\n";
    if (c.omega_p_values.empty()) {
        os << "r_values = " << list_text(c.r_values) << "\n";
    } else {
        os << "omega_p_over_kappa = " << list_text(c.omega_p_values) << "\n";
    }
    os << "fock_cutoff = " << (c.fock_cutoff == 0 ? std::string("auto") : std::to_string(c.fock_cutoff)) << "\n";
    os << "max_cutoff = " << c.max_cutoff << "\n";
    os << "cutoff_check = " << bool_text(c.cutoff_check) << "\n";
    os << "atom_present = " << atom_text(c.atom) << "\n";
    os << "frame = " << to_string(c.frame) << "\n";
    os << "report_frame = " << to_string(c.report_frame) << "\n";
    os << "time_horizon = " << num(c.time_horizon) << "\n";
    os << "time_step = " << num(c.time_step) << "\n";
    os << "wigner = " << bool_text(c.wigner) << "\n";
    os << "wigner_range = " << num(c.wigner_range) << "\n";
    os << "wigner_points = " << c.wigner_points << "\n";
    os << "sensitivity = " << bool_text(c.sensitivity) << "\n";
    os << "sensitivity_delta_c = " << list_text(c.sensitivity_delta_c) << "\n";
    return os.str();
}

}  // namespace

std::string resolved_config_text(const ScenarioConfig& c) {
    return physics_text(c) + "threads = " + std::to_string(c.threads) + "\noutput_path = " + c.output_path + "\n";
}

std::uint64_t config_hash(const ScenarioConfig& c) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : physics_text(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<double> sweep_r_values(const ScenarioConfig& c, double delta_c) {
    if (c.omega_p_values.empty()) return c.r_values;
    std::vector<double> out;
    for (double w : c.omega_p_values) out.push_back(squeezing_param(delta_c, w));
    return out;
}

int estimate_cutoff(const ModelParams& p, int max_cutoff) {
    // Per-level decay q of the photon-number tail. The squeezed-frame state
    // is close to thermal with n = sinh^2 r, so q = tanh^2 r. The lab state is
    // close to a squeezed vacuum whose populations fall like tanh(r_eff)^n,
    // with r_eff matched to the empty-cavity photon number.
    double q = 0.0;
    if (p.frame == Frame::Squeezed) {
        q = std::tanh(p.r) * std::tanh(p.r);
    } else {
        const double n = oracle::empty_cavity_steady_moments(p.delta_c, p.omega_p_amp, p.kappa).n;
        q = std::tanh(std::asinh(std::sqrt(std::max(0.0, n))));
    }
    int n = 20;
    if (q > 1e-6) {
        // q^(0.8 N) < 1e-6, with some slack
        const double need = -std::log(1e-6) / (0.8 * -std::log(q));
        n = std::max(n, static_cast<int>(std::ceil(need)) + 10);
    }
    if (p.atom_present) n += 10;
    return std::min(n, max_cutoff);
}

bool Diagnostics::ok() const {
    return std::none_of(issues.begin(), issues.end(), [](const Issue& i) { return i.fatal; });
}

Diagnostics validate_config(const ScenarioConfig& c) {
    Diagnostics d;
    try {
        check_config(c);
    } catch (const Error& e) {
        d.issues.push_back({e.kind(), e.what(), true});
        return d;
    }
    if (c.scenario == ScenarioKind::Fig2) return d;
    const double g_max = *std::max_element(c.g0_values.begin(), c.g0_values.end());
    const bool atom = c.atom != AtomSelection::Absent;
    for (double dc : delta_c_values(c)) {
        std::vector<double> rs;
        if (c.omega_p_values.empty()) {
            rs = c.r_values;
        } else {
            for (double w : c.omega_p_values) {
                if (!(w < dc)) {
                    d.issues.push_back({ErrorKind::Threshold,
                                        "omega_p = " + num(w) + " is at or above threshold delta_c = " + num(dc), true});
                    continue;
                }
                rs.push_back(squeezing_param(dc, w));
            }
        }
        for (double r : rs) {
            Diagnostics::Point pt{};
            pt.delta_c = dc;
            pt.r = r;
            try {
                const ModelParams p = ModelParams::from_squeezing(c.frame, dc, r, atom ? g_max : 0.0, c.gamma, atom);
                pt.omega_p = p.omega_p_amp;
                pt.omega_s = p.omega_s;
                pt.threshold_margin = dc - p.omega_p_amp;
                pt.rwa_ratio = atom ? p.rwa_ratio() : 0.0;
                pt.estimated_cutoff = estimate_cutoff(p, 100000);
            } catch (const Error& e) {
                d.issues.push_back({e.kind(), e.what(), true});
                continue;
            }
            d.points.push_back(pt);
            if (pt.estimated_cutoff > c.max_cutoff && c.scenario != ScenarioKind::Fig2) {
                d.issues.push_back({ErrorKind::Truncation,
                                    "r = " + num(r) + " (delta_c = " + num(dc) + ") needs about N_max = " +
                                        std::to_string(pt.estimated_cutoff) + " > max_cutoff " +
                                        std::to_string(c.max_cutoff),
                                    c.cutoff_check});
            } else if (c.fock_cutoff != 0 && c.fock_cutoff < pt.estimated_cutoff) {
                d.issues.push_back({ErrorKind::Truncation,
                                    "fock_cutoff " + std::to_string(c.fock_cutoff) + " is below the estimate " +
                                        std::to_string(pt.estimated_cutoff) + " at r = " + num(r),
                                    false});
            }
            if (c.frame == Frame::Squeezed && atom && pt.rwa_ratio >= 0.1) {
                d.issues.push_back({ErrorKind::InvalidConfig,
                                    "rotating-wave condition |g_s'|/(omega_s + delta_A) = " + num(pt.rwa_ratio) +
                                        " >= 0.1 at r = " + num(r) + " (delta_c = " + num(dc) +
                                        "); squeezed-frame results drop the counter-rotating coupling",
                                    false});
            }
        }
    }
    return d;
}

AdaptiveSolution solve_adaptive(const ModelParams& params, int fock_cutoff, bool cutoff_check, int max_cutoff) {
    const bool automatic = fock_cutoff == 0;
    int n = automatic ? estimate_cutoff(params, max_cutoff) : fock_cutoff;
    SteadyStateReport rep = solve_model_steady_state(params, HilbertDims(n));
    double tail = truncation_tail(rep.state);
    while (automatic && tail > kTruncationTailTol && n < max_cutoff) {
        n = std::min(max_cutoff, std::max(n + 10, static_cast<int>(std::ceil(1.3 * n))));
        rep = solve_model_steady_state(params, HilbertDims(n));
        tail = truncation_tail(rep.state);
    }
    if (!cutoff_check) return {std::move(rep), n, tail, false};
    if (tail > kTruncationTailTol) {
        throw Error(ErrorKind::Truncation, "steady state at r=" + num(params.r) + " puts " + num(tail) +
                                               " of its population above 0.8 N_max at N_max=" + std::to_string(n) +
                                               "; raise fock_cutoff or max_cutoff");
    }
    for (;;) {
        SteadyStateReport finer = solve_model_steady_state(params, HilbertDims(n + kConvergenceStep));
        const bool converged = moments_close(moments(rep.state, params.frame), moments(finer.state, params.frame));
        // An automatic cutoff keeps stepping until N and N + 10 agree.
        if (converged || !automatic || n + kConvergenceStep > max_cutoff) return {std::move(rep), n, tail, converged};
        rep = std::move(finer);
        n += kConvergenceStep;
        tail = truncation_tail(rep.state);
    }
}

ObservableRecord compute_record(const ScenarioConfig& config, double delta_c, double r, bool atom_present,
                                double g0) {
    return compute_point(config, delta_c, r, atom_present, g0).record;
}

ScenarioResult compute_scenario(const ScenarioConfig& c) {
    check_config(c);
    ScenarioResult result;
    if (c.scenario == ScenarioKind::Fig2) {
        for (double r : c.r_values) {
            const double ch = std::cosh(r);
            const double half = 0.5 * std::exp(r);
            result.curve.push_back({r, ch, half, std::abs(ch - half) / ch});
        }
        return result;
    }

    if (c.scenario == ScenarioKind::Fig4) {
        std::vector<std::function<std::vector<TrajectoryRecord>()>> jobs;
        for (double dc : delta_c_values(c))
            for (double r : sweep_r_values(c, dc))
                for (const auto& [atom, g0] : cases(c))
                    jobs.emplace_back([&c, dc, r, atom = atom, g0 = g0] { return compute_trajectory(c, dc, r, atom, g0); });
        for (auto& part : run_jobs(jobs, c.threads))
            result.trajectory.insert(result.trajectory.end(), part.begin(), part.end());
        return result;
    }

    std::vector<std::function<PointResult()>> jobs;
    for (double dc : delta_c_values(c))
        for (double r : sweep_r_values(c, dc))
            for (const auto& [atom, g0] : cases(c))
                jobs.emplace_back([&c, dc, r, atom = atom, g0 = g0] { return compute_point(c, dc, r, atom, g0); });
    for (auto& p : run_jobs(jobs, c.threads)) {
        result.records.push_back(std::move(p.record));
        if (p.wigner) result.wigner.push_back(std::move(*p.wigner));
    }
    return result;
}

const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> v{"scenario", "solver_frame", "report_frame", "atom_present", "g0", "gamma",
                                   "delta_c", "r", "omega_p", "omega_s", "mean_photon", "abs_second_moment",
                                   "output_flux"};
        for (int n = 0; n <= kDistributionReportMax; ++n) v.push_back("P" + std::to_string(n));
        for (const char* s : {"fock_cutoff", "solver_residual", "truncation_tail", "cutoff_converged"}) v.push_back(s);
        return v;
    }();
    return cols;
}

std::string main_csv_body(const ScenarioConfig& c, const ScenarioResult& result) {
    std::ostringstream os;
    if (c.scenario == ScenarioKind::Fig2) {
        os << "r,cosh_r,half_exp_r,relative_difference\n";
        for (const auto& row : result.curve) {
            os << num(row.r) << ',' << num(row.cosh_r) << ',' << num(row.half_exp_r) << ','
               << num(row.relative_difference) << '\n';
        }
        return os.str();
    }
    if (c.scenario == ScenarioKind::Fig4) {
        os << "scenario,solver_frame,atom_present,g0,gamma,delta_c,r,t,mean_photon,abs_second_moment,fock_cutoff\n";
        for (const auto& row : result.trajectory) {
            os << to_string(c.scenario) << ',' << to_string(c.frame) << ',' << (row.atom_present ? 1 : 0) << ','
               << num(row.g0) << ',' << num(row.gamma) << ',' << num(row.delta_c) << ',' << num(row.r) << ','
               << num(row.t) << ',' << num(row.mean_photon) << ',' << num(row.abs_second_moment) << ','
               << row.fock_cutoff << '\n';
        }
        return os.str();
    }
    const auto& cols = record_columns();
    for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
    os << '\n';
    for (const auto& rec : result.records) {
        os << rec.scenario << ',' << to_string(rec.solver_frame) << ',' << to_string(rec.report_frame) << ','
           << (rec.atom_present ? 1 : 0) << ',' << num(rec.g0) << ',' << num(rec.gamma) << ',' << num(rec.delta_c)
           << ',' << num(rec.r) << ',' << num(rec.omega_p) << ',' << num(rec.omega_s) << ','
           << num(rec.mean_photon) << ',' << num(rec.abs_second_moment) << ',' << num(rec.output_flux);
        for (double p : rec.probs) os << ',' << num(p);
        os << ',' << rec.fock_cutoff << ',' << num(rec.solver_residual) << ',' << num(rec.truncation_tail) << ','
           << (rec.cutoff_converged ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string wigner_csv_body(const WignerOutput& w) {
    std::ostringstream os;
    const auto q = w.grid.quadratures();
    os << "# wigner: " << w.label << " g0=" << num(w.g0) << " r=" << num(w.r) << " lab_fock_cutoff=" << w.fock_cutoff
       << "\n";
    os << "# integral=" << num(w.grid.integral()) << " var_major=" << num(q.var_major) << " var_minor="
       << num(q.var_minor) << " major_axis_angle=" << num(q.angle) << "\n";
    os << "# rows: x = Re(alpha); columns: p = Im(alpha); points with |alpha|^2 > N_max/4: "
       << w.grid.outside_margin.count() << "\n";
    os << "x\\p";
    for (double p : w.grid.p_axis) os << ',' << num(p);
    os << '\n';
    for (std::size_t i = 0; i < w.grid.x_axis.size(); ++i) {
        os << num(w.grid.x_axis[i]);
        for (std::size_t j = 0; j < w.grid.p_axis.size(); ++j) {
            os << ',' << num(w.grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        os << '\n';
    }
    return os.str();
}

WrittenFiles write_outputs(const ScenarioConfig& c, const ScenarioResult& result) {
    WrittenFiles files;
    const std::string header = header_block(c);
    files.main = c.output_path;
    write_file(files.main, header + main_csv_body(c, result));
    for (const auto& w : result.wigner) {
        std::filesystem::path p = files.main;
        p.replace_filename(files.main.stem().string() + "_wigner_" + wigner_label(c, w) + ".csv");
        write_file(p, header + wigner_csv_body(w));
        files.wigner.push_back(p);
    }
    return files;
}

WrittenFiles run_scenario(const ScenarioConfig& config) { return write_outputs(config, compute_scenario(config)); }

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidConfig:
        case ErrorKind::InvalidDims:
        case ErrorKind::DimensionMismatch:
            return 2;
        case ErrorKind::Threshold:
            return 3;
        case ErrorKind::Truncation:
            return 4;
        case ErrorKind::InvalidState:
        case ErrorKind::DegenerateSteadyState:
        case ErrorKind::NonConvergence:
        case ErrorKind::StepSize:
        case ErrorKind::Positivity:
            return 5;
        case ErrorKind::Internal:
            return 1;
    }
    return 1;
}

}  // namespace sqcav
