#include "gfm/config.hpp"

#include "gfm/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unistd.h>

namespace gfm::config {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
    throw Error(ErrorCode::config, source + ":" + std::to_string(line) + ": " + msg);
}

// ------------------------------------------------------------------ config

template <class T>
struct Key {
    std::string section;
    std::string name;
    std::string unit;
    std::function<double&(T&)> ref;
};

std::vector<Key<Config>> station_keys(const std::string& section, MmcStation& (*get)(Config&)) {
    return {{section, "U_N", "V, line-to-line rms", [get](Config& c) -> double& { return get(c).U_N; }},
            {section, "U_ac", "V, peak phase setpoint", [get](Config& c) -> double& { return get(c).U_ac; }},
            {section, "R_s", "ohm, arm/2 plus transformer", [get](Config& c) -> double& { return get(c).converter.R_s; }},
            {section, "L_s", "H", [get](Config& c) -> double& { return get(c).converter.L_s; }},
            {section, "R_d", "ohm, 2/3 arm resistance", [get](Config& c) -> double& { return get(c).converter.R_d; }},
            {section, "L_d", "H, 2/3 arm inductance", [get](Config& c) -> double& { return get(c).converter.L_d; }},
            {section, "U_eq_nom", "V", [get](Config& c) -> double& { return get(c).converter.U_eq_nom; }},
            {section, "W_t_nom", "J, C_eq follows as 2 W_t_nom / U_eq_nom^2",
             [get](Config& c) -> double& { return get(c).converter.W_t_nom; }}};
}

MmcStation& station_on(Config& c) { return c.sys.mmc_on; }
MmcStation& station_off(Config& c) { return c.sys.mmc_off; }

#define CK(sec, key, unit, expr) Key<Config>{sec, key, unit, [](Config& c) -> double& { return expr; }}

const std::vector<Key<Config>>& config_keys() {
    static const std::vector<Key<Config>> keys = [] {
        std::vector<Key<Config>> k{
            CK("system", "f_N", "Hz", c.sys.f_N),
            CK("system", "S_N", "VA, converter rating and per-unit base", c.sys.S_N),
            CK("system", "U_dc_nom", "V, pole to pole", c.sys.U_dc_nom),
            CK("system.onshore", "U_N", "V, line-to-line rms", c.sys.onshore.U_N),
            CK("system.onshore", "U_th", "V, peak phase", c.sys.onshore.U_th),
            CK("system.onshore", "R_th", "ohm, calibrated", c.sys.onshore.R_th),
            CK("system.onshore", "L_th", "H, calibrated", c.sys.onshore.L_th),
            CK("system.onshore", "P_load", "W", c.sys.onshore.P_load),
            CK("system.onshore", "H", "s", c.sys.onshore.machine.H),
            CK("system.onshore", "droop", "p.u.", c.sys.onshore.machine.droop),
            CK("system.onshore", "T_gov", "s", c.sys.onshore.machine.T_gov),
            CK("system.onshore", "S_base", "VA, machine rating", c.sys.onshore.machine.S_base),
        };
        for (auto& x : station_keys("system.mmc_on", station_on)) k.push_back(x);
        for (auto& x : station_keys("system.mmc_off", station_off)) k.push_back(x);
        const std::vector<Key<Config>> rest{
            CK("system.hvdc_line", "R_dc", "ohm, whole line", c.sys.line.R_dc),
            CK("system.hvdc_line", "L_dc", "H, whole line", c.sys.line.L_dc),
            CK("system.hvdc_line", "C_dc", "F, whole line", c.sys.line.C_dc),
            CK("system.owpp", "U_N", "V, line-to-line rms at the GSC", c.sys.owpp.U_N),
            CK("system.owpp", "U_ac", "V, peak phase setpoint", c.sys.owpp.U_ac),
            CK("system.owpp", "P_set", "W, dispatch", c.sys.owpp.P_set),
            CK("system.owpp", "K_Hw", "W s/Hz", c.sys.owpp.K_Hw),
            CK("system.owpp", "K_Rw", "W/Hz", c.sys.owpp.K_Rw),
            CK("system.owpp", "cable_length_km", "km, calibrated", c.sys.owpp.cable_length_km),
            CK("system.owpp", "cable_R_per_km", "ohm/km", c.sys.owpp.cable_R_per_km),
            CK("system.owpp", "cable_L_per_km", "H/km", c.sys.owpp.cable_L_per_km),
            CK("system.owpp", "R_GSC", "ohm", c.sys.owpp.wtg.R_GSC),
            CK("system.owpp", "L_GSC", "H", c.sys.owpp.wtg.L_GSC),
            CK("system.owpp", "C_link", "F", c.sys.owpp.wtg.C_link),
            CK("system.owpp", "U_link_nom", "V", c.sys.owpp.wtg.U_link_nom),
            CK("system.owpp", "T_msc", "s, 0 for an ideal machine side", c.sys.owpp.wtg.T_msc),
            CK("tuning", "omega_s", "rad/s, controller sampling", c.tuning.omega_s),
            CK("tuning", "omega_idc", "rad/s, DC current loop bandwidth", c.tuning.omega_idc),
            CK("tuning", "h_ac_on", "-", c.tuning.h_ac_on),
            CK("tuning", "h_ac_off", "-", c.tuning.h_ac_off),
            CK("tuning", "h_ac_w", "-", c.tuning.h_ac_w),
            CK("tuning", "h_dc", "-", c.tuning.h_dc),
            CK("tuning", "R_v_pu", "p.u.", c.tuning.R_v_pu),
            CK("tuning", "T_v_on", "s", c.tuning.T_v_on),
            CK("tuning", "T_v_off", "s", c.tuning.T_v_off),
            CK("tuning", "T_vw", "s", c.tuning.T_vw),
            CK("tuning", "delta_U_dcm", "V", c.tuning.delta_U_dcm),
            CK("tuning", "delta_f_m_on", "Hz", c.tuning.delta_f_m_on),
            CK("tuning", "delta_f_m_off", "Hz", c.tuning.delta_f_m_off),
            CK("scenario", "duration", "s, including the settle period", c.scenario.duration),
            CK("scenario", "dt", "s", c.scenario.dt),
            CK("scenario", "settle_time", "s", c.scenario.settle_time),
            CK("scenario", "log_rate", "Hz", c.scenario.log_rate),
        };
        k.insert(k.end(), rest.begin(), rest.end());
        return k;
    }();
    return keys;
}

#undef CK

// derived quantities that are not keys
void finish(Config& c) {
    for (auto* st : {&c.sys.mmc_on, &c.sys.mmc_off}) {
        auto& m = st->converter;
        if (m.U_eq_nom > 0.0) m.C_eq = 2.0 * m.W_t_nom / (m.U_eq_nom * m.U_eq_nom);
    }
    c.sys.onshore.machine.f_N = c.sys.f_N;
    c.tuning.omega_N = 2.0 * std::numbers::pi * c.sys.f_N;
}

const char* preset_name(sim::FrequencyPreset p) {
    switch (p) {
        case sim::FrequencyPreset::none: return "none";
        case sim::FrequencyPreset::fcr: return "fcr";
        case sim::FrequencyPreset::inertia: return "inertia";
    }
    return "none";
}

const char* kind_name(sim::EventKind k) {
    switch (k) {
        case sim::EventKind::onshore_load_step: return "onshore_load_step";
        case sim::EventKind::wind_power_step: return "wind_power_step";
        case sim::EventKind::setpoint_change: return "setpoint_change";
    }
    return "";
}

}  // namespace

std::string format_events(const std::vector<sim::Event>& events) {
    std::string out;
    for (const auto& e : events) {
        if (!out.empty()) out += "; ";
        out += num(e.t) + " " + kind_name(e.kind);
        if (e.kind == sim::EventKind::setpoint_change) out += " " + e.target;
        out += " " + num(e.value);
    }
    return out;
}

std::vector<sim::Event> parse_events(const std::string& text) {
    std::vector<sim::Event> events;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ';');) {
        const auto tok = split_ws(item);
        if (tok.empty()) continue;
        sim::Event e;
        auto bad = [&](const std::string& why) {
            throw Error(ErrorCode::config, "event '" + trim(item) + "': " + why);
        };
        if (tok.size() < 3 || !parse_double(tok[0], e.t)) bad("expected '<t> <kind> [target] <value>'");
        if (tok[1] == "onshore_load_step") e.kind = sim::EventKind::onshore_load_step;
        else if (tok[1] == "wind_power_step") e.kind = sim::EventKind::wind_power_step;
        else if (tok[1] == "setpoint_change") e.kind = sim::EventKind::setpoint_change;
        else bad("unknown kind '" + tok[1] + "'");
        const std::size_t expect = e.kind == sim::EventKind::setpoint_change ? 4 : 3;
        if (tok.size() != expect) bad("wrong number of fields");
        if (expect == 4) e.target = tok[2];
        if (!parse_double(tok.back(), e.value)) bad("bad value '" + tok.back() + "'");
        events.push_back(e);
    }
    return events;
}

Config parse_config(std::istream& is, const std::string& source) {
    Config c;
    std::map<std::string, const Key<Config>*> index;
    for (const auto& k : config_keys()) index[k.section + "." + k.name] = &k;
    static const std::set<std::string> sections{"system",          "system.onshore", "system.mmc_on",
                                                "system.mmc_off",  "system.hvdc_line", "system.owpp",
                                                "tuning",          "scenario"};
    std::string section;
    std::set<std::string> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(source, line_no, "malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!sections.count(section)) fail(source, line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(source, line_no, "expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = std::string(std::string_view(line).substr(eq + 1));
        if (const auto hash = value.find('#'); hash != std::string::npos) value.resize(hash);
        value = trim(value);
        if (section.empty()) fail(source, line_no, "key '" + key + "' outside any section");
        const std::string full = section + "." + key;
        if (!seen.insert(full).second) fail(source, line_no, "key '" + full + "' given twice");

        if (full == "scenario.full_rate_log") {
            if (value == "true" || value == "1") c.scenario.full_rate_log = true;
            else if (value == "false" || value == "0") c.scenario.full_rate_log = false;
            else fail(source, line_no, "key '" + full + "': expected true or false");
            continue;
        }
        if (full == "scenario.preset") {
            try {
                c.preset = sim::parse_preset(value);
            } catch (const Error& e) {
                fail(source, line_no, "key '" + full + "': " + e.what());
            }
            continue;
        }
        if (full == "scenario.events") {
            try {
                c.scenario.events = parse_events(value);
            } catch (const Error& e) {
                fail(source, line_no, "key '" + full + "': " + e.what());
            }
            continue;
        }
        const auto it = index.find(full);
        if (it == index.end()) fail(source, line_no, "unknown key '" + key + "' in [" + section + "]");
        double v = 0.0;
        if (!parse_double(value, v)) fail(source, line_no, "key '" + full + "': '" + value + "' is not a finite number");
        it->second->ref(c) = v;
    }
    finish(c);
    try {
        c.sys.validate();
        c.tuning.validate();
        c.scenario.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::config, source + ": " + e.what());
    }
    return c;
}

Config load_config(const std::string& path) {
    if (path.empty()) {
        Config c;
        finish(c);
        return c;
    }
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::config, "cannot open config '" + path + "'");
    return parse_config(f, path);
}

std::string serialize_config(const Config& c_in) {
    Config c = c_in;
    std::ostringstream os;
    os << "# gfmsim configuration; SI units, peak phase AC voltages\n";
    std::string section;
    for (const auto& k : config_keys()) {
        if (k.section != section) {
            if (!section.empty()) os << "\n";
            section = k.section;
            os << "[" << section << "]\n";
        }
        os << k.name << " = " << num(k.ref(c)) << "  # " << k.unit << "\n";
    }
    os << "full_rate_log = " << (c.scenario.full_rate_log ? "true" : "false") << "\n";
    os << "preset = " << preset_name(c.preset) << "  # none, fcr or inertia\n";
    os << "events = " << format_events(c.scenario.events) << "\n";
    return os.str();
}

// ------------------------------------------------------------------- gains

namespace {

struct GainKey {
    std::string name;
    std::string unit;
    std::function<double&(GainsFile&)> ref;
};

#define GK(key, unit, expr) GainKey{key, unit, [](GainsFile& g) -> double& { return expr; }}

std::vector<GainKey> mmc_keys(const std::string& p, control::MmcControllerGains& (*m)(GainsFile&)) {
    auto K = [&](const char* n, const char* u, double control::MmcControllerGains::*f) {
        return GainKey{p + "." + n, u, [m, f](GainsFile& g) -> double& { return m(g).*f; }};
    };
    using G = control::MmcControllerGains;
    return {K("K_H", "Hz/J", &G::K_H),         K("K_D", "rad/Hz", &G::K_D),       K("K_R", "V/Hz", &G::K_R),
            K("R_v", "ohm", &G::R_v),          K("T_v", "s", &G::T_v),            K("K_pUdc", "A/V", &G::K_pUdc),
            K("K_iUdc", "A/(V s)", &G::K_iUdc), K("K_pIdc", "V/A", &G::K_pIdc),   K("K_iIdc", "V/(A s)", &G::K_iIdc),
            K("f_star", "Hz", &G::f_star),     K("U_mid_star", "V", &G::U_mid_star), K("W_t_star", "J", &G::W_t_star),
            K("R_dc", "ohm", &G::R_dc)};
}

control::MmcControllerGains& g_on(GainsFile& g) { return g.gains.mmc_on; }
control::MmcControllerGains& g_off(GainsFile& g) { return g.gains.mmc_off; }

const std::vector<GainKey>& gain_keys() {
    static const std::vector<GainKey> keys = [] {
        std::vector<GainKey> k = mmc_keys("mmc_on", g_on);
        for (auto& x : mmc_keys("mmc_off", g_off)) k.push_back(x);
        const std::vector<GainKey> rest{
            GK("wtg.K_Hlink", "Hz/J", g.gains.wtg.K_Hlink),
            GK("wtg.K_Dlink", "rad/Hz", g.gains.wtg.K_Dlink),
            GK("wtg.R_vw", "ohm", g.gains.wtg.R_vw),
            GK("wtg.T_vw", "s", g.gains.wtg.T_vw),
            GK("wtg.K_Hw", "W s/Hz", g.gains.wtg.K_Hw),
            GK("wtg.K_Rw", "W/Hz", g.gains.wtg.K_Rw),
            GK("wtg.P_set", "W", g.gains.wtg.P_set),
            GK("wtg.W_link_star", "J", g.gains.wtg.W_link_star),
            GK("wtg.U_link_nom", "V", g.gains.wtg.U_link_nom),
            GK("wtg.f_star", "Hz", g.gains.wtg.f_star),
            GK("provenance.omega_N", "rad/s", g.inputs.omega_N),
            GK("provenance.omega_s", "rad/s", g.inputs.omega_s),
            GK("provenance.omega_idc", "rad/s", g.inputs.omega_idc),
            GK("provenance.h_ac_on", "-", g.inputs.h_ac_on),
            GK("provenance.h_ac_off", "-", g.inputs.h_ac_off),
            GK("provenance.h_ac_w", "-", g.inputs.h_ac_w),
            GK("provenance.h_dc", "-", g.inputs.h_dc),
            GK("provenance.R_v_pu", "p.u.", g.inputs.R_v_pu),
            GK("provenance.T_v_on", "s", g.inputs.T_v_on),
            GK("provenance.T_v_off", "s", g.inputs.T_v_off),
            GK("provenance.T_vw", "s", g.inputs.T_vw),
            GK("provenance.delta_U_dcm", "V", g.inputs.delta_U_dcm),
            GK("provenance.delta_f_m_on", "Hz", g.inputs.delta_f_m_on),
            GK("provenance.delta_f_m_off", "Hz", g.inputs.delta_f_m_off),
            GK("provenance.P_set", "W, operating point", g.P_set),
            GK("provenance.delta_on", "rad", g.delta_on),
            GK("provenance.delta_off", "rad", g.delta_off),
            GK("provenance.delta_w", "rad", g.delta_w),
        };
        k.insert(k.end(), rest.begin(), rest.end());
        return k;
    }();
    return keys;
}

#undef GK

std::string poly_text(const linsys::Polynomial& p) {
    std::string s;
    for (double c : p.coeffs()) s += (s.empty() ? "" : " ") + num(c);
    return s;
}

}  // namespace

GainsFile gains_file_from(const tuning::TuningReport& r, const SystemParams& sys) {
    GainsFile g;
    g.gains = r.gains;
    g.inputs = r.inputs;
    g.P_set = sys.owpp.P_set;
    g.delta_on = r.delta_on;
    g.delta_off = r.delta_off;
    g.delta_w = r.delta_w;
    return g;
}

std::string serialize_gains(const GainsFile& in) {
    GainsFile g = in;
    std::ostringstream os;
    os << "# gfmsim controller gains; coefficient lists are in ascending powers of s\n";
    const auto& keys = gain_keys();
    bool provenance = false;
    for (const auto& k : keys) {
        if (!provenance && k.name.rfind("provenance.", 0) == 0) {
            provenance = true;
            os << "# tuning inputs and operating point\n";
        }
        os << k.name << " = " << num(k.ref(g)) << "  # " << k.unit << "\n";
        if (k.name == "mmc_on.R_dc" || k.name == "mmc_off.R_dc") {
            const auto& m = k.name[4] == 'o' && k.name[5] == 'n' ? g.gains.mmc_on : g.gains.mmc_off;
            const std::string p = k.name.substr(0, k.name.find('.'));
            os << p << ".cmp_num = " << poly_text(m.cmp_num) << "  # G_cmp numerator\n";
            os << p << ".cmp_den = " << poly_text(m.cmp_den) << "  # G_cmp denominator\n";
        }
    }
    return os.str();
}

GainsFile parse_gains(std::istream& is, const std::string& source) {
    GainsFile g;
    std::map<std::string, const GainKey*> index;
    for (const auto& k : gain_keys()) index[k.name] = &k;
    std::set<std::string> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(source, line_no, "expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = std::string(std::string_view(line).substr(eq + 1));
        if (const auto hash = value.find('#'); hash != std::string::npos) value.resize(hash);
        value = trim(value);
        if (!seen.insert(key).second) fail(source, line_no, "key '" + key + "' given twice");
        if (key == "mmc_on.cmp_num" || key == "mmc_on.cmp_den" || key == "mmc_off.cmp_num" ||
            key == "mmc_off.cmp_den") {
            std::vector<double> c;
            for (const auto& tok : split_ws(value)) {
                double v = 0.0;
                if (!parse_double(tok, v)) fail(source, line_no, "key '" + key + "': bad coefficient '" + tok + "'");
                c.push_back(v);
            }
            if (c.empty()) fail(source, line_no, "key '" + key + "': empty coefficient list");
            auto& m = key[4] == 'o' && key[5] == 'n' ? g.gains.mmc_on : g.gains.mmc_off;
            (key.ends_with("num") ? m.cmp_num : m.cmp_den) = linsys::Polynomial(c);
            continue;
        }
        const auto it = index.find(key);
        if (it == index.end()) fail(source, line_no, "unknown key '" + key + "'");
        double v = 0.0;
        if (!parse_double(value, v)) fail(source, line_no, "key '" + key + "': '" + value + "' is not a finite number");
        it->second->ref(g) = v;
    }
    for (const auto& k : gain_keys()) {
        if (!seen.count(k.name)) throw Error(ErrorCode::config, source + ": missing key '" + k.name + "'");
    }
    try {
        g.gains.mmc_on.validate();
        g.gains.mmc_off.validate();
        g.gains.wtg.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::config, source + ": " + e.what());
    }
    return g;
}

GainsFile load_gains(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::config, "cannot open gains file '" + path + "'");
    return parse_gains(f, path);
}

double* gain_field(ControllerGains& g, const std::string& key) {
    using M = control::MmcControllerGains;
    using W = control::WtgControllerGains;
    static const std::map<std::string, double M::*> mmc{
        {"K_H", &M::K_H},       {"K_D", &M::K_D},       {"K_R", &M::K_R},       {"R_v", &M::R_v},
        {"T_v", &M::T_v},       {"K_pUdc", &M::K_pUdc}, {"K_iUdc", &M::K_iUdc}, {"K_pIdc", &M::K_pIdc},
        {"K_iIdc", &M::K_iIdc}, {"f_star", &M::f_star}, {"U_mid_star", &M::U_mid_star},
        {"W_t_star", &M::W_t_star}, {"R_dc", &M::R_dc}};
    static const std::map<std::string, double W::*> wtg{
        {"K_Hlink", &W::K_Hlink}, {"K_Dlink", &W::K_Dlink}, {"R_vw", &W::R_vw},     {"T_vw", &W::T_vw},
        {"K_Hw", &W::K_Hw},       {"K_Rw", &W::K_Rw},       {"P_set", &W::P_set},   {"W_link_star", &W::W_link_star},
        {"U_link_nom", &W::U_link_nom}, {"f_star", &W::f_star}};
    const auto dot = key.find('.');
    if (dot == std::string::npos) return nullptr;
    const std::string head = key.substr(0, dot), field = key.substr(dot + 1);
    if (head == "wtg") {
        const auto it = wtg.find(field);
        return it == wtg.end() ? nullptr : &(g.wtg.*(it->second));
    }
    if (head == "mmc_on" || head == "mmc_off") {
        const auto it = mmc.find(field);
        if (it == mmc.end()) return nullptr;
        return &((head == "mmc_on" ? g.mmc_on : g.mmc_off).*(it->second));
    }
    return nullptr;
}

double* tuning_field(tuning::TuningInputs& in, const std::string& key) {
    using T = tuning::TuningInputs;
    static const std::map<std::string, double T::*> fields{
        {"omega_s", &T::omega_s},         {"omega_idc", &T::omega_idc},   {"h_ac_on", &T::h_ac_on},
        {"h_ac_off", &T::h_ac_off},       {"h_ac_w", &T::h_ac_w},         {"h_dc", &T::h_dc},
        {"R_v_pu", &T::R_v_pu},           {"T_v_on", &T::T_v_on},         {"T_v_off", &T::T_v_off},
        {"T_vw", &T::T_vw},               {"delta_U_dcm", &T::delta_U_dcm}, {"delta_f_m_on", &T::delta_f_m_on},
        {"delta_f_m_off", &T::delta_f_m_off}};
    const auto it = fields.find(key);
    return it == fields.end() ? nullptr : &(in.*(it->second));
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::config, "cannot write '" + tmp.string() + "'");
        f << content;
        f.flush();
        if (!f) {
            f.close();
            fs::remove(tmp);
            throw Error(ErrorCode::config, "write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorCode::config, "cannot rename into '" + path + "': " + ec.message());
    }
}

}  // namespace gfm::config
