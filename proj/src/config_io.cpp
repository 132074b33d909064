#include "cbc/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cbc/errors.hpp"
#include "cbc/hashing.hpp"

namespace cbc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + value + "'");
    }
    if (used != value.size()) {
        throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + value + "'");
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
    if (used != value.size()) {
        throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
    return v;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    const long long v = parse_integer(key, value);
    if (v < 0) throw std::invalid_argument("config: key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + value + "'");
}

using Setter = std::function<void(FibreArrayConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"rings", [](auto& c, auto& k, auto& v) { c.rings = static_cast<int>(parse_integer(k, v)); }},
        {"fibre_radius", [](auto& c, auto& k, auto& v) { c.fibre_radius = parse_double(k, v); }},
        {"centre_pitch", [](auto& c, auto& k, auto& v) { c.centre_pitch = parse_double(k, v); }},
        {"gaussian_radius", [](auto& c, auto& k, auto& v) { c.gaussian_radius = parse_double(k, v); }},
        {"wavelength", [](auto& c, auto& k, auto& v) { c.wavelength = parse_double(k, v); }},
        {"focal_distance", [](auto& c, auto& k, auto& v) { c.focal_distance = parse_double(k, v); }},
        {"grid_n", [](auto& c, auto& k, auto& v) { c.grid.n = parse_size(k, v); }},
        {"grid_pitch", [](auto& c, auto& k, auto& v) { c.grid.pitch = parse_double(k, v); }},
        {"active_fibres", [](auto& c, auto& k, auto& v) { c.active_fibres = parse_size(k, v); }},
        {"band_limit", [](auto& c, auto& k, auto& v) { c.band_limit = parse_bool(k, v); }},
        {"spherical_lens", [](auto& c, auto& k, auto& v) { c.spherical_lens = parse_bool(k, v); }},
        {"intensity_crop", [](auto& c, auto& k, auto& v) { c.imaging.intensity_crop = parse_size(k, v); }},
        {"phase_crop", [](auto& c, auto& k, auto& v) { c.imaging.phase_crop = parse_size(k, v); }},
        {"image_size", [](auto& c, auto& k, auto& v) { c.imaging.image_size = parse_size(k, v); }},
    };
    return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("key-value line " + std::to_string(lineno) + ": missing '='");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("key-value line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) throw std::invalid_argument("key-value: duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

void apply_config_keys(FibreArrayConfig& config, const KeyValues& kv) {
    const auto& table = setters();
    for (const auto& [key, value] : kv) {
        const auto it = table.find(key);
        if (it == table.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
        it->second(config, key, value);
    }
}

FibreArrayConfig config_from_key_values(const KeyValues& kv) {
    FibreArrayConfig config;
    apply_config_keys(config, kv);
    config.validate();
    return config;
}

KeyValues config_to_key_values(const FibreArrayConfig& c) {
    return {
        {"rings", std::to_string(c.rings)},
        {"fibre_radius", format_double(c.fibre_radius)},
        {"centre_pitch", format_double(c.centre_pitch)},
        {"gaussian_radius", format_double(c.gaussian_radius)},
        {"wavelength", format_double(c.wavelength)},
        {"focal_distance", format_double(c.focal_distance)},
        {"grid_n", std::to_string(c.grid.n)},
        {"grid_pitch", format_double(c.grid.pitch)},
        {"active_fibres", std::to_string(c.active_fibres)},
        {"band_limit", c.band_limit ? "true" : "false"},
        {"spherical_lens", c.spherical_lens ? "true" : "false"},
        {"intensity_crop", std::to_string(c.imaging.intensity_crop)},
        {"phase_crop", std::to_string(c.imaging.phase_crop)},
        {"image_size", std::to_string(c.imaging.image_size)},
    };
}

FibreArrayConfig load_config(const std::filesystem::path& path) {
    return config_from_key_values(read_key_values(path));
}

void save_config(const FibreArrayConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "# lengths in metres\n" << format_key_values(config_to_key_values(config));
    if (!out) throw IoError("write failed: " + path.string());
}

std::string config_hash(const FibreArrayConfig& config) {
    return sha256_hex(format_key_values(config_to_key_values(config)));
}

std::string phases_to_json(const PhaseVector& phases) {
    return nlohmann::json(phases.phases).dump();
}

PhaseVector phases_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("phase file: ") + e.what());
    }
    if (!j.is_array() || j.empty()) throw std::invalid_argument("phase file: expected a non-empty JSON array");
    PhaseVector out;
    for (const auto& v : j) {
        if (!v.is_number()) throw std::invalid_argument("phase file: entries must be numbers");
        out.phases.push_back(v.get<double>());
    }
    out.validate();
    return out;
}

PhaseVector load_phases(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return phases_from_json(ss.str());
}

void save_phases(const PhaseVector& phases, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << phases_to_json(phases) << "\n";
}

FibreArrayConfig default_config() { return FibreArrayConfig{}; }

}  // namespace cbc
