#include "ham/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ham/errors.hpp"

namespace ham::cfg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') {
            return false;
        }
    }
    return true;
}

double parse_plain_number(const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ConfigError("malformed number: '" + text + "'");
    }
    if (!std::isfinite(v)) {
        throw ConfigError("number out of range: '" + text + "'");
    }
    return v;
}

} // namespace

double parse_number(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) throw ConfigError("empty number");
    const std::size_t caret = text.find('^');
    if (caret == std::string::npos) return parse_plain_number(text);
    const std::string base_s = trim(text.substr(0, caret));
    const std::string exp_s = trim(text.substr(caret + 1));
    const double base = parse_plain_number(base_s);
    const double expo = parse_plain_number(exp_s);
    if (!(base > 0.0) || base != std::floor(base)) {
        throw ConfigError("power literal base must be a positive integer: '" +
                          raw + "'");
    }
    if (expo != std::floor(expo) || std::abs(expo) > 1024) {
        throw ConfigError("power literal exponent must be a small integer: '" +
                          raw + "'");
    }
    const double v = std::pow(base, expo);
    if (!std::isfinite(v) || v == 0.0) {
        throw ConfigError("power literal out of range: '" + raw + "'");
    }
    return v;
}

Config Config::parse_string(const std::string& text) {
    Config out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              " is not of the form key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key)) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              " has a malformed key");
        }
        if (out.has(key)) {
            throw ConfigError("duplicate config key '" + key + "'");
        }
        out.items_.emplace_back(key, value);
    }
    return out;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

std::string Config::serialize() const {
    std::ostringstream out;
    for (const auto& [key, value] : items_) {
        out << key << " = " << value << "\n";
    }
    return out.str();
}

const std::string* Config::find(const std::string& key) const {
    for (const auto& [k, v] : items_) {
        if (k == key) return &v;
    }
    return nullptr;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [k, v] : items_) out.push_back(k);
    return out;
}

std::string Config::get_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw ConfigError("missing config key '" + key + "'");
    return *v;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double Config::get_number(const std::string& key) const {
    try {
        return parse_number(get_string(key));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()) + " (key '" + key + "')");
    }
}

double Config::get_number(const std::string& key, double fallback) const {
    return has(key) ? get_number(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
    const double v = get_number(key);
    const double r = std::nearbyint(v);
    if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v)) ||
        std::abs(r) > 9.0e18) {
        throw ConfigError("config key '" + key + "' must be an integer");
    }
    return static_cast<std::int64_t>(r);
}

std::int64_t Config::get_int(const std::string& key,
                             std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "' must be a boolean");
}

std::vector<double> Config::get_number_list(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const std::size_t comma = raw.find(',', pos);
        const std::string item =
            raw.substr(pos, comma == std::string::npos ? std::string::npos
                                                       : comma - pos);
        try {
            out.push_back(parse_number(item));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (key '" + key + "')");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("malformed config key '" + key + "'");
    for (auto& [k, v] : items_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    items_.emplace_back(key, value);
}

} // namespace ham::cfg
