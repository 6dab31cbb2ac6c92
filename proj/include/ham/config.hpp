#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ham::cfg {

// Parse one number, accepting plain floating point literals plus dyadic
// power literals like "2^-8" so grid spacings stay exact powers of two.
double parse_number(const std::string& text);

// Flat "key = value" configuration with '#' comments. Insertion order is
// preserved through serialize(); duplicate keys are rejected.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    std::string serialize() const;

    bool has(const std::string& key) const;
    std::vector<std::string> keys() const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    double get_number(const std::string& key) const;
    double get_number(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Comma separated numbers, at least one entry.
    std::vector<double> get_number_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

  private:
    const std::string* find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> items_;
};

} // namespace ham::cfg
