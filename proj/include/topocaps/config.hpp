#pragma once

#include <map>
#include <string>
#include <vector>

namespace topocaps::io {

// Flat sectioned key-value config:
//   [section]
//   key = value        # comment
// Keys are looked up as "section.key".
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::size_t> get_sizes(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace topocaps::io
