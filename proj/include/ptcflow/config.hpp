#pragma once

#include <map>
#include <string>
#include <vector>

namespace ptcflow {

// key = value text file with '#' comments.
class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    int get_int_or(const std::string& key, int fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma separated

private:
    std::map<std::string, std::string> values_;
};

}  // namespace ptcflow
