#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace htsolve {

/// Key-value file with [sections] and '#' comments.
/// Keys are addressed as "section.key"; keys before any section use the bare name.
class Config {
public:
    static Config parse(std::string_view text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int_or(const std::string& key, long fallback) const;
    /// Whitespace-separated numbers; ';' separates rows of a matrix.
    std::vector<std::vector<double>> get_matrix(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace htsolve
