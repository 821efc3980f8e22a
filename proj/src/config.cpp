#include "htsolve/config.hpp"

#include "htsolve/errors.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace htsolve {

namespace {

std::string trim(std::string_view s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

double to_double(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(std::string_view(text).substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("config key '" + key + "': not a number: '" + text + "'");
}

} // namespace

Config Config::parse(std::string_view text)
{
    Config c;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw InvalidArgument("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(std::string_view(s).substr(1, s.size() - 2));
            if (section.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(s).substr(0, eq));
        std::string value = trim(std::string_view(s).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
        c.values_[section.empty() ? key : section + "." + key] = value;
    }
    return c;
}

Config Config::load(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw InvalidArgument("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

const std::string& Config::get(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end()) throw InvalidArgument("missing config key '" + key + "'");
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const
{
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const { return to_double(key, get(key)); }

double Config::get_double_or(const std::string& key, double fallback) const
{
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key) const
{
    const std::string& s = get(key);
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw InvalidArgument("config key '" + key + "': not an integer: '" + s + "'");
    return v;
}

long Config::get_int_or(const std::string& key, long fallback) const { return has(key) ? get_int(key) : fallback; }

std::vector<std::vector<double>> Config::get_matrix(const std::string& key) const
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(get(key));
    std::string row;
    while (std::getline(in, row, ';')) {
        std::istringstream rs(row);
        std::string tok;
        std::vector<double> r;
        while (rs >> tok) r.push_back(to_double(key, tok));
        if (!r.empty()) rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace htsolve
