// SPDX-License-Identifier: MIT
#include "pget/kv.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pget/common.hpp"

namespace pget::kv {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw io_error("key '" + key + "': cannot parse '" + text + "' as a number");
    }
}

} // namespace

bool Document::has(const std::string& key) const { return find(key).has_value(); }

std::optional<std::string> Document::find(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

const std::string& Document::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    throw io_error("missing key '" + key + "'");
}

std::string Document::get_or(const std::string& key, const std::string& fallback) const {
    auto v = find(key);
    return v ? *v : fallback;
}

double Document::get_double(const std::string& key) const { return parse_double(key, get(key)); }

double Document::get_double_or(const std::string& key, double fallback) const {
    auto v = find(key);
    return v ? parse_double(key, *v) : fallback;
}

long Document::get_int(const std::string& key) const {
    const double v = get_double(key);
    const long i = static_cast<long>(v);
    if (static_cast<double>(i) != v) throw io_error("key '" + key + "' is not an integer");
    return i;
}

long Document::get_int_or(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Document::get_bool_or(const std::string& key, bool fallback) const {
    auto v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw io_error("key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<double> Document::get_doubles(const std::string& key) const {
    std::vector<double> out;
    std::istringstream in(get(key));
    std::string tok;
    while (in >> tok) {
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (tok.empty()) continue;
        out.push_back(parse_double(key, tok));
    }
    return out;
}

std::vector<std::pair<int, int>> Document::get_index_pairs(const std::string& key) const {
    std::vector<std::pair<int, int>> out;
    const std::string text = get(key);
    std::size_t pos = 0;
    while ((pos = text.find('(', pos)) != std::string::npos) {
        const std::size_t close = text.find(')', pos);
        if (close == std::string::npos) throw io_error("key '" + key + "': unbalanced parentheses");
        std::string body = text.substr(pos + 1, close - pos - 1);
        const std::size_t comma = body.find(',');
        if (comma == std::string::npos) throw io_error("key '" + key + "': expected (row,col)");
        out.emplace_back(static_cast<int>(parse_double(key, trim(body.substr(0, comma)))),
                         static_cast<int>(parse_double(key, trim(body.substr(comma + 1)))));
        pos = close + 1;
    }
    return out;
}

void Document::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Document::set_double(const std::string& key, double value) { set(key, format_double(value)); }
void Document::set_int(const std::string& key, long value) { set(key, std::to_string(value)); }
void Document::set_bool(const std::string& key, bool value) { set(key, value ? "true" : "false"); }

void Document::set_doubles(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ' ';
        joined += format_double(values[i]);
    }
    set(key, joined);
}

Document parse_string(const std::string& text, const std::string& origin) {
    Document doc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw io_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw io_error(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        doc.set(key, value);
    }
    return doc;
}

Document parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

std::string to_string(const Document& doc) {
    std::string out;
    for (const auto& [k, v] : doc.entries()) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void write_file(const Document& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << to_string(doc);
    if (!out) throw io_error("write failed for '" + path + "'");
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

} // namespace pget::kv
