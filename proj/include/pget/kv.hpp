// SPDX-License-Identifier: MIT
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pget::kv {

/// Insertion-ordered `key = value` text document. One entry per line,
/// '#' starts a comment. Used for assembly layouts, experiment configs
/// and artifact sidecars.
class Document {
  public:
    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int_or(const std::string& key, long fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    /// Parses "(r,c) (r,c) ..." lists.
    std::vector<std::pair<int, int>> get_index_pairs(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_int(const std::string& key, long value);
    void set_bool(const std::string& key, bool value);
    void set_doubles(const std::string& key, const std::vector<double>& values);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  private:
    std::optional<std::string> find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
};

Document parse_string(const std::string& text, const std::string& origin = "<string>");
Document parse_file(const std::string& path);
void write_file(const Document& doc, const std::string& path);
std::string to_string(const Document& doc);

std::string format_double(double value); // 17 significant digits, round-trip exact

} // namespace pget::kv
