#pragma once

// Minimal TOML-subset reader/writer for flat experiment configs: [section]
// headers, bare keys, strings, booleans, integers, floats, and homogeneous
// arrays of numbers or strings. Enough for the config format documented in
// the README; no nested tables, no dates, no multi-line strings.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gris::toml {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>,
                           std::vector<std::string>>;

class Section {
 public:
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  // Typed accessors with defaults. Integers promote to doubles transparently.
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;  // empty if absent

  /// Marks a key as recognized; unknown_keys() reports the rest so configs
  /// fail loudly on typos.
  void mark_known(const std::string& key) const { known_.insert(key); }
  std::vector<std::string> unknown_keys() const;

  const std::map<std::string, Value>& raw() const { return values_; }

 private:
  const Value* find(const std::string& key) const;
  std::map<std::string, Value> values_;
  mutable std::set<std::string> known_;
};

class Document {
 public:
  Section& section(const std::string& name) { return sections_[name]; }
  const Section* find_section(const std::string& name) const;
  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
};

Document parse(const std::string& content);
Document parse_file(const std::string& path);

std::string serialize_value(const Value& v);

}  // namespace gris::toml
