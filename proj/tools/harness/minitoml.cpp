#include "minitoml.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gris::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("config line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

/// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

Value parse_scalar(const std::string& token, int line) {
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
    return token.substr(1, token.size() - 2);
  }
  if (token == "true") return true;
  if (token == "false") return false;
  // Integer if it parses fully without '.', 'e', or 'inf/nan' spellings.
  const bool looks_integral = token.find_first_of(".eEnN") == std::string::npos;
  try {
    std::size_t used = 0;
    if (looks_integral) {
      const std::int64_t i = std::stoll(token, &used);
      if (used == token.size()) return i;
    }
    used = 0;
    const double d = std::stod(token, &used);
    if (used == token.size()) return d;
  } catch (const std::exception&) {
  }
  fail(line, "cannot parse value '" + token + "'");
}

Value parse_array(const std::string& inner, int line) {
  std::vector<std::string> tokens;
  std::string cur;
  bool in_string = false;
  for (char c : inner) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      tokens.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) tokens.push_back(trim(cur));

  std::vector<double> nums;
  std::vector<std::string> strs;
  for (const std::string& t : tokens) {
    const Value v = parse_scalar(t, line);
    if (std::holds_alternative<std::string>(v)) {
      strs.push_back(std::get<std::string>(v));
    } else if (std::holds_alternative<double>(v)) {
      nums.push_back(std::get<double>(v));
    } else if (std::holds_alternative<std::int64_t>(v)) {
      nums.push_back(static_cast<double>(std::get<std::int64_t>(v)));
    } else {
      fail(line, "array elements must be numbers or strings");
    }
  }
  if (!strs.empty() && !nums.empty()) fail(line, "mixed array element types");
  if (!strs.empty()) return strs;
  return nums;
}

}  // namespace

const Value* Section::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

double Section::number(const std::string& key, double fallback) const {
  mark_known(key);
  const Value* v = find(key);
  if (!v) return fallback;
  if (std::holds_alternative<double>(*v)) return std::get<double>(*v);
  if (std::holds_alternative<std::int64_t>(*v)) {
    return static_cast<double>(std::get<std::int64_t>(*v));
  }
  throw ParseError("key '" + key + "' is not a number");
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback) const {
  mark_known(key);
  const Value* v = find(key);
  if (!v) return fallback;
  if (std::holds_alternative<std::int64_t>(*v)) return std::get<std::int64_t>(*v);
  throw ParseError("key '" + key + "' is not an integer");
}

bool Section::boolean(const std::string& key, bool fallback) const {
  mark_known(key);
  const Value* v = find(key);
  if (!v) return fallback;
  if (std::holds_alternative<bool>(*v)) return std::get<bool>(*v);
  throw ParseError("key '" + key + "' is not a boolean");
}

std::string Section::text(const std::string& key, const std::string& fallback) const {
  mark_known(key);
  const Value* v = find(key);
  if (!v) return fallback;
  if (std::holds_alternative<std::string>(*v)) return std::get<std::string>(*v);
  throw ParseError("key '" + key + "' is not a string");
}

std::vector<double> Section::numbers(const std::string& key) const {
  mark_known(key);
  const Value* v = find(key);
  if (!v) return {};
  if (std::holds_alternative<std::vector<double>>(*v)) {
    return std::get<std::vector<double>>(*v);
  }
  if (std::holds_alternative<double>(*v)) return {std::get<double>(*v)};
  if (std::holds_alternative<std::int64_t>(*v)) {
    return {static_cast<double>(std::get<std::int64_t>(*v))};
  }
  throw ParseError("key '" + key + "' is not a numeric array");
}

std::vector<std::string> Section::unknown_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    if (known_.count(key) == 0) out.push_back(key);
  }
  return out;
}

const Section* Document::find_section(const std::string& name) const {
  const auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

Document parse(const std::string& content) {
  Document doc;
  std::istringstream in(content);
  std::string raw_line;
  std::string current = "";
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (!valid_key(current)) fail(line_no, "invalid section name");
      doc.section(current);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) fail(line_no, "invalid key '" + key + "'");
    if (value.empty()) fail(line_no, "missing value for '" + key + "'");
    if (value.front() == '[') {
      if (value.back() != ']') fail(line_no, "unterminated array");
      doc.section(current).set(key, parse_array(value.substr(1, value.size() - 2), line_no));
    } else {
      doc.section(current).set(key, parse_scalar(value, line_no));
    }
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string serialize_value(const Value& v) {
  char buf[64];
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
  if (std::holds_alternative<std::int64_t>(v)) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::get<std::int64_t>(v)));
    return buf;
  }
  if (std::holds_alternative<double>(v)) {
    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(v));
    std::string s = buf;
    // Keep floats recognizable as floats on re-parse.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  if (std::holds_alternative<std::string>(v)) return '"' + std::get<std::string>(v) + '"';
  std::string out = "[";
  if (std::holds_alternative<std::vector<double>>(v)) {
    const auto& xs = std::get<std::vector<double>>(v);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ", ";
      out += serialize_value(xs[i]);
    }
  } else {
    const auto& xs = std::get<std::vector<std::string>>(v);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ", ";
      out += serialize_value(xs[i]);
    }
  }
  return out + "]";
}

}  // namespace gris::toml
