// SPDX-License-Identifier: Apache-2.0
#include "arena/kv_document.hpp"

#include <charconv>
#include <cmath>

#include "arena/errors.hpp"

namespace arena {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

void check_key(std::string_view key) {
  if (key.empty() || key.find_first_of("=\n") != std::string_view::npos || trim(key) != key) {
    throw Error(Errc::kFormatError, "invalid document key '" + std::string(key) + "'");
  }
}

void check_value(std::string_view key, std::string_view value) {
  if (value.find('\n') != std::string_view::npos || trim(value) != value) {
    throw Error(Errc::kFormatError, "invalid value for key '" + std::string(key) + "'");
  }
}

[[noreturn]] void bad_value(std::string_view key, std::string_view what) {
  throw Error(Errc::kFormatError, "key '" + std::string(key) + "': " + std::string(what));
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  if (value.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(value.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_real(double value) {
  if (value == 0.0) return std::signbit(value) ? "-0" : "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  text = trim(text);
  std::int64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

KvDocument KvDocument::parse(std::string_view text) {
  KvDocument doc;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::kFormatError, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    check_key(key);
    if (!doc.entries_.emplace(std::string(key), std::string(value)).second) {
      throw Error(Errc::kFormatError, "line " + std::to_string(line_no) + ": duplicate key '" +
                                          std::string(key) + "'");
    }
  }
  return doc;
}

std::string KvDocument::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

bool KvDocument::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const std::string* KvDocument::find(std::string_view key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void KvDocument::erase(std::string_view key) {
  const auto it = entries_.find(key);
  if (it != entries_.end()) entries_.erase(it);
}

void KvDocument::set(std::string_view key, std::string value) {
  check_key(key);
  check_value(key, value);
  const auto it = entries_.find(key);
  if (it != entries_.end()) {
    it->second = std::move(value);
  } else {
    entries_.emplace(std::string(key), std::move(value));
  }
}

void KvDocument::set_int(std::string_view key, std::int64_t value) { set(key, std::to_string(value)); }
void KvDocument::set_real(std::string_view key, double value) { set(key, format_real(value)); }
void KvDocument::set_bool(std::string_view key, bool value) { set(key, value ? "true" : "false"); }

void KvDocument::set_int_list(std::string_view key, const std::vector<std::int64_t>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(values[i]);
  }
  set(key, std::move(s));
}

void KvDocument::set_real_list(std::string_view key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_real(values[i]);
  }
  set(key, std::move(s));
}

void KvDocument::set_string_list(std::string_view key, const std::vector<std::string>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].find(',') != std::string::npos) bad_value(key, "list element contains ','");
    if (i) s += ',';
    s += values[i];
  }
  set(key, std::move(s));
}

const std::string& KvDocument::get_string(std::string_view key) const {
  const auto* v = find(key);
  if (!v) bad_value(key, "missing");
  return *v;
}

std::int64_t KvDocument::get_int(std::string_view key) const {
  const auto v = parse_int(get_string(key));
  if (!v) bad_value(key, "expected integer");
  return *v;
}

double KvDocument::get_real(std::string_view key) const {
  const auto v = parse_real(get_string(key));
  if (!v) bad_value(key, "expected real");
  return *v;
}

bool KvDocument::get_bool(std::string_view key) const {
  const auto& s = get_string(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  bad_value(key, "expected true/false");
}

std::vector<std::int64_t> KvDocument::get_int_list(std::string_view key) const {
  std::vector<std::int64_t> out;
  for (const auto part : split_list(get_string(key))) {
    const auto v = parse_int(part);
    if (!v) bad_value(key, "expected integer list");
    out.push_back(*v);
  }
  return out;
}

std::vector<double> KvDocument::get_real_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto part : split_list(get_string(key))) {
    const auto v = parse_real(part);
    if (!v) bad_value(key, "expected real list");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> KvDocument::get_string_list(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto part : split_list(get_string(key))) out.emplace_back(part);
  return out;
}

std::int64_t KvDocument::get_int_or(std::string_view key, std::int64_t fallback) const {
  return contains(key) ? get_int(key) : fallback;
}
double KvDocument::get_real_or(std::string_view key, double fallback) const {
  return contains(key) ? get_real(key) : fallback;
}
bool KvDocument::get_bool_or(std::string_view key, bool fallback) const {
  return contains(key) ? get_bool(key) : fallback;
}
std::string KvDocument::get_string_or(std::string_view key, std::string fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

KvDocument KvDocument::subset(std::string_view prefix) const {
  KvDocument out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    if (it->first.size() == prefix.size()) continue;
    out.entries_.emplace(it->first.substr(prefix.size()), it->second);
  }
  return out;
}

void KvDocument::merge(const KvDocument& other, std::string_view prefix) {
  for (const auto& [k, v] : other.entries_) set(std::string(prefix) + k, v);
}

}  // namespace arena
