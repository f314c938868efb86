// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arena {

// Key/value text document used for settings files, wire-protocol bodies and
// trajectory headers.
//
// Canonical form: one `key=value` line per entry, each terminated by '\n',
// keys sorted bytewise, no surrounding whitespace, no comments. The parser is
// lenient for hand-written files: blank lines and lines starting with '#'
// are skipped and whitespace around keys and values is trimmed.
//
// Value conventions: integers in decimal; reals in shortest round-trip form;
// booleans as `true`/`false`; lists as comma-separated elements.
class KvDocument {
 public:
  KvDocument() = default;

  static KvDocument parse(std::string_view text);
  std::string serialize() const;

  bool contains(std::string_view key) const;
  const std::string* find(std::string_view key) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }
  void erase(std::string_view key);

  void set(std::string_view key, std::string value);
  void set_int(std::string_view key, std::int64_t value);
  void set_real(std::string_view key, double value);
  void set_bool(std::string_view key, bool value);
  void set_int_list(std::string_view key, const std::vector<std::int64_t>& values);
  void set_real_list(std::string_view key, const std::vector<double>& values);
  void set_string_list(std::string_view key, const std::vector<std::string>& values);

  // Typed getters throw Error(kFormatError) naming the key when the value
  // is missing or does not parse.
  const std::string& get_string(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  double get_real(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::int64_t> get_int_list(std::string_view key) const;
  std::vector<double> get_real_list(std::string_view key) const;
  std::vector<std::string> get_string_list(std::string_view key) const;

  std::int64_t get_int_or(std::string_view key, std::int64_t fallback) const;
  double get_real_or(std::string_view key, double fallback) const;
  bool get_bool_or(std::string_view key, bool fallback) const;
  std::string get_string_or(std::string_view key, std::string fallback) const;

  // Entries whose key starts with `prefix`, with the prefix removed.
  KvDocument subset(std::string_view prefix) const;
  // Copies every entry of `other` under `prefix`.
  void merge(const KvDocument& other, std::string_view prefix = {});

  bool operator==(const KvDocument&) const = default;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

std::string format_real(double value);
std::optional<double> parse_real(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

}  // namespace arena
