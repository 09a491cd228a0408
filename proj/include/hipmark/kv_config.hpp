#pragma once

#include <map>
#include <string>

namespace hipmark {

// Flat `key = value` config document; '#' starts a comment, blank lines are
// ignored. Every key can also be set on the command line, CLI wins.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace hipmark
