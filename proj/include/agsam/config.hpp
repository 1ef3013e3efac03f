#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace agsam {

// Flat "key = value" configuration with dotted section prefixes. '#' starts
// a comment. Typed getters record every value they resolve (explicit or
// default), so a complete echo of the effective configuration can be
// written back out; re-running from that echo reproduces the run.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_file(const std::filesystem::path& path);
  static KvConfig from_text(const std::string& text, std::string source);

  // command-line override; replaces any file value
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback);

  // force a value into the resolved echo (for derived defaults)
  void note_resolved(const std::string& key, const std::string& value);

  // keys present in the source that no getter ever consumed -> typos
  std::vector<std::string> unconsumed() const;

  const std::map<std::string, std::string>& resolved() const {
    return resolved_;
  }

  void write_resolved(const std::filesystem::path& path) const;

  [[noreturn]] void fail(const std::string& key,
                         const std::string& message) const;

 private:
  std::string location(const std::string& key) const;

  std::string source_ = "<empty>";
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::map<std::string, bool> consumed_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace agsam
