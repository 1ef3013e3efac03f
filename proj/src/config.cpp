#include "agsam/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace agsam {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KvConfig KvConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str(), path.string());
}

KvConfig KvConfig::from_text(const std::string& text, std::string source) {
  KvConfig cfg;
  cfg.source_ = std::move(source);
  std::stringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(cfg.source_ + ":" + std::to_string(line_no) +
                               ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(cfg.source_ + ":" + std::to_string(line_no) +
                               ": empty key");
    if (cfg.values_.count(key))
      throw std::runtime_error(cfg.source_ + ":" + std::to_string(line_no) +
                               ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
    cfg.lines_[key] = line_no;
    cfg.consumed_[key] = false;
  }
  return cfg;
}

void KvConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  lines_[key] = 0;  // 0 marks a command-line override
  consumed_[key] = false;
}

bool KvConfig::has(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string KvConfig::location(const std::string& key) const {
  const auto it = lines_.find(key);
  if (it == lines_.end() || it->second == 0) return source_ + ": " + key;
  return source_ + ":" + std::to_string(it->second) + ": " + key;
}

void KvConfig::fail(const std::string& key, const std::string& message) const {
  throw std::runtime_error(location(key) + ": " + message);
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) {
  const auto it = values_.find(key);
  const std::string value = it == values_.end() ? fallback : it->second;
  if (it != values_.end()) consumed_[key] = true;
  resolved_[key] = value;
  return value;
}

double KvConfig::get_double(const std::string& key, double fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, fallback);
    resolved_[key] = std::string(buf, res.ptr);
    return fallback;
  }
  consumed_[key] = true;
  const std::string& text = it->second;
  double value = 0.0;
  const auto res =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    fail(key, "expected a number, got '" + text + "'");
  resolved_[key] = text;
  return value;
}

std::uint64_t KvConfig::get_uint(const std::string& key,
                                 std::uint64_t fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  consumed_[key] = true;
  const std::string& text = it->second;
  std::uint64_t value = 0;
  const auto res =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    fail(key, "expected a nonnegative integer, got '" + text + "'");
  resolved_[key] = text;
  return value;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = fallback ? "true" : "false";
    return fallback;
  }
  consumed_[key] = true;
  const std::string& text = it->second;
  bool value = false;
  if (text == "true" || text == "1" || text == "yes")
    value = true;
  else if (text == "false" || text == "0" || text == "no")
    value = false;
  else
    fail(key, "expected a boolean, got '" + text + "'");
  resolved_[key] = value ? "true" : "false";
  return value;
}

std::vector<std::size_t> KvConfig::get_size_list(
    const std::string& key, const std::vector<std::size_t>& fallback) {
  const auto render = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v[i]);
    }
    return s;
  };
  const auto it = values_.find(key);
  if (it == values_.end()) {
    resolved_[key] = render(fallback);
    return fallback;
  }
  consumed_[key] = true;
  std::vector<std::size_t> out;
  std::stringstream ss(it->second);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    std::size_t value = 0;
    const auto res =
        std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
      fail(key, "expected a comma-separated integer list, got '" +
                    it->second + "'");
    out.push_back(value);
  }
  if (out.empty()) fail(key, "expected a nonempty list");
  resolved_[key] = render(out);
  return out;
}

void KvConfig::note_resolved(const std::string& key, const std::string& value) {
  resolved_[key] = value;
}

std::vector<std::string> KvConfig::unconsumed() const {
  std::vector<std::string> out;
  for (const auto& [key, used] : consumed_)
    if (!used) out.push_back(location(key) + ": unknown key");
  return out;
}

void KvConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("config: cannot write " + path.string());
  for (const auto& [key, value] : resolved_)
    out << key << " = " << value << "\n";
}

}  // namespace agsam
