#pragma once

#include <array>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "artjoint/asset_model.hpp"
#include "artjoint/error.hpp"

namespace artjoint::detail {

/// Read-only view over a JSON value that remembers its JSON-pointer path, so
/// schema violations can be reported as SyntaxError(location).
class JsonReader {
 public:
  JsonReader(const nlohmann::json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const nlohmann::json& raw() const { return *value_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::SyntaxError, path_.empty() ? "/" : path_, message);
  }

  bool has(const char* key) const { return value_->is_object() && value_->contains(key); }

  JsonReader at(const char* key) const {
    if (!value_->is_object()) fail("expected an object");
    const auto it = value_->find(key);
    if (it == value_->end()) fail(std::string("missing key '") + key + "'");
    return JsonReader(*it, path_ + "/" + key);
  }

  std::size_t size() const {
    if (!value_->is_array()) fail("expected an array");
    return value_->size();
  }

  JsonReader operator[](std::size_t i) const {
    if (!value_->is_array() || i >= value_->size()) fail("index out of range");
    return JsonReader((*value_)[i], path_ + "/" + std::to_string(i));
  }

  void allow_keys(std::initializer_list<const char*> keys) const {
    if (!value_->is_object()) fail("expected an object");
    for (const auto& [key, unused] : value_->items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) throw Error(ErrorCode::SyntaxError, path_ + "/" + key, "unknown key '" + key + "'");
    }
  }

  double num() const {
    if (!value_->is_number()) fail("expected a number");
    return value_->get<double>();
  }

  bool boolean() const {
    if (!value_->is_boolean()) fail("expected a boolean");
    return value_->get<bool>();
  }

  std::string str() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
  }

  template <std::size_t N>
  std::array<double, N> array() const {
    if (!value_->is_array() || value_->size() != N) fail("expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = (*this)[i].num();
    return out;
  }

  std::array<double, 3> vec3() const { return array<3>(); }

 private:
  const nlohmann::json* value_;
  std::string path_;
};

inline nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ", column " + std::to_string(col),
                "malformed JSON");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, path, "cannot write file");
  out << text;
  if (!out) throw Error(ErrorCode::Io, path, "write failed");
}

// Behavior-rule codec shared by asset and scenario documents.
BehaviorRule read_rule(const JsonReader& r);
nlohmann::ordered_json write_rule(const BehaviorRule& rule);

}  // namespace artjoint::detail
