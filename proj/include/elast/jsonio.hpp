#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"

#include "elast/common.hpp"

namespace elast {

using Json = nlohmann::json;

// strict object parse: every present key must be in the allowed set
inline void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ParameterError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ParameterError(where + ": unknown field '" + it.key() + "'");
  }
}

inline const Json& require_field(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParameterError(where + ": missing field '" + std::string(key) + "'");
  return *it;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

inline std::string config_hash(const Json& j) { return hash_hex(fnv1a64(j.dump())); }

}  // namespace elast
