#ifndef COBST_KEY_HPP
#define COBST_KEY_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace cobst {

using Key = std::int64_t;

/// Sentinel carried by the root. Strictly greater than every client key.
inline constexpr Key kPlusInf = std::numeric_limits<Key>::max();

[[nodiscard]] constexpr bool is_client_key(Key k) noexcept {
  return k != kPlusInf;
}

class KeyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejects the root sentinel at the public API boundary.
inline void require_client_key(Key k) {
  if (!is_client_key(k))
    throw KeyError("key " + std::to_string(k) +
                   " is reserved for the root sentinel");
}

}  // namespace cobst

#endif  // COBST_KEY_HPP
