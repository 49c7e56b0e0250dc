#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#ifndef QNET_VERSION
#define QNET_VERSION "0.0.0"
#endif

namespace qnet {

inline constexpr const char* version() { return QNET_VERSION; }

// Caller passed something structurally wrong (bad index, mismatched dims).
class argument_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Input is well-formed but outside the mathematically valid range
// (e.g. machine parameter beyond d_max).
class domain_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Problem size exceeds what the implementation supports by contract.
class capacity_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An internal consistency check failed; indicates a construction bug,
// not a caller mistake.
class internal_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// splitmix64: cheap, well-mixed stream derivation. Used to derive
// independent per-task seeds from (master seed, index) so that results
// do not depend on scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x51ed2700a1b2c3d4ULL));
}

}  // namespace qnet
