#ifndef SGAT_ERROR_HPP
#define SGAT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sgat {

// All library errors derive from Error so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape mismatch (matmul, elementwise ops, concat).
struct DimensionError : Error {
  using Error::Error;
};

// Bad user-supplied input: malformed files, out-of-range ids, bad flags.
// The CLI maps this to exit code 2.
struct InputError : Error {
  using Error::Error;
};

// A documented precondition was violated (empty mask, non-scalar loss, ...).
struct ContractError : Error {
  using Error::Error;
};

// Numeric domain violation: log of a non-positive value, u in {0,1}.
struct DomainError : Error {
  using Error::Error;
};

// Internally inconsistent data: corrupt CSR, checkpoint/graph mismatch.
struct StructuralError : Error {
  using Error::Error;
};

}  // namespace sgat

#endif  // SGAT_ERROR_HPP
