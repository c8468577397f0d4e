#ifndef MMDE_ERROR_HPP
#define MMDE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mmde {

// Validation/data failure categories. The CLI maps DataError to exit code 2,
// NumericError to 3 and UsageError to 1.
enum class data_errc {
  io,              // unreadable/unwritable path
  bad_magic,       // unknown binary signature or version
  bad_header,      // malformed text header
  schema,          // wrong column/field layout
  bad_value,       // unparseable or out-of-domain field
  non_finite,      // NaN/Inf where finite values are required
  row_mismatch,    // inconsistent row counts between paired inputs
  range,           // value outside its documented range
  zero_norm,       // zero-length vector fed to cosine
  zero_variance,   // degenerate similarity statistics
  k_too_large,     // not enough admissible neighbors
  bad_labels,      // labels missing or single-class
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  DataError(data_errc code, const std::string& msg) : Error(msg), code_(code) {}
  data_errc code() const noexcept { return code_; }

 private:
  data_errc code_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmde

#endif  // MMDE_ERROR_HPP
