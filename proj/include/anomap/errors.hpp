#pragma once

#include <stdexcept>
#include <string>

namespace anomap {

/// Invalid data, argument, or configuration values. The CLI maps this
/// (and subclasses) to exit code 1.
class validation_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed config text: unknown keys, duplicate keys, unparseable values.
class config_error : public validation_error {
public:
  using validation_error::validation_error;
};

/// Filesystem-level failure (open/read/write). The CLI maps this to exit
/// code 2. Malformed file *content* is a validation_error, not an io_error.
class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace anomap
