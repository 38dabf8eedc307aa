#ifndef LGDCAP_ERROR_HPP
#define LGDCAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lgdcap {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A parameter or argument lies outside its legal domain.
class InvalidParameter : public Error {
  public:
    using Error::Error;
};

/// Input data violates the dataset invariants or cannot be parsed.
class DataError : public Error {
  public:
    using Error::Error;
};

/// A numerical procedure could not produce a meaningful value
/// (zero variance, undefined transform, overflow, ...).
class NumericalError : public Error {
  public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidParameter(what);
}

} // namespace detail

} // namespace lgdcap

#endif
