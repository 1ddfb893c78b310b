#pragma once

#include <doctest.h>

#include "calibench/error.hpp"

namespace testing {

// Runs fn and returns the code of the calibench::Error it throws.
template <typename Fn>
calibench::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const calibench::Error& e) {
    return e.code();
  }
  FAIL("expected calibench::Error");
  return calibench::ErrorCode::InvalidArgument;
}

}  // namespace testing
