#pragma once

#include <doctest.h>

#include <string>

#include "finitekey/numerics.hpp"

namespace fk_test {

using finitekey::ExtFloat;
using finitekey::PrecisionContext;

inline ExtFloat ext(const char* text, long bits = 256) { return ExtFloat(text, PrecisionContext(bits)); }

// True when |a - b| <= tol * |b|, tol given as decimal text.
inline bool rel_close(const ExtFloat& a, const ExtFloat& b, const char* tol) {
  return finitekey::relative_difference(a, b) <= ExtFloat(tol, a.context());
}

inline bool rel_close(const ExtFloat& a, const char* b, const char* tol) {
  return rel_close(a, ExtFloat(b, a.context()), tol);
}

}  // namespace fk_test
