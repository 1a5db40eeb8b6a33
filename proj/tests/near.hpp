// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#ifndef ADMMKIT_TESTS_NEAR_HPP
#define ADMMKIT_TESTS_NEAR_HPP

#include <cmath>
#include <ostream>

namespace testutil {

/// Absolute-tolerance matcher: CHECK(value == near(target, tol)).
struct Near {
  double target;
  double tol;
};

inline Near near(double target, double tol) { return Near{target, tol}; }

inline bool operator==(double lhs, const Near& rhs) {
  return std::abs(lhs - rhs.target) <= rhs.tol;
}
inline bool operator==(const Near& lhs, double rhs) { return rhs == lhs; }
inline bool operator!=(double lhs, const Near& rhs) { return !(lhs == rhs); }
inline bool operator!=(const Near& lhs, double rhs) { return !(rhs == lhs); }

inline std::ostream& operator<<(std::ostream& os, const Near& n) {
  return os << n.target << " +/- " << n.tol;
}

}  // namespace testutil

#endif  // ADMMKIT_TESTS_NEAR_HPP
