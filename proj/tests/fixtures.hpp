#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "metastab/potential.hpp"

namespace fixtures {

inline const char* kQuartic = "(x^2-1)^2";
inline const char* kTilted = "(x^2-1)^2*(1+0.3*x)";
inline const char* kTwoContact =
    "91*x^8/60000 - 341*x^6/10000 + 5897*x^4/20000 - 8327*x^2/7500 + 1897/1250 + y^2/2";

// Right end of the tilted domain: f(b) = f(-1.3), so both wells reach the boundary.
inline constexpr double kTiltedRight = 1.208987891272972;

inline metastab::Potential symmetric_quartic() {
  return metastab::Potential::parse(kQuartic, metastab::Domain::interval(-1.3, 1.3));
}
inline metastab::Potential touching_quartic() {
  return metastab::Potential::parse(kQuartic, metastab::Domain::interval(-std::sqrt(2.0), std::sqrt(2.0)));
}
inline metastab::Potential tilted_quartic() {
  return metastab::Potential::parse(kTilted, metastab::Domain::interval(-1.3, kTiltedRight));
}
inline metastab::Potential two_contact() {
  return metastab::Potential::parse(kTwoContact, metastab::Domain::rectangle(-3, 3, -1, 1.5));
}

inline std::vector<metastab::Potential> bundled() {
  return {symmetric_quartic(), tilted_quartic(), touching_quartic(), two_contact()};
}

}  // namespace fixtures
