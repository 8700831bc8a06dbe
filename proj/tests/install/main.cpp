#include <cstdio>

#include "bioage/features.hpp"

int main() {
  const double s = bioage::compute_slope(80.0, 84.0, 0.0, 2.0);
  std::printf("slope %g\n", s);
  return s == 2.0 ? 0 : 1;
}
