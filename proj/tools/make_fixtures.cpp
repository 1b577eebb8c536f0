// Writes the synthetic scenario files used by the examples in the README.

#include <iostream>
#include <string>

#include "facelaser/fixtures.hpp"

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "fixtures";
  try {
    facelaser::write_fixtures(dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "fixtures written to " << dir << "\n";
  return 0;
}
