#include <iostream>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  return ephemera::app::run(argc, argv, std::cout, std::cerr);
}
