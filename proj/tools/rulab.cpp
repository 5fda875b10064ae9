#include <rulab/qlinalg.hpp>

#include <cstdio>

int main() {
  std::puts("rulab: command-line interface under construction");
  return 0;
}
