// Writes the shipped perturbed-hyperbolic conformal grid to stdout.
#include <iostream>

#include "leafgibbs/geometry.hpp"

int main() {
    leafgibbs::write_grid(std::cout, leafgibbs::perturbed_hyperbolic_grid());
    return 0;
}
