// Measuring A then B differs from B then A when the projectors do not commute.
#include <iostream>

#include "qjoint/qjoint.hpp"

int main() {
  using namespace qjoint;
  const Matrix a = StateVector::basis(2, 0).projector();
  const Matrix b = StateVector::normalized(Vector::Ones(2)).projector();
  const DensityMatrix rho = DensityMatrix::pure(StateVector::basis(2, 0));

  const MeasurementFamily family = MeasurementFamily::from_projectors({a, b});
  const double ab = w_functional(family, rho, {1, 1});
  const double aba = trace(a * b * a * rho.matrix()).real();
  const double bab = trace(b * a * b * rho.matrix()).real();
  std::cout << "Tr(ABA rho) = " << aba << "\n";
  std::cout << "Tr(BAB rho) = " << bab << "\n";
  std::cout << "W(1,1)      = " << ab << "\n";
  return 0;
}
