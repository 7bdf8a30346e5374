// Snap the second projector onto a commuting one near the state.
#include <iostream>
#include <numbers>

#include "qjoint/qjoint.hpp"

int main() {
  using namespace qjoint;
  Rng rng(7);
  const Matrix p1 = random_projector(6, 2, rng);
  const Matrix p2 = random_projector(6, 3, rng);
  const StateVector psi = random_state(6, rng);

  const RepairResult r = repair_projector(p1, p2, psi);
  std::cout << "epsilon           " << r.epsilon << "\n";
  std::cout << "on-state distance " << r.on_state_distance << "\n";
  std::cout << "sqrt(2) epsilon   " << r.bound() << "\n";
  std::cout << "[P1, P2'] norm    " << r.commutator_norm << "\n";
  return 0;
}
