// Pairwise commuting on a state, yet the block swap moves the state by 0.25.
#include <iomanip>
#include <iostream>

#include "qjoint/qjoint.hpp"

int main(int argc, char** argv) {
  using namespace qjoint;
  const CounterexampleInstance inst = load_appendix_instance();
  if (argc > 1 && std::string(argv[1]) == "--dump") {
    std::cout << json_io::to_json(inst, false).dump(2) << "\n";
    return 0;
  }
  const InstanceReport r = verify_instance(inst, tol::golden);
  std::cout << std::setprecision(10);
  std::cout << "worst pairwise defect " << r.worst_pairwise_defect << "\n";
  std::cout << "block-swap defect     " << r.block_swap_defect << "\n";

  const StateFamily f = StateFamily::pure({StateVector::normalized(inst.state.amplitudes())});
  const MeasurementFamily family = induced_family(inst);
  std::cout << "2-permutable          " << is_t_permutable(family, f, 2, tol::golden).passed << "\n";
  std::cout << "4-permutable          " << is_t_permutable(family, f, 4, tol::golden).passed << "\n";
  return 0;
}
