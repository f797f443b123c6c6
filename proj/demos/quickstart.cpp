// Solves one synthetic image pair with every method and compares against the
// exact transport cost.

#include <cstdio>

#include "eot/instances/instance_spec.hpp"
#include "eot/oracle/exact.hpp"
#include "eot/solvers/approx.hpp"

int main() {
  using namespace eot;
  const Instance inst = materialize(InstanceSpec{SyntheticPair{8, 0.5, 1}});
  const double opt = exact_ot(inst.cost, inst.r, inst.c).value;
  std::printf("n=%zu exact=%.6f\n", inst.size(), opt);
  for (double eps : {1.0, 0.5}) {
    for (Method m : kAllMethods) {
      const ApproxResult res = approx_ot(inst.cost, inst.r, inst.c, eps, m);
      std::printf("eps=%.2f %-10s iters=%-7zu cost=%.6f gap=%.2e\n", eps, std::string(to_string(m)).c_str(),
                  res.trace.iterations, res.cost, res.cost - opt);
    }
  }
}
