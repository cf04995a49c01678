// Minimal end-to-end run: draw a low-rank 12x12x12x12 tensor, hide half of it,
// recover with the transform-learning solver and print the relative error.

#include "tu1/tu1.hpp"

#include <cstdio>

int main() {
  tu1::SyntheticSpec spec;
  spec.shape = {12, 12, 12, 12};
  spec.R = 2;
  spec.seed = 7;
  const tu1::RTensor m = tu1::gen_synthetic(spec);
  const tu1::MaskIndexSet mask = tu1::gen_mask(spec.shape, 0.5, 77);

  const tu1::TransformFamily fam = tu1::matched_family(spec);
  tu1::SolverConfig cfg;
  const tu1::CompletionResult res = tu1::complete(m, mask, fam, cfg);

  std::printf("%s after %d iterations\n", res.converged ? "converged" : "hit max-iter",
              res.iterations);
  std::printf("relative error: %.3e\n", tu1::relative_error(m, res.recovered));
  std::printf("feasibility residual: %.3e (relative %.3e)\n", res.terminal_residual,
              res.terminal_relative_residual);
  return 0;
}
