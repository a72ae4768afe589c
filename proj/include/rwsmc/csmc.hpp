#pragma once

#include <utility>
#include <vector>

#include "rwsmc/kernel.hpp"

namespace rwsmc {

// i-CSMC: free particles from the model's mutation kernels, conditional
// multinomial resampling on G, reference pinned at index 0.
class IcsmcKernel final : public Kernel {
 public:
  IcsmcKernel(const ProductModel& model, const KernelConfig& cfg);
  void update(Path& path, Rng& rng) override;

 private:
  std::vector<double> log_g_;  // T x (N+1)
  std::vector<double> p_;
};

std::pair<Path, GenealogyRecord> icsmc_update(const ProductModel& model, const Path& path,
                                              const KernelConfig& cfg, Rng& rng);

}  // namespace rwsmc
