#pragma once

#include <cstdint>
#include <vector>

#include "ltrajdiff/masking.hpp"
#include "ltrajdiff/trainable.hpp"

namespace ltrajdiff {

// One training example of a minibatch. The mask and the diffusion noise are
// drawn from derive_seed(seed) inside the kernel.
struct BatchItem {
  const AgentSample* sample = nullptr;
  std::uint64_t seed = 0;
};

struct BatchResult {
  nn::GradientBuffer grads;  // mean over the batch
  double loss = 0.0;         // mean over the batch
};

// Fixed chunk count; the reduction order does not depend on the thread count.
inline constexpr int kBatchChunks = 8;

BatchResult batch_gradient_serial(const TrainableModel& model, const std::vector<BatchItem>& batch,
                                  const MaskSpec& mask_spec);
BatchResult batch_gradient_parallel(const TrainableModel& model, const std::vector<BatchItem>& batch,
                                    const MaskSpec& mask_spec);

// Training mask for one item (full visibility when the model says so).
VisibilityMask training_mask(const TrainableModel& model, const MaskSpec& spec, int length, Rng& rng);

}  // namespace ltrajdiff
