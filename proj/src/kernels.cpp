#include "ltrajdiff/kernels.hpp"

#include <omp.h>

namespace ltrajdiff {

VisibilityMask training_mask(const TrainableModel& model, const MaskSpec& spec, int length, Rng& rng) {
  if (model.trains_with_full_visibility()) return full_mask(length);
  return make_mask(spec, length, rng);
}

namespace {

double item_loss(const TrainableModel& model, const BatchItem& item, const MaskSpec& spec,
                 nn::GradientBuffer& grads) {
  Rng rng(item.seed);
  const VisibilityMask mask = training_mask(model, spec, static_cast<int>(item.sample->layout.frames.size()), rng);
  return model.sample_loss(*item.sample, mask, rng, &grads);
}

void finish(BatchResult& r, std::size_t n) {
  if (n == 0) return;
  r.grads.scale(1.0 / static_cast<double>(n));
  r.loss /= static_cast<double>(n);
}

}  // namespace

BatchResult batch_gradient_serial(const TrainableModel& model, const std::vector<BatchItem>& batch,
                                  const MaskSpec& mask_spec) {
  BatchResult result{nn::GradientBuffer(model.parameters()), 0.0};
  for (const auto& item : batch) result.loss += item_loss(model, item, mask_spec, result.grads);
  finish(result, batch.size());
  return result;
}

BatchResult batch_gradient_parallel(const TrainableModel& model, const std::vector<BatchItem>& batch,
                                    const MaskSpec& mask_spec) {
  const std::size_t n = batch.size();
  std::vector<nn::GradientBuffer> chunk_grads(kBatchChunks, nn::GradientBuffer(model.parameters()));
  std::vector<double> chunk_loss(kBatchChunks, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < kBatchChunks; ++c) {
    const std::size_t begin = n * static_cast<std::size_t>(c) / kBatchChunks;
    const std::size_t end = n * static_cast<std::size_t>(c + 1) / kBatchChunks;
    for (std::size_t i = begin; i < end; ++i) chunk_loss[c] += item_loss(model, batch[i], mask_spec, chunk_grads[c]);
  }
  BatchResult result{std::move(chunk_grads[0]), chunk_loss[0]};
  for (int c = 1; c < kBatchChunks; ++c) {
    result.grads += chunk_grads[c];
    result.loss += chunk_loss[c];
  }
  finish(result, n);
  return result;
}

}  // namespace ltrajdiff
