#pragma once

#include <string>
#include <vector>

#include "chc/codec.hpp"
#include "chc/corpus.hpp"

namespace chc {

/// One (image, budget) measurement. `actual_bytes` is the full container
/// size, 0 for zero-cost colorization.
struct RdPoint {
  std::string image_id;
  double budget_bytes = 0;
  double actual_bytes = 0;
  std::string method;
  double psnr_db = 0;
  double chroma_mse = 0;
  double ms_ssim = 0;
};

struct RdTable {
  std::vector<RdPoint> rows;   // image-major, budgets in the given order
  std::vector<RdPoint> means;  // one per budget, image_id "mean"
};

/// Encodes and decodes every image at every budget. Zero-cost colorization
/// competes as a 0-byte candidate, so a budget below the smallest container
/// (including 0) yields the zero-cost result. Means average per-image PSNR,
/// with infinite values counted as the table sentinel.
RdTable rd_sweep(const Corpus& corpus, const ModelWeights& weights, const std::vector<double>& budgets,
                 const std::vector<MethodDescriptor>& candidates = default_candidates());

std::string rd_csv(const RdTable& table);

}  // namespace chc
