#include "chc/sweep.hpp"

#include <iomanip>
#include <sstream>

#include "chc/error.hpp"
#include "chc/metrics.hpp"

namespace chc {

RdTable rd_sweep(const Corpus& corpus, const ModelWeights& weights, const std::vector<double>& budgets,
                 const std::vector<MethodDescriptor>& candidates) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "sweep needs at least one image");
  RdTable table;
  for (const CorpusImage& img : corpus) {
    const CodecInput in = codec_input(img.rgb);
    const std::vector<CandidateResult> results = encode_candidates(in, weights, candidates);
    const RgbImage zero_cost = zero_cost_colorize(in.gray, weights);
    const double zero_cost_psnr = rgb_psnr(zero_cost, in.reference);

    for (double budget : budgets) {
      RdPoint p;
      p.image_id = img.name;
      p.budget_bytes = budget;
      std::size_t pick = results.size();
      try {
        pick = select_candidate(results, EncodeTarget::budget(budget));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoFeasibleCandidate) throw;
      }
      if (pick < results.size() && results[pick].psnr > zero_cost_psnr) {
        const CandidateResult& r = results[pick];
        const RgbImage decoded = decode_color(r.bytes, in.gray, weights);
        p.actual_bytes = static_cast<double>(r.size());
        p.method = r.method.summary();
        p.psnr_db = rgb_psnr(decoded, in.reference);
        p.chroma_mse = chroma_mse(rgb_to_ycbcr(decoded).chroma, in.truth);
        p.ms_ssim = ms_ssim(decoded, in.reference);
      } else {
        p.method = "zero-cost";
        p.psnr_db = zero_cost_psnr;
        p.chroma_mse = chroma_mse(rgb_to_ycbcr(zero_cost).chroma, in.truth);
        p.ms_ssim = ms_ssim(zero_cost, in.reference);
      }
      table.rows.push_back(std::move(p));
    }
  }

  const double n = static_cast<double>(corpus.size());
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    RdPoint m;
    m.image_id = "mean";
    m.budget_bytes = budgets[b];
    m.method = "-";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const RdPoint& p = table.rows[i * budgets.size() + b];
      m.actual_bytes += p.actual_bytes / n;
      m.psnr_db += psnr_for_table(p.psnr_db) / n;
      m.chroma_mse += p.chroma_mse / n;
      m.ms_ssim += p.ms_ssim / n;
    }
    table.means.push_back(std::move(m));
  }
  return table;
}

std::string rd_csv(const RdTable& table) {
  std::ostringstream out;
  out << "# mean rows average per-image PSNR; infinite PSNR counted as " << kPsnrSentinel << " dB\n";
  out << "image_id,budget_bytes,actual_bytes,method,psnr_db,chroma_mse,ms_ssim\n";
  out << std::setprecision(10);
  auto row = [&](const RdPoint& p) {
    out << p.image_id << ',' << p.budget_bytes << ',' << p.actual_bytes << ",\"" << p.method << "\","
        << psnr_for_table(p.psnr_db) << ',' << p.chroma_mse << ',' << p.ms_ssim << '\n';
  };
  for (const auto& p : table.rows) row(p);
  for (const auto& p : table.means) row(p);
  return out.str();
}

}  // namespace chc
