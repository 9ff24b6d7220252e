#include "chc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "chc/codec.hpp"
#include "chc/corpus.hpp"
#include "chc/error.hpp"
#include "chc/fileio.hpp"
#include "chc/metrics.hpp"
#include "chc/net.hpp"
#include "chc/sweep.hpp"
#include "chc/train.hpp"

namespace chc {
namespace {

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::vector<double> parse_budgets(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || !(v >= 0))
      fail(ErrorCode::InvalidConfig, "budget list entry is not a non-negative number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorCode::InvalidConfig, "empty budget list");
  return out;
}

struct TrainFlags {
  std::string corpus, out, log;
  int k = 2, epochs = 20, batch = 8, trunk_channels = 16, trunk_depth = 2, branch_hidden = 8,
      predictor_hidden = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct Flags {
  std::string spec, out, weights, gray, color, gray_out, chc, a, b, corpus, budgets = "0,128,256,512,1024";
  double budget = std::numeric_limits<double>::infinity();
  double quality = std::numeric_limits<double>::quiet_NaN();
  bool rgb_ssim = false;
  TrainFlags train;
};

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--epochs", t.epochs, "training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--lr", t.lr, "initial learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--batch", t.batch, "mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", t.seed, "training seed")->capture_default_str();
  cmd->add_option("--log", t.log, "write the per-epoch loss log as CSV");
}

TrainConfig train_config(const TrainFlags& t) {
  TrainConfig tc;
  tc.epochs = t.epochs;
  tc.batch_size = t.batch;
  tc.learning_rate = t.lr;
  tc.seed = t.seed;
  return tc;
}

void print_log_tail(const std::vector<EpochLog>& log, std::ostream& out) {
  if (log.empty()) return;
  const EpochLog& last = log.back();
  out << "final epoch " << last.epoch << " loss " << format_double(last.loss);
  if (last.accuracy) out << " accuracy " << format_double(*last.accuracy);
  out << '\n';
}

CodecInput load_codec_input(const Flags& f) {
  CodecInput in = codec_input(read_image(f.color));
  if (!f.gray.empty()) {
    in.gray = quantize_luma(read_gray(f.gray));
    if (in.gray.rows() != in.truth.height() || in.gray.cols() != in.truth.width())
      fail(ErrorCode::DimensionMismatch, "gray and color images differ in size");
  }
  return in;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned chroma compression: train, encode, decode and evaluate."};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus from a JSON corpus description");
  gen->add_option("--spec", f.spec, "corpus spec JSON")->required();
  gen->add_option("--out", f.out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train the multi-branch colorizer");
  train->add_option("--corpus", f.train.corpus, "corpus directory")->required();
  train->add_option("--out", f.train.out, "output weights file")->required();
  train->add_option("--k", f.train.k, "number of branches")->capture_default_str()->check(CLI::Range(1, 16));
  train->add_option("--trunk-channels", f.train.trunk_channels)->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--trunk-depth", f.train.trunk_depth)->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--branch-hidden", f.train.branch_hidden)->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--predictor-hidden", f.train.predictor_hidden)->capture_default_str()->check(CLI::PositiveNumber);
  add_train_flags(train, f.train);

  auto* trainp = app.add_subcommand("train-predictor", "train the branch predictor of an existing model");
  trainp->add_option("--corpus", f.train.corpus, "corpus directory")->required();
  trainp->add_option("--weights", f.weights, "input weights")->required();
  trainp->add_option("--out", f.train.out, "output weights file")->required();
  add_train_flags(trainp, f.train);

  auto* enc = app.add_subcommand("encode", "compress the color of an image");
  enc->add_option("--color", f.color, "color image (PNG or PPM)")->required();
  enc->add_option("--gray", f.gray, "grayscale image shared with the decoder (default: luma of --color)");
  enc->add_option("--weights", f.weights, "model weights")->required();
  enc->add_option("--out", f.out, "output container")->required();
  auto* budget = enc->add_option("--budget", f.budget, "maximum container size in bytes");
  auto* quality = enc->add_option("--quality", f.quality, "target PSNR in dB (smallest container reaching it)");
  budget->excludes(quality);
  enc->add_option("--gray-out", f.gray_out, "write the grayscale plane the decoder needs");

  auto* dec = app.add_subcommand("decode", "reconstruct a color image from a container");
  dec->add_option("--chc", f.chc, "container file")->required();
  dec->add_option("--gray", f.gray, "grayscale image")->required();
  dec->add_option("--weights", f.weights, "model weights")->required();
  dec->add_option("--out", f.out, "output image")->required();
  dec->add_option("--color", f.color, "original color image, to report PSNR");

  auto* col = app.add_subcommand("colorize", "colorize with the branch predictor, no side information");
  col->add_option("--gray", f.gray, "grayscale image")->required();
  col->add_option("--weights", f.weights, "model weights")->required();
  col->add_option("--out", f.out, "output image")->required();

  auto* ev = app.add_subcommand("eval", "compare two images");
  ev->add_option("--a", f.a, "first image")->required();
  ev->add_option("--b", f.b, "second image")->required();
  ev->add_flag("--rgb-ssim", f.rgb_ssim, "MS-SSIM averaged over RGB channels instead of luma");

  auto* sw = app.add_subcommand("sweep", "rate-distortion sweep over a corpus");
  sw->add_option("--corpus", f.corpus, "corpus directory")->required();
  sw->add_option("--weights", f.weights, "model weights")->required();
  sw->add_option("--budgets", f.budgets, "comma-separated byte budgets")->capture_default_str();
  sw->add_option("--out", f.out, "output CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const CorpusSpec spec = load_corpus_spec(f.spec);
      const Corpus corpus = generate_corpus(spec);
      save_corpus(corpus, f.out);
      out << "wrote " << corpus.size() << " images to " << f.out << " (seed " << spec.seed << ")\n";
    } else if (train->parsed()) {
      const Corpus corpus = load_corpus(f.train.corpus);
      NetworkConfig config;
      config.k_branches = f.train.k;
      config.trunk_channels = f.train.trunk_channels;
      config.trunk_depth = f.train.trunk_depth;
      config.branch_hidden = f.train.branch_hidden;
      config.predictor_hidden = f.train.predictor_hidden;
      config.seed = f.train.seed;
      out << "seed " << f.train.seed << '\n';
      const TrainResult result = train_colorizer(corpus, config, train_config(f.train));
      save_weights(result.weights, f.train.out);
      if (!f.train.log.empty()) write_file_atomic(f.train.log, loss_log_csv(result.log));
      print_log_tail(result.log, out);
    } else if (trainp->parsed()) {
      const Corpus corpus = load_corpus(f.train.corpus);
      const ModelWeights weights = load_weights(f.weights);
      out << "seed " << f.train.seed << '\n';
      const TrainResult result = train_predictor(corpus, weights, train_config(f.train));
      save_weights(result.weights, f.train.out);
      if (!f.train.log.empty()) write_file_atomic(f.train.log, loss_log_csv(result.log));
      print_log_tail(result.log, out);
    } else if (enc->parsed()) {
      const CodecInput in = load_codec_input(f);
      const ModelWeights weights = load_weights(f.weights);
      const EncodeTarget target =
          std::isnan(f.quality) ? EncodeTarget::budget(f.budget) : EncodeTarget::quality(f.quality);
      const CandidateResult r = encode_color(in, weights, target);
      write_file_atomic(f.out, r.bytes);
      if (!f.gray_out.empty()) write_gray(in.gray, f.gray_out);
      out << "method " << r.method.summary() << '\n'
          << "bytes " << r.size() << '\n'
          << "psnr " << format_double(r.psnr) << '\n';
    } else if (dec->parsed()) {
      const std::vector<std::uint8_t> bytes = read_file(f.chc);
      const Plane gray = quantize_luma(read_gray(f.gray));
      const ModelWeights weights = load_weights(f.weights);
      const RgbImage img = decode_color(bytes, gray, weights);
      write_image(img, f.out);
      if (!f.color.empty()) out << "psnr " << format_double(rgb_psnr(img, read_image(f.color))) << '\n';
    } else if (col->parsed()) {
      const Plane gray = quantize_luma(read_gray(f.gray));
      write_image(zero_cost_colorize(gray, load_weights(f.weights)), f.out);
    } else if (ev->parsed()) {
      const RgbImage a = read_image(f.a), b = read_image(f.b);
      out << "psnr " << format_double(psnr_for_table(rgb_psnr(a, b))) << '\n'
          << "mse " << format_double(rgb_mse(a, b)) << '\n'
          << "ms_ssim " << format_double(ms_ssim(a, b, f.rgb_ssim ? SsimChannels::Rgb : SsimChannels::Luma))
          << '\n';
    } else if (sw->parsed()) {
      const std::vector<double> budgets = parse_budgets(f.budgets);
      const RdTable table = rd_sweep(load_corpus(f.corpus), load_weights(f.weights), budgets);
      write_file_atomic(f.out, rd_csv(table));
      for (const RdPoint& m : table.means)
        out << "budget " << m.budget_bytes << " mean_psnr " << format_double(m.psnr_db) << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace chc
