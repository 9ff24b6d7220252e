#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chc/pixelio.hpp"

namespace chc {

/// One chroma mode of a shape class, drawn with the given probability.
struct ChromaMode {
  double cb = 0.0;
  double cr = 0.0;
  double probability = 1.0;
};

/// Synthetic images of axis-aligned rectangles over a neutral background.
/// Every class has its own luma level, so the class is recoverable from the
/// grayscale plane while its color is not (when it has several modes).
struct CorpusSpec {
  int image_count = 16;
  int width = 64;
  int height = 64;
  int shape_classes = 1;
  std::vector<std::vector<ChromaMode>> palette;  // one list per class
  double noise_std = 0.01;
  std::uint64_t seed = 1;

  int shapes_per_image = 4;
  int min_shape = 10;
  int max_shape = 28;
  double background_luma = 0.1;
  /// Minimum background gap between shapes, in pixels; negative lets shapes
  /// overlap. A shape that finds no free spot in 100 draws is dropped.
  int min_gap = 2;

  /// Throws InvalidSpec.
  void validate() const;
};

/// Luma level of a class: evenly spaced in [0.3, 0.7].
double class_luma(const CorpusSpec& spec, int class_id);

struct ShapeRecord {
  int class_id = 0;
  int mode = 0;
  int x = 0, y = 0, w = 0, h = 0;
};

struct CorpusImage {
  std::string name;
  std::uint64_t seed = 0;
  PlanarImage planes;  // generator output, before 8-bit rounding
  RgbImage rgb;
  std::vector<ShapeRecord> shapes;  // painted in order; later shapes cover earlier ones
};

using Corpus = std::vector<CorpusImage>;

/// Deterministic per-image seed derived from the corpus seed.
std::uint64_t image_seed(std::uint64_t corpus_seed, std::size_t index);

Corpus generate_corpus(const CorpusSpec& spec);

/// Writes one PNG per image plus manifest.txt (filename, seed, shape layout).
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Reads a directory written by save_corpus; planes come from the PNGs.
Corpus load_corpus(const std::filesystem::path& dir);

/// JSON corpus description, the format used by the CLI.
CorpusSpec corpus_spec_from_json(const std::string& text);
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

/// Two equiprobable modes at (+-0.25, 0) for a single class.
/// Lowest achievable mean single-branch loss on `corpus`: per-pixel chroma-mode variance of the
/// covering shape class plus the noise variance of both channels. Ignores clamping and rounding.
double single_branch_floor(const CorpusSpec& spec, const Corpus& corpus);

CorpusSpec two_mode_spec(int image_count, std::uint64_t seed);

/// Two classes, each with one mode: color is a function of gray level.
CorpusSpec deterministic_mode_spec(int image_count, std::uint64_t seed);

}  // namespace chc
