#include "chc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "chc/error.hpp"
#include "chc/fileio.hpp"

namespace chc {

void CorpusSpec::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidSpec, what); };
  if (image_count < 1 || width < 3 || height < 3) bad("need at least one image of size >= 3x3");
  if (shape_classes < 1) bad("need at least one shape class");
  if (static_cast<int>(palette.size()) != shape_classes) bad("palette needs one mode list per class");
  for (const auto& modes : palette) {
    if (modes.empty()) bad("class without chroma modes");
    double total = 0.0;
    for (const auto& m : modes) {
      if (m.probability < 0.0) bad("negative mode probability");
      if (m.cb < kChromaMin || m.cb > kChromaMax || m.cr < kChromaMin || m.cr > kChromaMax)
        bad("mode outside the chroma range");
      total += m.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) bad("mode probabilities must sum to 1");
  }
  if (!(noise_std >= 0.0)) bad("noise_std must be >= 0");
  if (shapes_per_image < 0 || min_shape < 1 || max_shape < min_shape) bad("bad shape size range");
  if (background_luma < 0.0 || background_luma > 1.0) bad("background luma outside [0,1]");
  for (int c = 0; c < shape_classes; ++c)
    if (std::abs(class_luma(*this, c) - background_luma) < 1e-9) bad("class luma collides with background");
}

double class_luma(const CorpusSpec& spec, int class_id) {
  if (spec.shape_classes == 1) return 0.5;
  return 0.3 + 0.4 * class_id / (spec.shape_classes - 1);
}

std::uint64_t image_seed(std::uint64_t corpus_seed, std::size_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = corpus_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr int kPlacementAttempts = 100;

// True when the rectangles come closer than `gap` background pixels.
bool too_close(const ShapeRecord& a, const ShapeRecord& b, int gap) {
  return a.x < b.x + b.w + gap && b.x < a.x + a.w + gap && a.y < b.y + b.h + gap && b.y < a.y + a.h + gap;
}

CorpusImage generate_image(const CorpusSpec& spec, std::size_t index) {
  CorpusImage img;
  img.seed = image_seed(spec.seed, index);
  char name[32];
  std::snprintf(name, sizeof(name), "img_%05zu.png", index);
  img.name = name;
  std::mt19937_64 rng(img.seed);

  const int w = spec.width, h = spec.height;
  img.planes.y = Plane::Constant(h, w, spec.background_luma);
  img.planes.chroma = Chroma{Plane::Zero(h, w), Plane::Zero(h, w)};

  std::uniform_int_distribution<int> pick_class(0, spec.shape_classes - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < spec.shapes_per_image; ++s) {
    ShapeRecord rec;
    rec.class_id = pick_class(rng);
    const auto& modes = spec.palette[rec.class_id];
    double u = unit(rng), cum = 0.0;
    rec.mode = static_cast<int>(modes.size()) - 1;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      cum += modes[m].probability;
      if (u < cum) {
        rec.mode = static_cast<int>(m);
        break;
      }
    }
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      rec.w = std::min(w, std::uniform_int_distribution<int>(spec.min_shape, spec.max_shape)(rng));
      rec.h = std::min(h, std::uniform_int_distribution<int>(spec.min_shape, spec.max_shape)(rng));
      rec.x = std::uniform_int_distribution<int>(0, w - rec.w)(rng);
      rec.y = std::uniform_int_distribution<int>(0, h - rec.h)(rng);
      placed = spec.min_gap < 0 || std::none_of(img.shapes.begin(), img.shapes.end(), [&](const ShapeRecord& o) {
                 return too_close(rec, o, spec.min_gap);
               });
    }
    if (!placed) continue;
    const auto& mode = modes[rec.mode];
    img.planes.y.block(rec.y, rec.x, rec.h, rec.w).setConstant(class_luma(spec, rec.class_id));
    img.planes.chroma.cb.block(rec.y, rec.x, rec.h, rec.w).setConstant(mode.cb);
    img.planes.chroma.cr.block(rec.y, rec.x, rec.h, rec.w).setConstant(mode.cr);
    img.shapes.push_back(rec);
  }
  if (spec.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (Eigen::Index i = 0; i < img.planes.y.size(); ++i) {
      double& cb = img.planes.chroma.cb.data()[i];
      double& cr = img.planes.chroma.cr.data()[i];
      cb = std::clamp(cb + noise(rng), kChromaMin, kChromaMax);
      cr = std::clamp(cr + noise(rng), kChromaMin, kChromaMax);
    }
  }
  img.rgb = ycbcr_to_rgb(img.planes);
  return img;
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus corpus;
  corpus.reserve(spec.image_count);
  for (int i = 0; i < spec.image_count; ++i) corpus.push_back(generate_image(spec, static_cast<std::size_t>(i)));
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string());
  std::ostringstream manifest;
  manifest << "# filename seed shapes(class:mode:x:y:w:h ...)\n";
  for (const auto& img : corpus) {
    const auto path = dir / img.name;
    auto tmp = path;
    tmp += ".tmp.png";
    write_image(img.rgb, tmp, ImageFormat::Png);
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot rename into " + path.string());
    manifest << img.name << ' ' << img.seed;
    for (const auto& s : img.shapes)
      manifest << ' ' << s.class_id << ':' << s.mode << ':' << s.x << ':' << s.y << ':' << s.w << ':' << s.h;
    manifest << '\n';
  }
  write_file_atomic(dir / "manifest.txt", manifest.str());
}

Corpus load_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  if (!std::filesystem::exists(manifest_path)) fail(ErrorCode::FileNotFound, manifest_path.string());
  std::ifstream in(manifest_path);
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    CorpusImage img;
    if (!(ls >> img.name >> img.seed)) fail(ErrorCode::InvalidSpec, "bad manifest line: " + line);
    std::string tok;
    while (ls >> tok) {
      ShapeRecord s;
      char c1, c2, c3, c4, c5;
      std::istringstream ts(tok);
      if (!(ts >> s.class_id >> c1 >> s.mode >> c2 >> s.x >> c3 >> s.y >> c4 >> s.w >> c5 >> s.h))
        fail(ErrorCode::InvalidSpec, "bad shape record: " + tok);
      img.shapes.push_back(s);
    }
    img.rgb = read_image(dir / img.name, ImageFormat::Png);
    img.planes = rgb_to_ycbcr(img.rgb);
    corpus.push_back(std::move(img));
  }
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "manifest lists no images: " + manifest_path.string());
  return corpus;
}

CorpusSpec corpus_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, e.what());
  }
  CorpusSpec s;
  try {
    s.image_count = j.value("image_count", s.image_count);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.seed = j.value("seed", s.seed);
    s.shapes_per_image = j.value("shapes_per_image", s.shapes_per_image);
    s.min_shape = j.value("min_shape", s.min_shape);
    s.max_shape = j.value("max_shape", s.max_shape);
    s.background_luma = j.value("background_luma", s.background_luma);
    s.min_gap = j.value("min_gap", s.min_gap);
    for (const auto& cls : j.at("palette")) {
      std::vector<ChromaMode> modes;
      for (const auto& m : cls) modes.push_back({m.at("cb").get<double>(), m.at("cr").get<double>(), m.at("p").get<double>()});
      s.palette.push_back(std::move(modes));
    }
    s.shape_classes = j.value("shape_classes", static_cast<int>(s.palette.size()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, e.what());
  }
  s.validate();
  return s;
}

CorpusSpec load_corpus_spec(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return corpus_spec_from_json(std::string(bytes.begin(), bytes.end()));
}

double single_branch_floor(const CorpusSpec& spec, const Corpus& corpus) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "corpus has no images");
  std::vector<double> class_var;
  for (const auto& modes : spec.palette) {
    double mcb = 0, mcr = 0, sq = 0;
    for (const auto& m : modes) {
      mcb += m.probability * m.cb;
      mcr += m.probability * m.cr;
      sq += m.probability * (m.cb * m.cb + m.cr * m.cr);
    }
    class_var.push_back(sq - mcb * mcb - mcr * mcr);
  }
  double total = 0.0;
  for (const auto& img : corpus) {
    Plane var = Plane::Zero(spec.height, spec.width);
    for (const auto& s : img.shapes) var.block(s.y, s.x, s.h, s.w).setConstant(class_var.at(s.class_id));
    total += var.mean();
  }
  return total / static_cast<double>(corpus.size()) + 2.0 * spec.noise_std * spec.noise_std;
}

CorpusSpec two_mode_spec(int image_count, std::uint64_t seed) {
  CorpusSpec s;
  s.image_count = image_count;
  s.seed = seed;
  s.shape_classes = 1;
  s.palette = {{{0.25, 0.0, 0.5}, {-0.25, 0.0, 0.5}}};
  s.noise_std = 0.01;
  return s;
}

CorpusSpec deterministic_mode_spec(int image_count, std::uint64_t seed) {
  CorpusSpec s;
  s.image_count = image_count;
  s.seed = seed;
  s.shape_classes = 2;
  s.palette = {{{0.25, 0.0, 1.0}}, {{-0.25, 0.0, 1.0}}};
  s.noise_std = 0.01;
  return s;
}

}  // namespace chc
