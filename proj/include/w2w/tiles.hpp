#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "w2w/extraction.hpp"
#include "w2w/worldmodel.hpp"

namespace w2w {

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 255;
  bool operator==(const Rgba&) const = default;
};

// 8-bit RGBA bitmap, rows top to bottom.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgba fill = {0, 0, 0, 0});

  int width() const { return width_; }
  int height() const { return height_; }
  Rgba at(int x, int y) const;
  void set(int x, int y, Rgba px);
  bool has_transparency() const;
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bytes_;
};

Image read_png(const std::string& path);
void write_png(const Image& image, const std::string& path);

// Source-over blend of `top` onto `bottom`; same dimensions required.
Image composite_over(const Image& bottom, const Image& top);

enum class TileCategory { Environment, Character };

std::string category_name(TileCategory c);
TileCategory parse_category(std::string_view s);

struct TileAsset {
  int id = 0;
  std::string image_path;  // as written in the manifest
  std::string description;
  TileCategory category = TileCategory::Environment;
  std::vector<double> embedding;
  std::shared_ptr<const Image> image;
};

struct TileDataset {
  TileCategory category = TileCategory::Environment;
  std::vector<TileAsset> assets;  // sorted by id
};

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

// Loads the rows of one category from a `id,image_path,description,category`
// manifest. Image paths are resolved against the manifest's directory; every
// image must be square and the same size.
TileDataset load_dataset(const std::string& csv_path, TileCategory category);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dimension() const = 0;
  virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const = 0;
  std::vector<double> embed(const std::string& text) const { return embed_batch({text}).front(); }
};

// Lowercase, split on non-alphanumerics, count FNV-1a token hashes.
class BagOfWordsEmbedder : public Embedder {
 public:
  explicit BagOfWordsEmbedder(int dimension = 1024);
  int dimension() const override { return dimension_; }
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const override;

 private:
  int dimension_;
};

std::vector<std::string> tokenize(std::string_view text);

struct RemoteEmbedderConfig {
  std::string endpoint_url = "https://api.openai.com/v1/embeddings";
  std::string model_name = "text-embedding-3-small";
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::chrono::milliseconds request_timeout{60000};
};

// OpenAI-style embeddings endpoint: {"model","input":[...]} -> data[i].embedding.
class RemoteEmbedder : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  int dimension() const override { return dimension_; }
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const override;

 private:
  RemoteEmbedderConfig config_;
  mutable int dimension_ = 0;
};

void embed_dataset(TileDataset& dataset, const Embedder& embedder);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Highest cosine similarity wins, lowest id on ties. Assets whose embedding
// is all zeros never match. Embeddings missing from the dataset are computed
// on the fly.
const TileAsset& retrieve_tile(const std::string& description, const TileDataset& dataset, const Embedder& embedder);

using TileAssignment = std::map<Symbol, TileAsset>;

// Character symbols retrieve from `char_dataset` by the character's
// description, everything else from `env_dataset` by the legend text. A
// description with no usable tokens falls back to the lowest-id asset.
TileAssignment assign_tiles(const TileLegend& legend, const std::vector<CharacterInfo>& characters,
                            const TileDataset& env_dataset, const TileDataset& char_dataset, const Embedder& embedder,
                            Warnings& warnings);

// Pastes one tile per cell. Character-category and `overlay_symbols` tiles
// with transparency are composited over the most frequent non-overlay
// neighbor tile.
Image render_world(const WorldGrid& world, const TileAssignment& assignment,
                   const std::set<Symbol>& overlay_symbols = {});

struct PlaceholderSpec {
  std::string description;
  Rgba color;
};

inline constexpr int kPlaceholderTileSize = 16;

// Writes `<prefix>_<id>.png` tiles plus `csv_name` into `out_dir`.
// Environment tiles are flat color with a darker 1px border; character
// tiles are a bordered square figure on a transparent background.
TileDataset generate_placeholder_tileset(const std::vector<PlaceholderSpec>& spec, TileCategory category,
                                         const std::string& out_dir, const std::string& csv_name, int first_id = 0);

struct PlaceholderSpecFile {
  std::vector<PlaceholderSpec> environment;
  std::vector<PlaceholderSpec> character;
};

// {"environment":[{"description","color":[r,g,b]}], "character":[...]}
PlaceholderSpecFile load_placeholder_spec(const std::string& path);

inline constexpr int kPlaceholderCharacterFirstId = 1000;

// Writes environment.csv and characters.csv (plus tiles) into out_dir.
std::pair<TileDataset, TileDataset> write_placeholder_assets(const PlaceholderSpecFile& spec,
                                                             const std::string& out_dir);

}  // namespace w2w
