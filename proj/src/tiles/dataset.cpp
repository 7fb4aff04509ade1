#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "w2w/detail/http.hpp"
#include "w2w/errors.hpp"
#include "w2w/json_io.hpp"
#include "w2w/text.hpp"
#include "w2w/tiles.hpp"

namespace w2w {

std::string category_name(TileCategory c) { return c == TileCategory::Character ? "character" : "environment"; }

TileCategory parse_category(std::string_view s) {
  const auto v = to_lower(trim(s));
  if (v == "environment" || v == "env" || v == "object") return TileCategory::Environment;
  if (v == "character" || v == "char") return TileCategory::Character;
  throw DatasetError("unknown tile category '" + std::string(s) + "'");
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw DatasetError("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

TileDataset load_dataset(const std::string& csv_path, TileCategory category) {
  std::string text;
  try {
    text = read_file(csv_path);
  } catch (const IoError& e) {
    throw DatasetError(std::string("tile manifest unreadable: ") + e.what());
  }
  const auto rows = parse_csv(text);
  if (rows.empty()) throw DatasetError("tile manifest '" + csv_path + "' is empty");
  const std::vector<std::string> header{"id", "image_path", "description", "category"};
  std::vector<std::string> got;
  for (const auto& h : rows.front()) got.push_back(to_lower(trim(h)));
  if (got != header) throw DatasetError("tile manifest '" + csv_path + "' must start with id,image_path,description,category");

  const auto base = std::filesystem::path(csv_path).parent_path();
  TileDataset ds;
  ds.category = category;
  std::set<int> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string where = csv_path + " row " + std::to_string(i + 1);
    if (r.size() != 4) throw DatasetError(where + ": expected 4 fields");
    if (parse_category(r[3]) != category) continue;
    TileAsset a;
    char* end = nullptr;
    const std::string id_text = trim(r[0]);
    a.id = static_cast<int>(std::strtol(id_text.c_str(), &end, 10));
    if (id_text.empty() || *end != '\0') throw DatasetError(where + ": id '" + r[0] + "' is not an integer");
    if (!ids.insert(a.id).second) throw DatasetError(where + ": duplicate id " + std::to_string(a.id));
    a.image_path = trim(r[1]);
    a.description = trim(r[2]);
    if (a.description.empty()) throw DatasetError(where + ": empty description");
    a.category = category;
    const auto resolved = std::filesystem::path(a.image_path).is_absolute() ? std::filesystem::path(a.image_path)
                                                                             : base / a.image_path;
    Image img;
    try {
      img = read_png(resolved.string());
    } catch (const IoError& e) {
      throw DatasetError(where + ": " + e.what());
    }
    if (img.width() != img.height()) throw DatasetError(where + ": tile image is not square");
    if (!ds.assets.empty() && ds.assets.front().image->width() != img.width()) {
      throw TileSizeMismatch(where + ": tile size differs from the rest of the dataset");
    }
    a.image = std::make_shared<const Image>(std::move(img));
    ds.assets.push_back(std::move(a));
  }
  if (ds.assets.empty()) {
    throw DatasetError("tile manifest '" + csv_path + "' has no " + category_name(category) + " rows");
  }
  std::sort(ds.assets.begin(), ds.assets.end(), [](const TileAsset& a, const TileAsset& b) { return a.id < b.id; });
  return ds;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

BagOfWordsEmbedder::BagOfWordsEmbedder(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw PreconditionError("embedding dimension must be >= 1");
}

std::vector<std::vector<double>> BagOfWordsEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  std::vector<std::vector<double>> out;
  for (const auto& t : texts) {
    std::vector<double> v(dimension_, 0.0);
    for (const auto& tok : tokenize(t)) {
      std::uint64_t h = 1469598103934665603ull;
      for (unsigned char c : tok) {
        h ^= c;
        h *= 1099511628211ull;
      }
      v[h % static_cast<std::uint64_t>(dimension_)] += 1.0;
    }
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {}

std::vector<std::vector<double>> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  const char* key = config_.api_key_env_var.empty() ? nullptr : std::getenv(config_.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw AuthError("API key environment variable '" + config_.api_key_env_var + "' is not set");
  }
  const Json body{{"model", config_.model_name}, {"input", texts}};
  const auto res = detail::post_json(config_.endpoint_url, {{"Authorization", std::string("Bearer ") + key}},
                                     body.dump(), config_.request_timeout);
  if (res.status == 401 || res.status == 403) throw AuthError("embedding endpoint rejected the API key");
  if (res.status == 429) throw RateLimited("embedding endpoint rate limited the request");
  if (res.status != 200) throw TransportError("embedding endpoint returned HTTP " + std::to_string(res.status));

  std::vector<std::vector<double>> out(texts.size());
  try {
    const auto j = Json::parse(res.body);
    for (const auto& item : j.at("data")) {
      const auto idx = item.value("index", std::size_t{0});
      if (idx >= out.size()) throw ParseFailure("embedding index out of range");
      out[idx] = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    throw ParseFailure(std::string("malformed embedding response: ") + e.what());
  }
  for (const auto& v : out) {
    if (v.empty()) throw ParseFailure("embedding response is missing an input");
    if (dimension_ == 0) dimension_ = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dimension_) throw DimensionMismatch("embedding response has mixed dimensions");
  }
  return out;
}

void embed_dataset(TileDataset& dataset, const Embedder& embedder) {
  std::vector<std::string> texts;
  for (const auto& a : dataset.assets) texts.push_back(a.description);
  if (texts.empty()) return;
  auto vecs = embedder.embed_batch(texts);
  for (std::size_t i = 0; i < vecs.size(); ++i) dataset.assets[i].embedding = std::move(vecs[i]);
}

namespace {

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine similarity of vectors with different dimensions");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0 || nb == 0) throw ZeroVector("cosine similarity of a zero vector");
  double dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

const TileAsset& retrieve_tile(const std::string& description, const TileDataset& dataset, const Embedder& embedder) {
  if (dataset.assets.empty()) throw PreconditionError("cannot retrieve from an empty dataset");
  const auto query = embedder.embed(description);
  if (norm(query) == 0) throw ZeroVector("description '" + description + "' has no embeddable content");
  const TileAsset* best = nullptr;
  double best_score = 0;
  for (const auto& a : dataset.assets) {
    const auto vec = a.embedding.empty() ? embedder.embed(a.description) : a.embedding;
    if (norm(vec) == 0) continue;
    const double s = cosine_similarity(query, vec);
    if (!best || s > best_score || (s == best_score && a.id < best->id)) {
      best = &a;
      best_score = s;
    }
  }
  if (!best) throw ZeroVector("every asset embedding is zero");
  return *best;
}

TileAssignment assign_tiles(const TileLegend& legend, const std::vector<CharacterInfo>& characters,
                            const TileDataset& env_dataset, const TileDataset& char_dataset, const Embedder& embedder,
                            Warnings& warnings) {
  TileAssignment out;
  for (const auto& [sym, desc] : legend.entries) {
    const bool is_char = legend.is_character(sym);
    const auto& ds = is_char ? char_dataset : env_dataset;
    std::string query = desc;
    if (is_char) {
      const auto it = std::find_if(characters.begin(), characters.end(),
                                   [sym](const CharacterInfo& c) { return c.symbol == sym; });
      if (it != characters.end() && !it->description.empty()) query = it->description;
    }
    if (trim(query).empty()) throw PreconditionError(std::string("legend symbol '") + sym + "' has no description");
    try {
      out.emplace(sym, retrieve_tile(query, ds, embedder));
    } catch (const ZeroVector&) {
      const auto& fallback = *std::min_element(ds.assets.begin(), ds.assets.end(),
                                               [](const TileAsset& a, const TileAsset& b) { return a.id < b.id; });
      warnings.push_back(std::string("no usable words in description of '") + sym + "'; using tile " +
                         std::to_string(fallback.id));
      out.emplace(sym, fallback);
    }
  }
  return out;
}

}  // namespace w2w
