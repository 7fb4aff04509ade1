#include <filesystem>

#include "w2w/errors.hpp"
#include "w2w/json_io.hpp"
#include "w2w/text.hpp"
#include "w2w/tiles.hpp"

namespace w2w {

namespace {

bool is_overlay(Symbol s, const TileAsset& asset, const std::set<Symbol>& overlay_symbols) {
  return asset.category == TileCategory::Character || overlay_symbols.contains(s);
}

}  // namespace

Image render_world(const WorldGrid& world, const TileAssignment& assignment, const std::set<Symbol>& overlay_symbols) {
  if (world.height() == 0 || !world.is_rectangular()) throw PreconditionError("render_world needs a rectangular grid");
  int tile = -1;
  for (int r = 0; r < world.height(); ++r) {
    for (int c = 0; c < world.width(); ++c) {
      const Symbol s = world.at({r, c});
      const auto it = assignment.find(s);
      if (it == assignment.end() || !it->second.image) {
        throw MissingAssignment(std::string("no tile assigned to symbol '") + s + "'");
      }
      const auto& img = *it->second.image;
      if (img.width() != img.height()) throw TileSizeMismatch(std::string("tile for '") + s + "' is not square");
      if (tile < 0) tile = img.width();
      if (img.width() != tile) throw TileSizeMismatch("assigned tiles differ in size");
    }
  }

  // Grid-wide fallback backdrop for overlays with no plain neighbor.
  std::optional<Symbol> global_backdrop;
  {
    std::map<Symbol, int> counts;
    for (const auto& row : world.rows()) {
      for (Symbol s : row) {
        if (!is_overlay(s, assignment.at(s), overlay_symbols)) ++counts[s];
      }
    }
    int best = 0;
    for (const auto& [s, n] : counts) {
      if (n > best) {
        best = n;
        global_backdrop = s;
      }
    }
  }

  Image out(world.width() * tile, world.height() * tile);
  for (int r = 0; r < world.height(); ++r) {
    for (int c = 0; c < world.width(); ++c) {
      const Symbol s = world.at({r, c});
      const auto& asset = assignment.at(s);
      Image cell = *asset.image;
      if (is_overlay(s, asset, overlay_symbols) && cell.has_transparency()) {
        std::map<Symbol, int> counts;
        for (Cell d : {Cell{-1, 0}, Cell{1, 0}, Cell{0, -1}, Cell{0, 1}}) {
          const Cell n{r + d.row, c + d.col};
          if (!world.in_bounds(n)) continue;
          const Symbol ns = world.at(n);
          if (!is_overlay(ns, assignment.at(ns), overlay_symbols)) ++counts[ns];
        }
        std::optional<Symbol> backdrop = global_backdrop;
        int best = 0;
        for (const auto& [ns, n] : counts) {
          if (n > best) {
            best = n;
            backdrop = ns;
          }
        }
        if (backdrop) cell = composite_over(*assignment.at(*backdrop).image, cell);
      }
      for (int y = 0; y < tile; ++y) {
        for (int x = 0; x < tile; ++x) out.set(c * tile + x, r * tile + y, cell.at(x, y));
      }
    }
  }
  return out;
}

TileDataset generate_placeholder_tileset(const std::vector<PlaceholderSpec>& spec, TileCategory category,
                                         const std::string& out_dir, const std::string& csv_name, int first_id) {
  if (spec.empty()) throw PreconditionError("placeholder tileset spec is empty");
  const std::string prefix = category == TileCategory::Character ? "char" : "env";
  constexpr int n = kPlaceholderTileSize;
  TileDataset ds;
  ds.category = category;
  std::string csv = "id,image_path,description,category\n";
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& row = spec[i];
    const Rgba fill{row.color.r, row.color.g, row.color.b, 255};
    const Rgba edge{static_cast<std::uint8_t>(row.color.r * 3 / 5), static_cast<std::uint8_t>(row.color.g * 3 / 5),
                    static_cast<std::uint8_t>(row.color.b * 3 / 5), 255};
    // Environment tiles fill the whole cell; character figures sit inset.
    const int lo = category == TileCategory::Character ? 3 : 0;
    const int hi = n - 1 - lo;
    Image img(n, n, {0, 0, 0, 0});
    for (int y = lo; y <= hi; ++y) {
      for (int x = lo; x <= hi; ++x) img.set(x, y, (x == lo || x == hi || y == lo || y == hi) ? edge : fill);
    }
    TileAsset a;
    a.id = first_id + static_cast<int>(i);
    a.image_path = prefix + "_" + std::to_string(a.id) + ".png";
    a.description = row.description;
    a.category = category;
    write_png(img, (std::filesystem::path(out_dir) / a.image_path).string());
    a.image = std::make_shared<const Image>(std::move(img));
    csv += std::to_string(a.id) + "," + csv_escape(a.image_path) + "," + csv_escape(a.description) + "," +
           category_name(category) + "\n";
    ds.assets.push_back(std::move(a));
  }
  write_file((std::filesystem::path(out_dir) / csv_name).string(), csv);
  return ds;
}

PlaceholderSpecFile load_placeholder_spec(const std::string& path) {
  PlaceholderSpecFile out;
  try {
    const auto j = Json::parse(read_file(path));
    auto rows = [](const Json& arr) {
      std::vector<PlaceholderSpec> v;
      for (const auto& r : arr) {
        const auto rgb = r.at("color").get<std::vector<int>>();
        if (rgb.size() != 3) throw DatasetError("placeholder color must be [r,g,b]");
        for (int c : rgb) {
          if (c < 0 || c > 255) throw DatasetError("placeholder color component out of range");
        }
        v.push_back({r.at("description").get<std::string>(),
                     {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                      static_cast<std::uint8_t>(rgb[2]), 255}});
      }
      return v;
    };
    out.environment = rows(j.at("environment"));
    out.character = rows(j.at("character"));
  } catch (const Json::exception& e) {
    throw DatasetError("malformed placeholder spec '" + path + "': " + e.what());
  }
  return out;
}

std::pair<TileDataset, TileDataset> write_placeholder_assets(const PlaceholderSpecFile& spec,
                                                             const std::string& out_dir) {
  auto env = generate_placeholder_tileset(spec.environment, TileCategory::Environment, out_dir, "environment.csv");
  auto chars = generate_placeholder_tileset(spec.character, TileCategory::Character, out_dir, "characters.csv",
                                            kPlaceholderCharacterFirstId);
  return {std::move(env), std::move(chars)};
}

}  // namespace w2w
