#pragma once

// GeoJSON annotation ingest, crown grouping, and score / region / report
// export. Coordinates are plot-local meters; a "crs" member is carried
// through untouched.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "randcrowns/error.hpp"
#include "randcrowns/experiments.hpp"
#include "randcrowns/geometry.hpp"
#include "randcrowns/matching.hpp"
#include "randcrowns/metrics.hpp"
#include "randcrowns/regions.hpp"

namespace randcrowns {

using ojson = nlohmann::ordered_json;

struct AnnotatedShape {
  Shape shape;
  std::string annotator_id;
  std::string plot_id;
  std::optional<std::string> crown_id;
  std::optional<std::string> role;  // "target" or "delineation"
  std::optional<std::string> feature_id;
  std::size_t index = 0;  // position in the source collection

  /// Stable identifier: crown_id, else the feature id, else "#<index>".
  std::string label() const {
    if (crown_id) return *crown_id;
    if (feature_id) return *feature_id;
    return "#" + std::to_string(index);
  }
};

struct AnnotationFile {
  std::vector<AnnotatedShape> features;
  nlohmann::json crs;  // null when absent
};

// ---------------------------------------------------------------- helpers

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline nlohmann::json parse_json_text(std::string_view text, std::string_view source) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline std::optional<std::string> property_string(const nlohmann::json& props, const char* key) {
  if (!props.is_object() || !props.contains(key)) return std::nullopt;
  const auto& v = props.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_double(v.get<double>());
  return std::nullopt;
}

inline std::vector<Point> parse_ring(const nlohmann::json& ring) {
  if (!ring.is_array() || ring.size() < 4) throw InvalidArgument("ring must be an array of at least 4 positions");
  std::vector<Point> pts;
  for (const auto& pos : ring) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw InvalidArgument("ring position must be [x, y]");
    }
    pts.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  if (!(pts.front() == pts.back())) throw InvalidArgument("ring is not closed");
  pts.pop_back();
  return pts;
}

// A closed ring of four corners with axis-parallel edges is a box.
inline std::optional<RectShape> as_box(const std::vector<Point>& ring) {
  if (ring.size() != 4) return std::nullopt;
  for (std::size_t k = 0; k < 4; ++k) {
    const Point& p = ring[k];
    const Point& q = ring[(k + 1) % 4];
    if (p.x != q.x && p.y != q.y) return std::nullopt;
  }
  std::set<double> xs, ys;
  for (const Point& p : ring) {
    xs.insert(p.x);
    ys.insert(p.y);
  }
  if (xs.size() != 2 || ys.size() != 2) return std::nullopt;
  return RectShape::from_bounds(*xs.begin(), *ys.begin(), *xs.rbegin(), *ys.rbegin());
}

inline Shape parse_geometry(const nlohmann::json& geom) {
  if (!geom.is_object() || geom.value("type", "") != "Polygon") throw InvalidArgument("geometry must be a Polygon");
  const auto& coords = geom.at("coordinates");
  if (!coords.is_array() || coords.empty()) throw InvalidArgument("polygon needs an exterior ring");
  PolyShape poly;
  poly.exterior = parse_ring(coords[0]);
  for (std::size_t r = 1; r < coords.size(); ++r) poly.holes.push_back(parse_ring(coords[r]));
  Shape shape = poly;
  validate_shape(shape);
  if (poly.holes.empty()) {
    if (auto box = as_box(poly.exterior)) return *box;
  }
  return shape;
}

inline ojson ring_json(const std::vector<Point>& ring) {
  ojson out = ojson::array();
  for (const Point& p : ring) out.push_back({p.x, p.y});
  out.push_back({ring.front().x, ring.front().y});
  return out;
}

inline ojson geometry_json(const Shape& shape) {
  const PolyShape poly =
      std::holds_alternative<RectShape>(shape) ? to_polygon(std::get<RectShape>(shape)) : std::get<PolyShape>(shape);
  ojson coords = ojson::array();
  coords.push_back(ring_json(poly.exterior));
  for (const auto& hole : poly.holes) coords.push_back(ring_json(hole));
  return ojson{{"type", "Polygon"}, {"coordinates", coords}};
}

}  // namespace detail

// ---------------------------------------------------------- annotations

/// Parses and validates a GeoJSON FeatureCollection of annotations.
inline AnnotationFile parse_annotations(std::string_view text, std::string_view source = "<input>") {
  const nlohmann::json doc = detail::parse_json_text(text, source);
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc.at("features").is_array()) {
    throw ValidationError(std::string(source) + ": expected a GeoJSON FeatureCollection");
  }
  AnnotationFile file;
  if (doc.contains("crs")) file.crs = doc.at("crs");
  std::vector<std::size_t> missing_annotator;
  std::vector<std::string> bad_geometry;
  const auto& features = doc.at("features");
  for (std::size_t idx = 0; idx < features.size(); ++idx) {
    const auto& feat = features[idx];
    AnnotatedShape item;
    item.index = idx;
    const nlohmann::json props = feat.is_object() && feat.contains("properties") ? feat.at("properties") : nlohmann::json();
    try {
      if (!feat.is_object() || !feat.contains("geometry")) throw InvalidArgument("feature has no geometry");
      item.shape = detail::parse_geometry(feat.at("geometry"));
    } catch (const Error& e) {
      bad_geometry.push_back("feature " + std::to_string(idx) + ": " + e.what());
      continue;
    } catch (const nlohmann::json::exception& e) {
      bad_geometry.push_back("feature " + std::to_string(idx) + ": " + e.what());
      continue;
    }
    auto annotator = detail::property_string(props, "annotator_id");
    if (!annotator) {
      missing_annotator.push_back(idx);
      continue;
    }
    item.annotator_id = *annotator;
    item.plot_id = detail::property_string(props, "plot_id").value_or("");
    item.crown_id = detail::property_string(props, "crown_id");
    item.role = detail::property_string(props, "role");
    if (feat.contains("id")) {
      const auto& id = feat.at("id");
      item.feature_id = id.is_string() ? id.get<std::string>() : id.dump();
    }
    file.features.push_back(std::move(item));
  }
  if (!missing_annotator.empty() || !bad_geometry.empty()) {
    std::string msg = std::string(source) + ": invalid annotations";
    if (!missing_annotator.empty()) {
      msg += "; missing annotator_id in feature(s)";
      for (std::size_t k = 0; k < missing_annotator.size(); ++k) {
        msg += (k == 0 ? " " : ", ") + std::to_string(missing_annotator[k]);
      }
    }
    for (const auto& b : bad_geometry) msg += "; " + b;
    throw ValidationError(msg);
  }
  return file;
}

inline AnnotationFile load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_text_file(path), path.string());
}

inline ojson annotations_to_geojson(const AnnotationFile& file) {
  ojson doc;
  doc["type"] = "FeatureCollection";
  if (!file.crs.is_null()) doc["crs"] = ojson::parse(file.crs.dump());
  ojson features = ojson::array();
  for (const auto& f : file.features) {
    ojson feat;
    feat["type"] = "Feature";
    if (f.feature_id) feat["id"] = *f.feature_id;
    ojson props;
    props["annotator_id"] = f.annotator_id;
    props["plot_id"] = f.plot_id;
    if (f.crown_id) props["crown_id"] = *f.crown_id;
    if (f.role) props["role"] = *f.role;
    feat["properties"] = props;
    feat["geometry"] = detail::geometry_json(f.shape);
    features.push_back(std::move(feat));
  }
  doc["features"] = std::move(features);
  return doc;
}

inline void save_annotations(const AnnotationFile& file, const std::filesystem::path& path) {
  write_text_file(path, annotations_to_geojson(file).dump(1) + "\n");
}

inline AnnotationFile ensemble_to_annotations(const AnnotatorEnsemble& ens) {
  AnnotationFile file;
  for (const auto& crown : ens.crowns) {
    for (std::size_t a = 0; a < crown.shapes.size(); ++a) {
      AnnotatedShape s;
      s.shape = crown.shapes[a];
      s.annotator_id = ens.annotator_ids[a];
      s.plot_id = ens.plots[crown.plot].plot_id;
      s.crown_id = crown.crown_id;
      s.index = file.features.size();
      file.features.push_back(std::move(s));
    }
  }
  return file;
}

struct GroupingStats {
  std::size_t dropped_groups = 0;  // groups not labeled by every annotator
  std::size_t dropped_shapes = 0;  // shapes in those groups
};

namespace detail {

inline bool shape_less(const Shape& x, const Shape& y) {
  const Bounds a = bounds(x);
  const Bounds b = bounds(y);
  return std::tie(a.x_lo, a.y_lo, a.x_hi, a.y_hi) < std::tie(b.x_lo, b.y_lo, b.x_hi, b.y_hi);
}

}  // namespace detail

/// Groups annotations into crowns labeled by every annotator. Shapes sharing
/// (plot_id, crown_id) form a crown; when crown ids are absent, shapes of the
/// other annotators join the anchor annotator's shapes by greatest IoU, if at
/// least `tolerance`. Groups missing an annotator are dropped and counted.
inline AnnotatorEnsemble group_by_crown(const std::vector<AnnotationFile>& files, const PlotFrame& frame,
                                        double tolerance, GroupingStats* stats = nullptr) {
  std::vector<const AnnotatedShape*> all;
  for (const auto& f : files) {
    for (const auto& s : f.features) all.push_back(&s);
  }
  std::set<std::string> annotator_set, plot_set;
  for (const auto* s : all) {
    annotator_set.insert(s->annotator_id);
    plot_set.insert(s->plot_id);
  }
  if (annotator_set.size() < 2) throw ValidationError("grouping needs annotations from at least 2 annotators");
  const std::vector<std::string> annotators(annotator_set.begin(), annotator_set.end());
  std::map<std::string, std::size_t> annotator_index;
  for (std::size_t a = 0; a < annotators.size(); ++a) annotator_index[annotators[a]] = a;

  AnnotatorEnsemble ens;
  ens.annotator_ids = annotators;
  std::map<std::string, std::size_t> plot_index;
  for (const auto& p : plot_set) {
    plot_index[p] = ens.plots.size();
    ens.plots.push_back({p, frame});
  }
  GroupingStats local;
  const bool by_id = std::all_of(all.begin(), all.end(), [](const AnnotatedShape* s) { return s->crown_id.has_value(); });

  if (by_id) {
    std::map<std::pair<std::string, std::string>, std::vector<const AnnotatedShape*>> groups;
    for (const auto* s : all) groups[{s->plot_id, *s->crown_id}].push_back(s);
    for (const auto& [key, members] : groups) {
      std::vector<const AnnotatedShape*> slot(annotators.size(), nullptr);
      for (const auto* s : members) {
        auto& dst = slot[annotator_index.at(s->annotator_id)];
        if (dst) {
          throw ValidationError("annotator '" + s->annotator_id + "' labels crown '" + key.second + "' in plot '" +
                                key.first + "' more than once");
        }
        dst = s;
      }
      if (std::any_of(slot.begin(), slot.end(), [](const AnnotatedShape* s) { return s == nullptr; })) {
        ++local.dropped_groups;
        local.dropped_shapes += members.size();
        continue;
      }
      CrownGroup g;
      g.crown_id = key.first.empty() ? key.second : key.first + "/" + key.second;
      g.plot = plot_index.at(key.first);
      for (const auto* s : slot) g.shapes.push_back(s->shape);
      ens.crowns.push_back(std::move(g));
    }
  } else {
    for (const auto& plot_id : plot_set) {
      // Per annotator, shapes in canonical geometric order.
      std::vector<std::vector<const AnnotatedShape*>> by_annotator(annotators.size());
      for (const auto* s : all) {
        if (s->plot_id == plot_id) by_annotator[annotator_index.at(s->annotator_id)].push_back(s);
      }
      std::vector<std::vector<Region>> rasters(annotators.size());
      for (std::size_t a = 0; a < annotators.size(); ++a) {
        auto& list = by_annotator[a];
        std::sort(list.begin(), list.end(),
                  [](const AnnotatedShape* x, const AnnotatedShape* y) { return detail::shape_less(x->shape, y->shape); });
        for (const auto* s : list) rasters[a].push_back(rasterize(s->shape, frame));
      }
      std::vector<std::vector<bool>> used(annotators.size());
      for (std::size_t a = 0; a < annotators.size(); ++a) used[a].assign(by_annotator[a].size(), false);
      std::size_t crown_no = 0;
      for (std::size_t anchor = 0; anchor < by_annotator[0].size(); ++anchor) {
        used[0][anchor] = true;
        std::vector<const AnnotatedShape*> slot(annotators.size(), nullptr);
        slot[0] = by_annotator[0][anchor];
        std::size_t members = 1;
        for (std::size_t a = 1; a < annotators.size(); ++a) {
          double best = -1.0;
          std::size_t pick = 0;
          for (std::size_t k = 0; k < by_annotator[a].size(); ++k) {
            if (used[a][k]) continue;
            if (rasters[0][anchor].empty() && rasters[a][k].empty()) continue;
            const double v = iou(rasters[a][k], rasters[0][anchor]);
            if (v > best) {
              best = v;
              pick = k;
            }
          }
          if (best >= tolerance && best > 0.0) {
            used[a][pick] = true;
            slot[a] = by_annotator[a][pick];
            ++members;
          }
        }
        if (members < annotators.size()) {
          ++local.dropped_groups;
          local.dropped_shapes += members;
          continue;
        }
        CrownGroup g;
        ++crown_no;
        g.crown_id = (plot_id.empty() ? std::string() : plot_id + "/") + "crown" + std::to_string(crown_no);
        g.plot = plot_index.at(plot_id);
        for (const auto* s : slot) g.shapes.push_back(s->shape);
        ens.crowns.push_back(std::move(g));
      }
      for (std::size_t a = 1; a < annotators.size(); ++a) {
        const auto n = static_cast<std::size_t>(std::count(used[a].begin(), used[a].end(), false));
        if (n > 0) {
          local.dropped_groups += n;
          local.dropped_shapes += n;
        }
      }
    }
  }
  if (stats) *stats = local;
  if (ens.crowns.empty()) throw ValidationError("no crown is labeled by every annotator");
  return ens;
}

// --------------------------------------------------------------- scores

struct ScoreRow {
  std::string plot_id;
  std::string crown_id;
  std::string annotator_target;
  std::string annotator_delin;
  ScoreRecord record;
  bool clipped = false;

  bool operator==(const ScoreRow&) const = default;
};

inline constexpr std::string_view kScoreCsvHeader =
    "plot_id,crown_id,annotator_target,annotator_delin,a,b,c,d,rc,iou,iou_crowns,flags";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string row_flags(const ScoreRow& r) {
  std::string flags;
  if (r.record.degenerate) flags = "degenerate";
  if (r.clipped) flags += flags.empty() ? "clipped" : ";clipped";
  return flags;
}

}  // namespace detail

inline std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
  std::string out(kScoreCsvHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += detail::csv_field(r.plot_id) + "," + detail::csv_field(r.crown_id) + "," +
           detail::csv_field(r.annotator_target) + "," + detail::csv_field(r.annotator_delin) + "," +
           std::to_string(r.record.a) + "," + std::to_string(r.record.b) + "," + std::to_string(r.record.c) + "," +
           std::to_string(r.record.d) + "," + format_double(r.record.rand_crowns) + "," +
           format_double(r.record.iou) + "," + format_double(r.record.iou_crowns) + "," + detail::row_flags(r) + "\n";
  }
  return out;
}

inline const char* to_string(PenaltyMode m) {
  return m == PenaltyMode::min_of_ties ? "min_of_ties" : "mean_divided_by_count";
}
inline const char* to_string(MatchStrategy s) { return s == MatchStrategy::max_iou ? "max_iou" : "nearest_center"; }
inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::iou: return "iou";
    case Metric::iou_crowns: return "iou_crowns";
    case Metric::rand_crowns: break;
  }
  return "rand_crowns";
}

inline ojson global_score_json(const GlobalScore& g) {
  ojson per = ojson::array();
  for (const auto& t : g.per_target) per.push_back({{"target_id", t.target_id}, {"score", t.score}, {"n_assigned", t.n_assigned}});
  return ojson{{"mean", g.mean}, {"std_dev", g.std_dev}, {"penalty_mode", to_string(g.penalty_mode)}, {"per_target", per}};
}

inline ojson scores_to_json(const std::vector<ScoreRow>& rows, const std::optional<GlobalScore>& global) {
  ojson records = ojson::array();
  for (const auto& r : rows) {
    records.push_back({{"plot_id", r.plot_id},
                       {"crown_id", r.crown_id},
                       {"annotator_target", r.annotator_target},
                       {"annotator_delin", r.annotator_delin},
                       {"a", r.record.a},
                       {"b", r.record.b},
                       {"c", r.record.c},
                       {"d", r.record.d},
                       {"rc", r.record.rand_crowns},
                       {"iou", r.record.iou},
                       {"iou_crowns", r.record.iou_crowns},
                       {"degenerate", r.record.degenerate},
                       {"clipped", r.clipped}});
  }
  return ojson{{"records", records}, {"global", global ? global_score_json(*global) : ojson(nullptr)}};
}

enum class ScoreFormat { csv, json };

/// Writes score rows (and the global score in json mode) to `path`.
inline void export_scores(const std::vector<ScoreRow>& rows, const std::optional<GlobalScore>& global,
                          const std::filesystem::path& path, ScoreFormat format) {
  if (format == ScoreFormat::csv) {
    write_text_file(path, scores_to_csv(rows));
  } else {
    write_text_file(path, scores_to_json(rows, global).dump(1) + "\n");
  }
}

struct ScoreDocument {
  std::vector<ScoreRow> rows;
  std::optional<GlobalScore> global;
};

inline ScoreDocument read_scores_json(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const nlohmann::json doc = detail::parse_json_text(text, path.string());
  ScoreDocument out;
  try {
    for (const auto& r : doc.at("records")) {
      ScoreRow row;
      row.plot_id = r.at("plot_id").get<std::string>();
      row.crown_id = r.at("crown_id").get<std::string>();
      row.annotator_target = r.at("annotator_target").get<std::string>();
      row.annotator_delin = r.at("annotator_delin").get<std::string>();
      row.record.a = r.at("a").get<std::uint64_t>();
      row.record.b = r.at("b").get<std::uint64_t>();
      row.record.c = r.at("c").get<std::uint64_t>();
      row.record.d = r.at("d").get<std::uint64_t>();
      row.record.rand_crowns = r.at("rc").get<double>();
      row.record.iou = r.at("iou").get<double>();
      row.record.iou_crowns = r.at("iou_crowns").get<double>();
      row.record.degenerate = r.at("degenerate").get<bool>();
      row.clipped = r.at("clipped").get<bool>();
      out.rows.push_back(std::move(row));
    }
    const auto& g = doc.at("global");
    if (!g.is_null()) {
      GlobalScore gs;
      gs.mean = g.at("mean").get<double>();
      gs.std_dev = g.at("std_dev").get<double>();
      gs.penalty_mode = g.at("penalty_mode").get<std::string>() == "min_of_ties" ? PenaltyMode::min_of_ties
                                                                               : PenaltyMode::mean_divided_by_count;
      for (const auto& t : g.at("per_target")) {
        gs.per_target.push_back(
            {t.at("target_id").get<std::string>(), t.at("score").get<double>(), t.at("n_assigned").get<std::size_t>()});
      }
      out.global = std::move(gs);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

// -------------------------------------------------------------- regions

namespace detail {

// One rectangle per horizontal run of member cells; re-rasterizing the runs
// reproduces the region exactly.
inline ojson region_multipolygon(const Region& r) {
  const PlotFrame& f = r.frame();
  ojson polys = ojson::array();
  for (int j = 0; j < f.height(); ++j) {
    int i = 0;
    while (i < f.width()) {
      if (!r.contains(i, j)) {
        ++i;
        continue;
      }
      const int start = i;
      while (i < f.width() && r.contains(i, j)) ++i;
      const double x0 = f.x_min() + start * f.resolution();
      const double x1 = f.x_min() + i * f.resolution();
      const double y0 = f.y_min() + j * f.resolution();
      const double y1 = f.y_min() + (j + 1) * f.resolution();
      polys.push_back(ojson::array({ojson::array({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}})}));
    }
  }
  return ojson{{"type", "MultiPolygon"}, {"coordinates", polys}};
}

}  // namespace detail

struct NamedRegionSet {
  std::string target_id;
  RegionSet regions;
};

inline ojson regions_to_geojson(const std::vector<NamedRegionSet>& sets) {
  ojson features = ojson::array();
  for (const auto& s : sets) {
    const std::pair<const char*, const Region*> roles[] = {
        {"r_a", &s.regions.r_a}, {"r_o", &s.regions.r_o}, {"r_e", &s.regions.r_e}, {"r_b", &s.regions.r_b}};
    for (const auto& [role, region] : roles) {
      ojson feat;
      feat["type"] = "Feature";
      feat["properties"] = ojson{{"target_id", s.target_id},
                                 {"role", role},
                                 {"pixel_count", region->pixel_count()},
                                 {"epsilon_m", s.regions.epsilon},
                                 {"tau_m", s.regions.tau},
                                 {"achieved_ratio", s.regions.achieved_ratio},
                                 {"clipped", s.regions.clipped}};
      feat["geometry"] = detail::region_multipolygon(*region);
      features.push_back(std::move(feat));
    }
  }
  return ojson{{"type", "FeatureCollection"}, {"features", features}};
}

inline void export_regions(const std::vector<NamedRegionSet>& sets, const std::filesystem::path& path) {
  write_text_file(path, regions_to_geojson(sets).dump() + "\n");
}

struct ImportedRegion {
  std::string target_id;
  std::string role;
  Region region;
};

/// Reads a region dump back onto `frame`.
inline std::vector<ImportedRegion> load_regions(const std::filesystem::path& path, const PlotFrame& frame) {
  const std::string text = read_text_file(path);
  const nlohmann::json doc = detail::parse_json_text(text, path.string());
  std::vector<ImportedRegion> out;
  try {
    for (const auto& feat : doc.at("features")) {
      ImportedRegion item{feat.at("properties").at("target_id").get<std::string>(),
                          feat.at("properties").at("role").get<std::string>(), Region(frame)};
      for (const auto& poly : feat.at("geometry").at("coordinates")) {
        const auto& ring = poly.at(0);
        double x_lo = ring[0][0], y_lo = ring[0][1], x_hi = x_lo, y_hi = y_lo;
        for (const auto& p : ring) {
          x_lo = std::min(x_lo, p[0].get<double>());
          x_hi = std::max(x_hi, p[0].get<double>());
          y_lo = std::min(y_lo, p[1].get<double>());
          y_hi = std::max(y_hi, p[1].get<double>());
        }
        item.region |= rasterize(RectShape::from_bounds(x_lo, y_lo, x_hi, y_hi), frame);
      }
      out.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

// -------------------------------------------------------------- reports

inline ojson match_result_json(const MatchResult& m) {
  ojson pairs = ojson::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"target_id", p.target_id}, {"delineation_id", p.delineation_id}, {"pairing_score", p.pairing_score}});
  }
  ojson unmatched_d = ojson::array();
  for (const auto& u : m.unmatched_delineations) {
    unmatched_d.push_back({{"delineation_id", u.delineation_id}, {"nearest_target_id", u.nearest_target_id}});
  }
  return ojson{{"strategy", to_string(m.strategy)},
               {"pairs", pairs},
               {"unmatched_targets", m.unmatched_targets},
               {"unmatched_delineations", unmatched_d}};
}

inline ojson variance_report_json(const VarianceReport& r) {
  ojson per = ojson::array();
  for (const auto& c : r.per_crown) {
    per.push_back({{"crown_id", c.crown_id}, {"target_annotator", c.target_annotator}, {"mean", c.mean}, {"variance", c.variance}});
  }
  return ojson{{"metric", to_string(r.metric)},
               {"avg_variance", std::isnan(r.avg_variance) ? ojson(nullptr) : ojson(r.avg_variance)},
               {"K", r.K},
               {"Z", r.Z},
               {"n_skipped", r.n_skipped},
               {"n_clipped", r.n_clipped},
               {"per_crown", per}};
}

inline ojson cross_validation_json(const CrossValidation& cv, const RcParams& params) {
  return ojson{{"params",
                {{"alpha_m", params.alpha_m},
                 {"omega_m", params.omega_m},
                 {"gamma", params.gamma},
                 {"delta_m", params.delta_m},
                 {"ratio_tol", params.ratio_tol}}},
               {"reports",
                ojson::array({variance_report_json(cv.rand_crowns), variance_report_json(cv.iou),
                              variance_report_json(cv.iou_crowns)})}};
}

inline constexpr std::string_view kSweepCsvHeader = "alpha_m,omega_m,gamma,var_rc,var_iou,var_iouc,n_skipped,n_clipped";

inline std::string sweep_to_csv(const std::vector<SweepRecord>& records) {
  std::string out(kSweepCsvHeader);
  out += "\n";
  for (const auto& r : records) {
    out += format_double(r.params.alpha_m) + "," + format_double(r.params.omega_m) + "," +
           format_double(r.params.gamma) + "," + format_double(r.var_rc) + "," + format_double(r.var_iou) + "," +
           format_double(r.var_iouc) + "," + std::to_string(r.n_skipped) + "," + std::to_string(r.n_clipped) + "\n";
  }
  return out;
}

}  // namespace randcrowns
