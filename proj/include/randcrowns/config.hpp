#pragma once

// Run configuration from TOML or JSON. TOML documents are converted to JSON
// first so both formats share one reader. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>
#include <toml.hpp>

#include "randcrowns/annotations_io.hpp"
#include "randcrowns/error.hpp"
#include "randcrowns/experiments.hpp"
#include "randcrowns/geometry.hpp"
#include "randcrowns/matching.hpp"
#include "randcrowns/regions.hpp"

namespace randcrowns {

struct RunConfig {
  PlotFrame frame{0.0, 0.0, 40.0, 40.0, 0.1};
  RcParams params = RcParams::make(0.7, 1.2, 3.0, 0.1);
  EdgeSeed edge_seed = EdgeSeed::twice_gamma_omega;
  Metric metric = Metric::rand_crowns;
  MatchStrategy strategy = MatchStrategy::max_iou;
  PenaltyMode penalty = PenaltyMode::min_of_ties;
  SweepGrid grid;
  double iou_tolerance = 0.3;
  SynthSpec synth;
  std::uint64_t seed = 0;
  bool delta_given = false;      // otherwise delta follows the frame resolution
  bool ratio_tol_given = false;  // otherwise 5% of gamma

  /// Fills the step and tolerance that were not given explicitly.
  void derive_defaults() {
    if (!delta_given) params.delta_m = frame.resolution();
    if (!ratio_tol_given) params.ratio_tol = 0.05 * params.gamma;
    synth.seed = seed;
  }

  void validate() const {
    params.validate();
    if (!(iou_tolerance >= 0.0 && iou_tolerance <= 1.0)) throw InvalidArgument("grouping.iou_tolerance must be in [0, 1]");
    for (const GridRange* r : {&grid.alpha, &grid.omega, &grid.gamma}) (void)r->values();
    if (synth.plots < 1 || synth.crowns_per_plot < 1 || synth.annotators < 1) {
      throw InvalidArgument("synth counts must be positive");
    }
  }
};

inline Metric parse_metric(std::string_view s) {
  if (s == "rand_crowns" || s == "rc") return Metric::rand_crowns;
  if (s == "iou") return Metric::iou;
  if (s == "iou_crowns" || s == "iouc") return Metric::iou_crowns;
  throw InvalidArgument("unknown metric '" + std::string(s) + "'");
}

inline MatchStrategy parse_strategy(std::string_view s) {
  if (s == "max_iou") return MatchStrategy::max_iou;
  if (s == "nearest_center") return MatchStrategy::nearest_center;
  throw InvalidArgument("unknown matching strategy '" + std::string(s) + "'");
}

inline PenaltyMode parse_penalty(std::string_view s) {
  if (s == "min_of_ties") return PenaltyMode::min_of_ties;
  if (s == "mean_divided_by_count") return PenaltyMode::mean_divided_by_count;
  throw InvalidArgument("unknown penalty mode '" + std::string(s) + "'");
}

inline EdgeSeed parse_edge_seed(std::string_view s) {
  if (s == "twice_gamma_omega") return EdgeSeed::twice_gamma_omega;
  if (s == "closed_form_tau") return EdgeSeed::closed_form_tau;
  throw InvalidArgument("unknown edge seed '" + std::string(s) + "'");
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  void read(const nlohmann::json& doc, RunConfig& cfg) {
    if (!doc.is_object()) fail("", "top level must be a table");
    check_keys(doc, "", {"frame", "params", "metric", "matching", "sweep", "grouping", "synth", "seed"});
    if (doc.contains("frame")) {
      const auto& f = table(doc, "frame");
      check_keys(f, "frame.", {"x_min", "y_min", "x_max", "y_max", "resolution_m"});
      const PlotFrame& d = cfg.frame;
      cfg.frame = PlotFrame(num(f, "frame.", "x_min", d.x_min()), num(f, "frame.", "y_min", d.y_min()),
                            num(f, "frame.", "x_max", d.x_max()), num(f, "frame.", "y_max", d.y_max()),
                            num(f, "frame.", "resolution_m", d.resolution()));
    }
    if (doc.contains("params")) {
      const auto& p = table(doc, "params");
      check_keys(p, "params.", {"alpha_m", "omega_m", "gamma", "delta_m", "ratio_tol", "edge_seed"});
      cfg.params.alpha_m = num(p, "params.", "alpha_m", cfg.params.alpha_m);
      cfg.params.omega_m = num(p, "params.", "omega_m", cfg.params.omega_m);
      cfg.params.gamma = num(p, "params.", "gamma", cfg.params.gamma);
      cfg.delta_given = p.contains("delta_m");
      cfg.ratio_tol_given = p.contains("ratio_tol");
      cfg.params.delta_m = num(p, "params.", "delta_m", cfg.params.delta_m);
      cfg.params.ratio_tol = num(p, "params.", "ratio_tol", cfg.params.ratio_tol);
      if (p.contains("edge_seed")) cfg.edge_seed = parse_edge_seed(str(p, "params.", "edge_seed"));
    }
    if (doc.contains("metric")) cfg.metric = parse_metric(str(doc, "", "metric"));
    if (doc.contains("matching")) {
      const auto& m = table(doc, "matching");
      check_keys(m, "matching.", {"strategy", "penalty"});
      if (m.contains("strategy")) cfg.strategy = parse_strategy(str(m, "matching.", "strategy"));
      if (m.contains("penalty")) cfg.penalty = parse_penalty(str(m, "matching.", "penalty"));
    }
    if (doc.contains("sweep")) {
      const auto& s = table(doc, "sweep");
      check_keys(s, "sweep.", {"alpha", "omega", "gamma"});
      if (s.contains("alpha")) cfg.grid.alpha = range(s, "alpha");
      if (s.contains("omega")) cfg.grid.omega = range(s, "omega");
      if (s.contains("gamma")) cfg.grid.gamma = range(s, "gamma");
    }
    if (doc.contains("grouping")) {
      const auto& g = table(doc, "grouping");
      check_keys(g, "grouping.", {"iou_tolerance"});
      cfg.iou_tolerance = num(g, "grouping.", "iou_tolerance", cfg.iou_tolerance);
    }
    if (doc.contains("synth")) {
      const auto& s = table(doc, "synth");
      check_keys(s, "synth.", {"plots", "crowns_per_plot", "annotators", "plot_size_m", "resolution_m", "crown_min_m",
                               "crown_max_m", "translation_m", "scale", "rotation_deg", "polygons", "retry_budget"});
      SynthSpec& sp = cfg.synth;
      sp.plots = integer(s, "synth.", "plots", sp.plots);
      sp.crowns_per_plot = integer(s, "synth.", "crowns_per_plot", sp.crowns_per_plot);
      sp.annotators = integer(s, "synth.", "annotators", sp.annotators);
      const double size = num(s, "synth.", "plot_size_m", sp.frame.x_max() - sp.frame.x_min());
      const double res = num(s, "synth.", "resolution_m", sp.frame.resolution());
      sp.frame = PlotFrame(0.0, 0.0, size, size, res);
      sp.crown_min_m = num(s, "synth.", "crown_min_m", sp.crown_min_m);
      sp.crown_max_m = num(s, "synth.", "crown_max_m", sp.crown_max_m);
      sp.translation_m = num(s, "synth.", "translation_m", sp.translation_m);
      sp.scale = num(s, "synth.", "scale", sp.scale);
      sp.rotation_deg = num(s, "synth.", "rotation_deg", sp.rotation_deg);
      if (s.contains("polygons")) {
        if (!s.at("polygons").is_boolean()) fail("synth.polygons", "expected a boolean");
        sp.polygons = s.at("polygons").get<bool>();
      }
      sp.retry_budget = integer(s, "synth.", "retry_budget", sp.retry_budget);
    }
    if (doc.contains("seed")) {
      const auto& v = doc.at("seed");
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        fail("seed", "expected a non-negative integer");
      }
      cfg.seed = v.get<std::uint64_t>();
    }
    cfg.derive_defaults();
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError(source_ + ": " + (key.empty() ? what : key + ": " + what));
  }

  void check_keys(const nlohmann::json& t, const std::string& prefix, std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, value] : t.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) fail(prefix + key, "unknown key");
    }
  }

  const nlohmann::json& table(const nlohmann::json& t, const std::string& key) const {
    const auto& v = t.at(key);
    if (!v.is_object()) fail(key, "expected a table");
    return v;
  }

  double num(const nlohmann::json& t, const std::string& prefix, const std::string& key, double fallback) const {
    if (!t.contains(key)) return fallback;
    const auto& v = t.at(key);
    if (!v.is_number()) fail(prefix + key, "expected a number");
    return v.get<double>();
  }

  int integer(const nlohmann::json& t, const std::string& prefix, const std::string& key, int fallback) const {
    if (!t.contains(key)) return fallback;
    const auto& v = t.at(key);
    if (!v.is_number_integer()) fail(prefix + key, "expected an integer");
    return v.get<int>();
  }

  std::string str(const nlohmann::json& t, const std::string& prefix, const std::string& key) const {
    const auto& v = t.at(key);
    if (!v.is_string()) fail(prefix + key, "expected a string");
    return v.get<std::string>();
  }

  GridRange range(const nlohmann::json& t, const std::string& key) const {
    const auto& v = t.at(key);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
      fail("sweep." + key, "expected [low, step, high]");
    }
    GridRange r{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    try {
      (void)r.values();
    } catch (const InvalidArgument& e) {
      fail("sweep." + key, e.what());
    }
    return r;
  }

  std::string source_;
};

inline nlohmann::json toml_to_json(std::string_view text, std::string_view source) {
  toml::table tbl;
  try {
    tbl = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& at = e.source().begin;
    throw ParseError(std::string(source) + ":" + std::to_string(at.line) + ":" + std::to_string(at.column) + ": " +
                     std::string(e.description()));
  }
  std::ostringstream ss;
  ss << toml::json_formatter{tbl};
  return nlohmann::json::parse(ss.str());
}

}  // namespace detail

/// Reads a config document. `toml` selects the syntax; JSON otherwise.
inline RunConfig parse_config(std::string_view text, bool toml, std::string_view source = "<config>") {
  const nlohmann::json doc = toml ? detail::toml_to_json(text, source) : detail::parse_json_text(text, source);
  RunConfig cfg;
  detail::ConfigReader(std::string(source)).read(doc, cfg);
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
  return cfg;
}

/// Loads a config file; ".json" files are JSON, everything else TOML.
inline RunConfig load_config(const std::filesystem::path& path) {
  const bool is_json = path.extension() == ".json";
  return parse_config(read_text_file(path), !is_json, path.string());
}

}  // namespace randcrowns
