#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or validation
// error, 2 I/O error.

#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "randcrowns/annotations_io.hpp"
#include "randcrowns/config.hpp"
#include "randcrowns/error.hpp"
#include "randcrowns/experiments.hpp"
#include "randcrowns/matching.hpp"
#include "randcrowns/metrics.hpp"
#include "randcrowns/regions.hpp"

namespace randcrowns::cli {

namespace detail {

struct Overrides {
  std::string config_path;
  std::optional<double> alpha, omega, gamma, delta, ratio_tol, resolution, iou_tolerance;
  std::vector<double> frame_extent;
  std::optional<std::string> edge_seed, metric, strategy, penalty;
  std::optional<std::uint64_t> seed;
  std::vector<double> sweep_alpha, sweep_omega, sweep_gamma;
  unsigned jobs = 1;
  bool verbose = false;
  std::string out;
  std::string format;
};

inline void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "TOML or JSON run configuration (flags override it)");
  cmd->add_option("--alpha", o.alpha, "true positive inset in meters");
  cmd->add_option("--omega", o.omega, "outer annulus width in meters");
  cmd->add_option("--gamma", o.gamma, "true negative to true positive area ratio");
  cmd->add_option("--delta", o.delta, "edge search step in meters (default: resolution)");
  cmd->add_option("--ratio-tol", o.ratio_tol, "edge search ratio tolerance (default: 0.05 * gamma)");
  cmd->add_option("--edge-seed", o.edge_seed, "edge search start: twice_gamma_omega | closed_form_tau");
  cmd->add_option("--resolution", o.resolution, "frame resolution in meters per cell");
  cmd->add_option("--frame", o.frame_extent, "frame extent: x_min y_min x_max y_max")->expected(4);
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--verbose", o.verbose, "per-crown skip and clip notes on stderr");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
}

inline void add_metric(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--metric", o.metric, "rand_crowns | iou | iou_crowns");
}

inline void add_matching(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--strategy", o.strategy, "max_iou | nearest_center");
  cmd->add_option("--penalty", o.penalty, "min_of_ties | mean_divided_by_count");
}

inline void add_grouping(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--iou-tolerance", o.iou_tolerance, "minimum IoU when grouping annotations without crown ids");
}

inline void add_sweep(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--sweep-alpha", o.sweep_alpha, "alpha range: low step high")->expected(3);
  cmd->add_option("--sweep-omega", o.sweep_omega, "omega range: low step high")->expected(3);
  cmd->add_option("--sweep-gamma", o.sweep_gamma, "gamma range: low step high")->expected(3);
}

inline RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (!o.frame_extent.empty() || o.resolution) {
    const PlotFrame& f = cfg.frame;
    const double res = o.resolution.value_or(f.resolution());
    cfg.frame = o.frame_extent.empty()
                    ? PlotFrame(f.x_min(), f.y_min(), f.x_max(), f.y_max(), res)
                    : PlotFrame(o.frame_extent[0], o.frame_extent[1], o.frame_extent[2], o.frame_extent[3], res);
  }
  if (o.alpha) cfg.params.alpha_m = *o.alpha;
  if (o.omega) cfg.params.omega_m = *o.omega;
  if (o.gamma) cfg.params.gamma = *o.gamma;
  if (o.delta) {
    cfg.params.delta_m = *o.delta;
    cfg.delta_given = true;
  }
  if (o.ratio_tol) {
    cfg.params.ratio_tol = *o.ratio_tol;
    cfg.ratio_tol_given = true;
  }
  if (o.edge_seed) cfg.edge_seed = parse_edge_seed(*o.edge_seed);
  if (o.metric) cfg.metric = parse_metric(*o.metric);
  if (o.strategy) cfg.strategy = parse_strategy(*o.strategy);
  if (o.penalty) cfg.penalty = parse_penalty(*o.penalty);
  if (o.iou_tolerance) cfg.iou_tolerance = *o.iou_tolerance;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.sweep_alpha.empty()) cfg.grid.alpha = {o.sweep_alpha[0], o.sweep_alpha[1], o.sweep_alpha[2]};
  if (!o.sweep_omega.empty()) cfg.grid.omega = {o.sweep_omega[0], o.sweep_omega[1], o.sweep_omega[2]};
  if (!o.sweep_gamma.empty()) cfg.grid.gamma = {o.sweep_gamma[0], o.sweep_gamma[1], o.sweep_gamma[2]};
  cfg.derive_defaults();
  cfg.validate();
  return cfg;
}

inline void emit(const Overrides& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
  } else {
    write_text_file(o.out, text);
  }
}

// Labels are qualified with the annotator id when bare labels collide, as
// they do when one file carries several annotators' copies of each crown.
inline std::vector<std::string> candidate_ids(const std::vector<const AnnotatedShape*>& shapes) {
  std::vector<std::string> ids;
  for (const auto* s : shapes) ids.push_back(s->label());
  std::set<std::string> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) {
    for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = shapes[k]->annotator_id + ":" + ids[k];
  }
  return ids;
}

// Shapes of one file split by plot id, in file order.
inline std::map<std::string, std::vector<const AnnotatedShape*>> by_plot(const AnnotationFile& f) {
  std::map<std::string, std::vector<const AnnotatedShape*>> out;
  for (const auto& s : f.features) out[s.plot_id].push_back(&s);
  return out;
}

struct ScoredPlot {
  MatchResult match;
  PairScores scores;
  std::vector<ScoreRow> rows;
};

// Matches and scores one plot. Target region sets are built lazily and
// shared between the delineations that reach them.
inline ScoredPlot score_plot(const std::string& plot_id, const std::vector<const AnnotatedShape*>& targets,
                             const std::vector<const AnnotatedShape*>& delineations, const RunConfig& cfg) {
  const auto t_ids = candidate_ids(targets);
  const auto d_ids = candidate_ids(delineations);
  std::vector<Candidate> t_cands, d_cands;
  std::map<std::string, const AnnotatedShape*> t_by_id, d_by_id;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    t_cands.push_back({t_ids[k], targets[k]->shape});
    t_by_id[t_ids[k]] = targets[k];
  }
  for (std::size_t k = 0; k < delineations.size(); ++k) {
    d_cands.push_back({d_ids[k], delineations[k]->shape});
    d_by_id[d_ids[k]] = delineations[k];
  }
  std::map<std::string, RegionSet> sets;
  auto region_set = [&](const std::string& id) -> const RegionSet& {
    auto it = sets.find(id);
    if (it == sets.end()) {
      it = sets.emplace(id, build_region_set(t_by_id.at(id)->shape, cfg.frame, cfg.params, cfg.edge_seed)).first;
    }
    return it->second;
  };
  std::map<std::pair<std::string, std::string>, ScoreRecord> records;
  auto record = [&](const std::string& t_id, const std::string& d_id) -> const ScoreRecord& {
    auto it = records.find({t_id, d_id});
    if (it == records.end()) {
      const Region d = rasterize(d_by_id.at(d_id)->shape, cfg.frame);
      it = records.emplace(std::pair{t_id, d_id}, rand_crowns(d, region_set(t_id))).first;
    }
    return it->second;
  };

  ScoredPlot sp;
  if (cfg.strategy == MatchStrategy::max_iou) {
    sp.match = match_max_iou(d_cands, t_cands, cfg.frame);
  } else {
    sp.match = match_nearest_center(d_cands, t_cands, [&](const Candidate& t, const Candidate& d) {
      return metric_value(record(t.id, d.id), cfg.metric);
    });
  }
  for (const auto& p : sp.match.pairs) {
    const ScoreRecord& rec = record(p.target_id, p.delineation_id);
    sp.scores[{p.target_id, p.delineation_id}] = metric_value(rec, cfg.metric);
    const auto* t = t_by_id.at(p.target_id);
    const auto* d = d_by_id.at(p.delineation_id);
    sp.rows.push_back({plot_id, p.target_id, t->annotator_id, d->annotator_id, rec, region_set(p.target_id).clipped});
  }
  return sp;
}

struct Scored {
  std::vector<ScoreRow> rows;
  std::optional<GlobalScore> global;
  std::vector<std::pair<std::string, MatchResult>> matches;
};

// Matching and aggregation over every plot of the two files. Targets are
// prefixed with their plot id when several plots are present.
inline Scored score_files(const AnnotationFile& targets, const AnnotationFile& delineations, const RunConfig& cfg) {
  const auto t_plots = by_plot(targets);
  auto d_plots = by_plot(delineations);
  Scored out;
  MatchResult combined;
  combined.strategy = cfg.strategy;
  PairScores all_scores;
  const bool prefix = t_plots.size() > 1;
  auto key = [&](const std::string& plot, const std::string& id) { return prefix ? plot + "/" + id : id; };
  for (const auto& [plot_id, plot_targets] : t_plots) {
    ScoredPlot sp = score_plot(plot_id, plot_targets, d_plots[plot_id], cfg);
    for (auto& r : sp.rows) out.rows.push_back(std::move(r));
    for (const auto& p : sp.match.pairs) {
      combined.pairs.push_back({key(plot_id, p.target_id), key(plot_id, p.delineation_id), p.pairing_score});
      all_scores[{key(plot_id, p.target_id), key(plot_id, p.delineation_id)}] = sp.scores.at({p.target_id, p.delineation_id});
    }
    for (const auto& t : sp.match.unmatched_targets) combined.unmatched_targets.push_back(key(plot_id, t));
    for (const auto& u : sp.match.unmatched_delineations) {
      combined.unmatched_delineations.push_back({key(plot_id, u.delineation_id), key(plot_id, u.nearest_target_id)});
    }
    out.matches.emplace_back(plot_id, std::move(sp.match));
  }
  for (const auto& [plot_id, plot_delins] : d_plots) {
    if (t_plots.contains(plot_id)) continue;
    for (const auto& id : candidate_ids(plot_delins)) combined.unmatched_delineations.push_back({key(plot_id, id), ""});
  }
  if (!t_plots.empty()) out.global = aggregate(combined, all_scores, cfg.penalty);
  return out;
}

inline AnnotatorEnsemble load_ensemble(const std::vector<std::string>& paths, bool synth, const RunConfig& cfg,
                                       std::ostream& err, bool verbose) {
  if (synth) {
    if (!paths.empty()) throw InvalidArgument("--synth and --annotations are mutually exclusive");
    return synth_ensemble(cfg.synth);
  }
  if (paths.empty()) throw InvalidArgument("an ensemble needs --annotations files or --synth");
  std::vector<AnnotationFile> files;
  for (const auto& p : paths) files.push_back(load_annotations(p));
  GroupingStats stats;
  AnnotatorEnsemble ens = group_by_crown(files, cfg.frame, cfg.iou_tolerance, &stats);
  if (verbose || stats.dropped_groups > 0) {
    err << "grouping: " << ens.crowns.size() << " complete crowns, " << stats.dropped_groups
        << " incomplete groups dropped (" << stats.dropped_shapes << " shapes)\n";
  }
  return ens;
}

inline EvaluationOptions eval_options(const RunConfig& cfg, const Overrides& o, std::ostream& err) {
  EvaluationOptions opts;
  opts.seed = cfg.edge_seed;
  opts.jobs = o.jobs;
  opts.log = o.verbose ? &err : nullptr;
  return opts;
}

inline void check_format(const std::string& format, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (format == a) return;
  }
  throw InvalidArgument("unsupported --format '" + format + "'");
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RandCrowns evaluation of tree crown delineations", "randcrowns"};
  app.require_subcommand(1);
  detail::Overrides o;
  std::string targets_path, delineations_path;
  std::vector<std::string> annotation_paths;
  bool synth_input = false;

  auto* score = app.add_subcommand("score", "score delineations against targets");
  score->add_option("--targets", targets_path, "target annotations (GeoJSON)")->required();
  score->add_option("--delineations", delineations_path, "delineations to score (GeoJSON)")->required();
  score->add_option("--format", o.format, "csv | json (default: csv)");
  detail::add_common(score, o);
  detail::add_metric(score, o);
  detail::add_matching(score, o);

  auto* regions = app.add_subcommand("regions", "dump the evaluation regions of each target as GeoJSON");
  regions->add_option("--targets", targets_path, "target annotations (GeoJSON)")->required();
  detail::add_common(regions, o);

  auto* crossval = app.add_subcommand("crossval", "leave-one-annotator-out variance at one parameter point");
  crossval->add_option("--annotations", annotation_paths, "annotation files (GeoJSON)");
  crossval->add_flag("--synth", synth_input, "use the synthetic ensemble from the configuration");
  crossval->add_option("--format", o.format, "json | csv (default: json)");
  detail::add_common(crossval, o);
  detail::add_metric(crossval, o);
  detail::add_grouping(crossval, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "cross-validation over a parameter grid");
  sweep_cmd->add_option("--annotations", annotation_paths, "annotation files (GeoJSON)");
  sweep_cmd->add_flag("--synth", synth_input, "use the synthetic ensemble from the configuration");
  sweep_cmd->add_option("--format", o.format, "csv | json (default: csv)");
  detail::add_common(sweep_cmd, o);
  detail::add_grouping(sweep_cmd, o);
  detail::add_sweep(sweep_cmd, o);

  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic annotator ensemble as GeoJSON");
  detail::add_common(synth, o);

  auto* match = app.add_subcommand("match", "print the assignment of delineations to targets");
  match->add_option("--targets", targets_path, "target annotations (GeoJSON)")->required();
  match->add_option("--delineations", delineations_path, "delineations (GeoJSON)")->required();
  detail::add_common(match, o);
  detail::add_metric(match, o);
  detail::add_matching(match, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    const RunConfig cfg = detail::resolve(o);
    if (o.format.empty()) o.format = crossval->parsed() ? "json" : "csv";
    if (score->parsed()) {
      detail::check_format(o.format, {"csv", "json"});
      const AnnotationFile targets = load_annotations(targets_path);
      const auto scored = detail::score_files(targets, load_annotations(delineations_path), cfg);
      if (o.format == "csv") {
        detail::emit(o, out, scores_to_csv(scored.rows));
        if (scored.global && o.verbose) {
          err << "global " << to_string(cfg.metric) << ": mean " << format_double(scored.global->mean) << ", std "
              << format_double(scored.global->std_dev) << "\n";
        }
      } else {
        detail::emit(o, out, scores_to_json(scored.rows, scored.global).dump(1) + "\n");
      }
    } else if (regions->parsed()) {
      const AnnotationFile targets = load_annotations(targets_path);
      std::vector<NamedRegionSet> sets;
      for (const auto& t : targets.features) {
        const std::string id = t.plot_id.empty() ? t.label() : t.plot_id + "/" + t.label();
        RegionSet rs = build_region_set(t.shape, cfg.frame, cfg.params, cfg.edge_seed);
        if (o.verbose && rs.clipped) err << id << ": edge region clipped by the frame\n";
        sets.push_back({id, std::move(rs)});
      }
      detail::emit(o, out, regions_to_geojson(sets).dump() + "\n");
    } else if (crossval->parsed()) {
      detail::check_format(o.format, {"json", "csv"});
      const AnnotatorEnsemble ens = detail::load_ensemble(annotation_paths, synth_input, cfg, err, o.verbose);
      const auto opts = detail::eval_options(cfg, o, err);
      if (o.format == "json") {
        const CrossValidation cv = cross_validate_all(ens, cfg.params, opts);
        detail::emit(o, out, cross_validation_json(cv, cfg.params).dump(1) + "\n");
      } else {
        const std::array<RcParams, 1> pts{cfg.params};
        detail::emit(o, out, sweep_to_csv(sweep(ens, pts, opts)));
      }
    } else if (sweep_cmd->parsed()) {
      detail::check_format(o.format, {"csv", "json"});
      const AnnotatorEnsemble ens = detail::load_ensemble(annotation_paths, synth_input, cfg, err, o.verbose);
      const auto points = cfg.grid.points(cfg.frame.resolution(), cfg.delta_given ? std::optional(cfg.params.delta_m) : std::nullopt,
                                          cfg.ratio_tol_given ? std::optional(cfg.params.ratio_tol) : std::nullopt);
      const auto records = sweep(ens, points, detail::eval_options(cfg, o, err));
      if (o.format == "csv") {
        detail::emit(o, out, sweep_to_csv(records));
      } else {
        ojson rows = ojson::array();
        for (const auto& r : records) {
          rows.push_back({{"alpha_m", r.params.alpha_m},
                          {"omega_m", r.params.omega_m},
                          {"gamma", r.params.gamma},
                          {"var_rc", std::isnan(r.var_rc) ? ojson(nullptr) : ojson(r.var_rc)},
                          {"var_iou", std::isnan(r.var_iou) ? ojson(nullptr) : ojson(r.var_iou)},
                          {"var_iouc", std::isnan(r.var_iouc) ? ojson(nullptr) : ojson(r.var_iouc)},
                          {"n_skipped", r.n_skipped},
                          {"n_clipped", r.n_clipped}});
        }
        detail::emit(o, out, rows.dump(1) + "\n");
      }
    } else if (synth->parsed()) {
      detail::emit(o, out, annotations_to_geojson(ensemble_to_annotations(synth_ensemble(cfg.synth))).dump(1) + "\n");
    } else if (match->parsed()) {
      const AnnotationFile targets = load_annotations(targets_path);
      const auto scored = detail::score_files(targets, load_annotations(delineations_path), cfg);
      ojson doc = ojson::object();
      for (const auto& [plot_id, m] : scored.matches) doc[plot_id] = match_result_json(m);
      detail::emit(o, out, doc.dump(1) + "\n");
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace randcrowns::cli
