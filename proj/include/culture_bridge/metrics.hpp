// Copyright 2026 The culture_bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CULTURE_BRIDGE__METRICS_HPP_
#define CULTURE_BRIDGE__METRICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "culture_bridge/csv.hpp"
#include "culture_bridge/error.hpp"
#include "culture_bridge/featurize.hpp"
#include "culture_bridge/rollout.hpp"
#include "culture_bridge/trajectory.hpp"

namespace culture_bridge
{

inline constexpr std::size_t kDensityGridPoints = 512;
inline constexpr std::size_t kLaneChangePersistence = 5;

// ---------------------------------------------------------------------------
// Densities

struct DensityProfile
{
  std::string variable;  // ax, ay, vx, vy or ttc
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

namespace detail
{

/// Linear-interpolated quantile over sorted values (q in [0, 1]).
inline double quantile_sorted(const std::vector<double> & sorted, double q)
{
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double kde_at(const std::vector<double> & values, double bw, double x)
{
  const double norm = 1.0 / (static_cast<double>(values.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
  double s = 0.0;
  for (const double v : values) {
    const double u = (x - v) / bw;
    s += std::exp(-0.5 * u * u);
  }
  return s * norm;
}

}  // namespace detail

/// Silverman bandwidth 0.9 min(sd, IQR/1.34) n^(-1/5); sd alone when the
/// IQR is zero.
inline double silverman_bandwidth(std::vector<double> sorted)
{
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double mean = 0.0;
  for (const double v : sorted) mean += v;
  mean /= n;
  double ss = 0.0;
  for (const double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian KDE on 512 points spanning [min - 3 bw, max + 3 bw].
inline DensityProfile density_estimate(const std::vector<double> & values, const std::string & variable)
{
  if (values.size() < 2 || std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    throw Error(ErrorCode::DegenerateSample, "density of '" + variable + "' needs two distinct values");
  }
  DensityProfile p;
  p.variable = variable;
  p.bandwidth = silverman_bandwidth(values);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn - 3.0 * p.bandwidth;
  const double hi = *mx + 3.0 * p.bandwidth;
  p.grid.resize(kDensityGridPoints);
  p.density.resize(kDensityGridPoints);
  for (std::size_t i = 0; i < kDensityGridPoints; ++i) {
    p.grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kDensityGridPoints - 1);
    p.density[i] = detail::kde_at(values, p.bandwidth, p.grid[i]);
  }
  return p;
}

/// Linear interpolation of q's density at x; zero outside q's grid.
inline double density_at(const DensityProfile & q, double x)
{
  if (q.grid.empty() || x < q.grid.front() || x > q.grid.back()) return 0.0;
  const auto it = std::lower_bound(q.grid.begin(), q.grid.end(), x);
  const auto i = static_cast<std::size_t>(it - q.grid.begin());
  if (q.grid[i] == x) return q.density[i];
  const double x0 = q.grid[i - 1], x1 = q.grid[i];
  const double f = (x - x0) / (x1 - x0);
  return q.density[i - 1] + f * (q.density[i] - q.density[i - 1]);
}

/// q resampled on p's grid.
inline DensityProfile align_to(const DensityProfile & p, const DensityProfile & q)
{
  DensityProfile out;
  out.variable = q.variable;
  out.grid = p.grid;
  out.bandwidth = q.bandwidth;
  out.density.reserve(p.grid.size());
  for (const double x : p.grid) out.density.push_back(density_at(q, x));
  return out;
}

/// Mean over p's grid of (p - q)^2.
inline double density_mse(const DensityProfile & p, const DensityProfile & q)
{
  if (p.variable != q.variable) {
    throw Error(ErrorCode::VariableMismatch, "'" + p.variable + "' vs '" + q.variable + "'");
  }
  if (p.grid.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    const double d = p.density[i] - density_at(q, p.grid[i]);
    s += d * d;
  }
  return s / static_cast<double>(p.grid.size());
}

/// Density RMSE in seconds: sqrt(density_mse) times the squared grid span.
inline double ttc_density_rmse(const DensityProfile & reference, const DensityProfile & candidate)
{
  if (reference.variable != "ttc" || candidate.variable != "ttc") {
    throw Error(ErrorCode::VariableMismatch, "TTC RMSE needs two 'ttc' profiles");
  }
  if (reference.grid.size() < 2) return 0.0;
  const double span = reference.grid.back() - reference.grid.front();
  return span * span * std::sqrt(density_mse(reference, candidate));
}

inline constexpr const char * kTtcRmseConvention =
  "span^2 * sqrt(mean over reference grid of (p - q)^2), span = reference grid max - min";

/// Trapezoidal integral of the density over its grid.
inline double density_mass(const DensityProfile & p)
{
  double m = 0.0;
  for (std::size_t i = 1; i < p.grid.size(); ++i) {
    m += 0.5 * (p.density[i] + p.density[i - 1]) * (p.grid[i] - p.grid[i - 1]);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Lane changes

/// True when the track leaves its settled lane for a lane it then holds for
/// at least kLaneChangePersistence consecutive frames. Short excursions,
/// including the return from one, do not count.
inline bool has_sustained_lane_change(const VehicleTrack & tr)
{
  const auto & f = tr.frames;
  if (f.empty()) return false;
  const int settled = f.front().lane_id;
  for (std::size_t k = 1; k < f.size();) {
    if (f[k].lane_id == settled) {
      ++k;
      continue;
    }
    std::size_t run = 0;
    while (k + run < f.size() && f[k + run].lane_id == f[k].lane_id) ++run;
    if (run >= kLaneChangePersistence) return true;
    k += run;
  }
  return false;
}

/// Share of the dataset's sample tracks with a sustained lane change.
inline double lane_change_frequency(const TrajectoryDataset & ds)
{
  const auto ids = ds.sample_ids();
  if (ids.empty()) throw Error(ErrorCode::EmptyDataset, "lane-change frequency of an empty dataset");
  std::size_t changed = 0;
  for (const auto id : ids) {
    const auto * tr = ds.find(id);
    if (!tr) throw Error(ErrorCode::UnknownVehicle, std::to_string(id));
    if (has_sustained_lane_change(*tr)) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(ids.size());
}

// ---------------------------------------------------------------------------
// Driving styles

enum class Style { Conservative, Moderate, Aggressive };

inline std::string_view to_string(Style s)
{
  constexpr std::array<std::string_view, 3> names = {"conservative", "moderate", "aggressive"};
  return names[static_cast<std::size_t>(s)];
}

struct TrackStyle
{
  VehicleId vehicle_id = 0;
  double mean_speed = 0.0;  // mean |v|, m/s
  double mean_accel = 0.0;  // mean |a|, m/s^2
  double score = 0.0;       // v^2/sigma_v^2 + a^2/sigma_a^2
  Style style = Style::Conservative;
};

struct StyleCentroid
{
  double mean_speed = 0.0;
  double mean_accel = 0.0;
  std::size_t count = 0;
};

struct StyleClassification
{
  std::vector<TrackStyle> tracks;  // ascending score, ties by id
  double lambda1 = 0.0;            // highest conservative score
  double lambda2 = 0.0;            // highest moderate score
  double sigma_v = 0.0;
  double sigma_a = 0.0;
  std::array<StyleCentroid, 3> centroids{};

  std::optional<Style> style_of(VehicleId id) const
  {
    for (const auto & t : tracks) {
      if (t.vehicle_id == id) return t.style;
    }
    return std::nullopt;
  }
};

/// Sizes of the three classes for n tracks; the first n % 3 classes get one extra.
inline std::array<std::size_t, 3> tertile_sizes(std::size_t n)
{
  std::array<std::size_t, 3> s{};
  for (std::size_t k = 0; k < 3; ++k) s[k] = n / 3 + (k < n % 3 ? 1 : 0);
  return s;
}

inline StyleClassification classify_styles(std::vector<TrackStyle> tracks)
{
  if (tracks.size() < 3) throw Error(ErrorCode::InsufficientTracks, std::to_string(tracks.size()) + " tracks");
  const auto n = static_cast<double>(tracks.size());
  const auto pop_sd = [&](auto get) {
    double mean = 0.0;
    for (const auto & t : tracks) mean += get(t);
    mean /= n;
    double ss = 0.0;
    for (const auto & t : tracks) ss += (get(t) - mean) * (get(t) - mean);
    return std::sqrt(ss / n);
  };
  StyleClassification c;
  c.sigma_v = pop_sd([](const TrackStyle & t) { return t.mean_speed; });
  c.sigma_a = pop_sd([](const TrackStyle & t) { return t.mean_accel; });
  if (!(c.sigma_v > 0.0) || !(c.sigma_a > 0.0)) throw Error(ErrorCode::ZeroVariance, "speed or acceleration spread is zero");
  for (auto & t : tracks) {
    const double v = t.mean_speed / c.sigma_v;
    const double a = t.mean_accel / c.sigma_a;
    t.score = v * v + a * a;
  }
  std::sort(tracks.begin(), tracks.end(), [](const TrackStyle & a, const TrackStyle & b) {
    return a.score != b.score ? a.score < b.score : a.vehicle_id < b.vehicle_id;
  });
  const auto sizes = tertile_sizes(tracks.size());
  std::size_t i = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    auto & cen = c.centroids[k];
    for (std::size_t j = 0; j < sizes[k]; ++j, ++i) {
      tracks[i].style = static_cast<Style>(k);
      cen.mean_speed += tracks[i].mean_speed;
      cen.mean_accel += tracks[i].mean_accel;
      ++cen.count;
    }
    cen.mean_speed /= static_cast<double>(cen.count);
    cen.mean_accel /= static_cast<double>(cen.count);
  }
  c.lambda1 = tracks[sizes[0] - 1].score;
  c.lambda2 = tracks[sizes[0] + sizes[1] - 1].score;
  c.tracks = std::move(tracks);
  return c;
}

/// Per-track mean speed and acceleration magnitudes.
inline TrackStyle style_features(const VehicleTrack & tr)
{
  TrackStyle t;
  t.vehicle_id = tr.vehicle_id;
  for (const auto & f : tr.frames) {
    t.mean_speed += std::hypot(f.vx, f.vy);
    t.mean_accel += std::hypot(f.ax, f.ay);
  }
  const auto n = static_cast<double>(std::max<std::size_t>(tr.frames.size(), 1));
  t.mean_speed /= n;
  t.mean_accel /= n;
  return t;
}

inline StyleClassification classify_styles(const TrajectoryDataset & ds)
{
  std::vector<TrackStyle> tracks;
  for (const auto id : ds.sample_ids()) {
    const auto * tr = ds.find(id);
    if (!tr) throw Error(ErrorCode::UnknownVehicle, std::to_string(id));
    tracks.push_back(style_features(*tr));
  }
  return classify_styles(std::move(tracks));
}

// ---------------------------------------------------------------------------
// Evaluation report

inline const std::array<std::string, 5> & density_variables()
{
  static const std::array<std::string, 5> v = {"ax", "ay", "vx", "vy", "ttc"};
  return v;
}

struct VariableComparison
{
  DensityProfile reference;
  DensityProfile candidate;  // on the reference grid
  double mse = 0.0;
  std::array<double, 5> reference_quartiles{};  // min, q1, median, q3, max
  std::array<double, 5> candidate_quartiles{};
};

struct EvaluationReport
{
  std::map<std::string, VariableComparison> variables;
  std::vector<std::string> skipped_variables;  // degenerate reference sample
  double lane_change_freq_reference = 0.0;
  double lane_change_freq_candidate = 0.0;
  std::optional<StyleClassification> styles_reference;
  std::optional<StyleClassification> styles_candidate;
  std::optional<double> ttc_rmse;
  std::vector<CaseReport> cases;
};

namespace detail
{

inline std::array<double, 5> five_numbers(std::vector<double> v)
{
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  return {v.front(), quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75), v.back()};
}

struct VariableSamples
{
  std::map<std::string, std::vector<double>> values;
};

/// Kinematic values of the listed tracks and their total TTC against the
/// recorded `scene`, the track itself excluded.
inline VariableSamples collect(const TrajectoryDataset & ds, const SceneIndex & scene, const std::vector<VehicleId> & ids)
{
  VariableSamples s;
  for (const auto id : ids) {
    const auto * tr = ds.find(id);
    if (!tr) continue;
    for (const auto & f : tr->frames) {
      s.values["ax"].push_back(f.ax);
      s.values["ay"].push_back(f.ay);
      s.values["vx"].push_back(f.vx);
      s.values["vy"].push_back(f.vy);
      if (const auto ttc = total_ttc(scene.neighbors(state_of(*tr, f), f.t))) s.values["ttc"].push_back(*ttc);
    }
  }
  return s;
}

/// KDE of `values` on `grid`; a constant sample borrows `fallback_bw`.
inline DensityProfile density_on_grid(const std::vector<double> & values, const std::string & variable,
                                      const std::vector<double> & grid, double fallback_bw)
{
  DensityProfile p;
  p.variable = variable;
  p.grid = grid;
  p.density.assign(grid.size(), 0.0);
  if (values.empty()) return p;
  const bool constant =
    values.size() < 2 || std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  p.bandwidth = constant ? fallback_bw : silverman_bandwidth(values);
  for (std::size_t i = 0; i < grid.size(); ++i) p.density[i] = kde_at(values, p.bandwidth, grid[i]);
  return p;
}

}  // namespace detail

/// Compares the tracks `ids` of `candidate` with the same tracks of
/// `reference`. TTC of both is measured against the reference scene.
inline EvaluationReport evaluate_datasets(const TrajectoryDataset & reference, const TrajectoryDataset & candidate,
                                          const std::vector<VehicleId> & ids)
{
  EvaluationReport rep;
  const SceneIndex scene(reference);
  const auto ref_s = detail::collect(reference, scene, ids);
  const auto cand_s = detail::collect(candidate, scene, ids);
  for (const auto & var : density_variables()) {
    const auto rit = ref_s.values.find(var);
    const std::vector<double> empty;
    const auto & rv = rit == ref_s.values.end() ? empty : rit->second;
    const auto cit = cand_s.values.find(var);
    const auto & cv = cit == cand_s.values.end() ? empty : cit->second;
    VariableComparison cmp;
    try {
      cmp.reference = density_estimate(rv, var);
    } catch (const Error &) {
      rep.skipped_variables.push_back(var);
      continue;
    }
    cmp.candidate = detail::density_on_grid(cv, var, cmp.reference.grid, cmp.reference.bandwidth);
    cmp.mse = density_mse(cmp.reference, cmp.candidate);
    cmp.reference_quartiles = detail::five_numbers(rv);
    cmp.candidate_quartiles = detail::five_numbers(cv);
    if (var == "ttc") rep.ttc_rmse = ttc_density_rmse(cmp.reference, cmp.candidate);
    rep.variables.emplace(var, std::move(cmp));
  }

  const auto restrict_to = [&](const TrajectoryDataset & ds) {
    std::vector<VehicleId> present;
    for (const auto id : ids) {
      if (ds.find(id)) present.push_back(id);
    }
    auto sub = subset(ds, present);
    sub.meta.ego_ids = present;
    return sub;
  };
  const auto ref_sub = restrict_to(reference);
  const auto cand_sub = restrict_to(candidate);
  if (!ref_sub.tracks.empty()) rep.lane_change_freq_reference = lane_change_frequency(ref_sub);
  if (!cand_sub.tracks.empty()) rep.lane_change_freq_candidate = lane_change_frequency(cand_sub);
  const auto styles = [](const TrajectoryDataset & ds) -> std::optional<StyleClassification> {
    try {
      return classify_styles(ds);
    } catch (const Error &) {
      return std::nullopt;
    }
  };
  rep.styles_reference = styles(ref_sub);
  rep.styles_candidate = styles(cand_sub);
  return rep;
}

namespace detail
{

inline nlohmann::json styles_json(const std::optional<StyleClassification> & s)
{
  if (!s) return nullptr;
  nlohmann::json cen = nlohmann::json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto & c = s->centroids[k];
    cen[std::string(to_string(static_cast<Style>(k)))] = {
      {"mean_speed", c.mean_speed}, {"mean_accel", c.mean_accel}, {"count", c.count}};
  }
  nlohmann::json labels = nlohmann::json::object();
  for (const auto & t : s->tracks) labels[std::to_string(t.vehicle_id)] = to_string(t.style);
  return {{"centroids", cen},
          {"lambdas", {s->lambda1, s->lambda2}},
          {"sigma_v", s->sigma_v},
          {"sigma_a", s->sigma_a},
          {"labels", labels}};
}

}  // namespace detail

/// Report body. Only `metadata` may differ between identical runs.
inline nlohmann::json report_json(const EvaluationReport & r, const nlohmann::json & metadata = nlohmann::json::object())
{
  nlohmann::json j;
  nlohmann::json dens = nlohmann::json::object();
  nlohmann::json mse = nlohmann::json::object();
  for (const auto & [var, cmp] : r.variables) {
    dens[var] = {{"grid", cmp.reference.grid},
                 {"density", cmp.candidate.density},
                 {"reference_density", cmp.reference.density},
                 {"bandwidth", cmp.reference.bandwidth},
                 {"candidate_bandwidth", cmp.candidate.bandwidth},
                 {"quartiles", {{"reference", cmp.reference_quartiles}, {"candidate", cmp.candidate_quartiles}}}};
    mse[var] = cmp.mse;
  }
  j["densities"] = dens;
  j["mse"] = mse;
  j["skipped_variables"] = r.skipped_variables;
  j["lane_change_freq"] = {{"reference", r.lane_change_freq_reference}, {"candidate", r.lane_change_freq_candidate}};
  j["styles"] = {{"reference", detail::styles_json(r.styles_reference)},
                 {"candidate", detail::styles_json(r.styles_candidate)}};
  if (r.styles_candidate) {
    j["styles"]["centroids"] = detail::styles_json(r.styles_candidate)["centroids"];
    j["styles"]["lambdas"] = {r.styles_candidate->lambda1, r.styles_candidate->lambda2};
  } else {
    j["styles"]["centroids"] = nullptr;
    j["styles"]["lambdas"] = nullptr;
  }
  j["ttc_rmse"] = r.ttc_rmse ? nlohmann::json(*r.ttc_rmse) : nlohmann::json(nullptr);
  nlohmann::json cases = nlohmann::json::array();
  for (const auto & c : r.cases) cases.push_back(to_json(c));
  j["cases"] = cases;
  nlohmann::json meta = metadata;
  meta["ttc_rmse_convention"] = kTtcRmseConvention;
  meta["density_estimator"] = "gaussian kde, silverman bandwidth, 512-point grid";
  j["metadata"] = meta;
  return j;
}

/// `densities_<var>.csv` with grid, reference and candidate columns.
inline void write_density_csvs(const EvaluationReport & r, const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir);
  for (const auto & [var, cmp] : r.variables) {
    const auto path = dir / ("densities_" + var + ".csv");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "grid,reference,candidate\n";
    for (std::size_t i = 0; i < cmp.reference.grid.size(); ++i) {
      out << csv::format_double(cmp.reference.grid[i]) << ',' << csv::format_double(cmp.reference.density[i]) << ','
          << csv::format_double(cmp.candidate.density[i]) << '\n';
    }
  }
}

/// Line plot of reference and candidate densities with plain axes.
inline std::string density_svg(const VariableComparison & cmp)
{
  constexpr double W = 640, H = 400, L = 60, R = 20, T = 30, B = 50;
  const auto & g = cmp.reference.grid;
  double y_max = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    y_max = std::max({y_max, cmp.reference.density[i], cmp.candidate.density[i]});
  }
  if (!(y_max > 0.0)) y_max = 1.0;
  const double x0 = g.front(), x1 = g.back();
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - y / y_max * (H - T - B); };
  const auto path = [&](const std::vector<double> & d) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    for (std::size_t i = 0; i < g.size(); ++i) s << (i ? " L" : "M") << px(g[i]) << ',' << py(d[i]);
    return s.str();
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << L << "\" y=\"" << H - B + 20 << "\" font-size=\"12\">" << csv::format_double(x0)
      << "</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << H - B + 20 << "\" font-size=\"12\" text-anchor=\"end\">"
      << csv::format_double(x1) << "</text>\n"
      << "<text x=\"" << (W + L - R) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"14\" text-anchor=\"middle\">"
      << cmp.reference.variable << "</text>\n"
      << "<text x=\"" << L - 5 << "\" y=\"" << T + 4 << "\" font-size=\"12\" text-anchor=\"end\">"
      << csv::format_double(y_max) << "</text>\n"
      << "<path d=\"" << path(cmp.reference.density) << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n"
      << "<path d=\"" << path(cmp.candidate.density)
      << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n"
      << "<text x=\"" << W - R << "\" y=\"" << T << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#1f77b4\">"
      << "reference</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << T + 16
      << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#d62728\">candidate</text>\n"
      << "</svg>\n";
  return svg.str();
}

inline void write_density_svgs(const EvaluationReport & r, const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir);
  for (const auto & [var, cmp] : r.variables) {
    const auto path = dir / ("density_" + var + ".svg");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << density_svg(cmp);
  }
}

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__METRICS_HPP_
