#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "imbens/dataset.hpp"
#include "imbens/ensemble.hpp"
#include "imbens/metrics.hpp"

namespace imbens {

/// Evaluated prefix of one model on one dataset.
struct PrefixEvaluation {
  std::map<std::string, double> metrics;
  ConfusionMatrix confusion;
};

using PrefixKey = std::tuple<std::string, std::string, std::size_t>;  // model, dataset, prefix size

struct VisualizerState {
  std::map<std::string, EnsembleModel> models;
  std::map<std::string, Dataset> datasets;
  std::size_t granularity = 1;
  std::map<PrefixKey, PrefixEvaluation> cache;
};

/// {1, g, 2g, ...} below T plus T itself, ascending and distinct.
std::vector<std::size_t> prefix_grid(std::size_t n_members, std::size_t granularity);

/// Evaluates every (model, dataset, prefix) on the grid of each model, using
/// all registered metrics. Throws EmptyInput, IncompatibleFeatureWidth.
VisualizerState fit_visualizer(std::map<std::string, EnsembleModel> models, std::map<std::string, Dataset> datasets,
                               std::size_t granularity = 1, std::size_t jobs = 1);

struct LineplotRow {
  std::string model;
  std::string dataset;
  std::size_t prefix_size = 0;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const LineplotRow&, const LineplotRow&) = default;
};

/// Long-form table sorted by (model, dataset, prefix, metric). Throws
/// UnknownName for empty or unknown selections.
std::vector<LineplotRow> performance_lineplot_data(const VisualizerState& state,
                                                   const std::vector<std::string>& metrics,
                                                   const std::vector<std::string>& datasets);

std::string lineplot_csv(const std::vector<LineplotRow>& rows);

struct HeatmapData {
  std::string model;
  std::string dataset;
  std::vector<std::string> class_names;
  ConfusionMatrix confusion;
};

/// Confusion matrix of the full model. Throws UnknownName.
HeatmapData confusion_matrix_heatmap_data(const VisualizerState& state, const std::string& model,
                                          const std::string& dataset);

std::string heatmap_csv(const HeatmapData& data);

struct SvgStyle {
  int width = 720;
  int height = 440;
  std::string title;
};

/// One polyline per (model, dataset, metric) series. Throws EmptyData.
std::string render_svg(const std::vector<LineplotRow>& rows, const SvgStyle& style = {});

/// One rect and one count label per cell.
std::string render_svg(const HeatmapData& data, const SvgStyle& style = {});

}  // namespace imbens
