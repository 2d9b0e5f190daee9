#include "imbens/visualizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "ensemble_internal.hpp"
#include "imbens/error.hpp"

namespace imbens {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Job {
  std::string model;
  std::string dataset;
};

}  // namespace

std::vector<std::size_t> prefix_grid(std::size_t n_members, std::size_t granularity) {
  if (granularity == 0) fail("InvalidParameter", ErrorKind::Usage, "granularity must be >= 1");
  if (n_members == 0) fail("EmptyModel", ErrorKind::Data, "model has no members");
  std::vector<std::size_t> grid{1};
  for (std::size_t p = granularity; p < n_members; p += granularity) {
    if (p > grid.back()) grid.push_back(p);
  }
  if (grid.back() != n_members) grid.push_back(n_members);
  return grid;
}

VisualizerState fit_visualizer(std::map<std::string, EnsembleModel> models, std::map<std::string, Dataset> datasets,
                               std::size_t granularity, std::size_t jobs) {
  if (models.empty()) fail("EmptyInput", ErrorKind::Usage, "no models given");
  if (datasets.empty()) fail("EmptyInput", ErrorKind::Usage, "no datasets given");
  if (granularity == 0) fail("InvalidParameter", ErrorKind::Usage, "granularity must be >= 1");
  for (const auto& [mname, model] : models) {
    if (model.members.empty()) fail("EmptyModel", ErrorKind::Data, "model '" + mname + "' has no members");
    for (const auto& [dname, ds] : datasets) {
      if (ds.n_features() != model.n_features) {
        fail("IncompatibleFeatureWidth", ErrorKind::Data,
             "dataset '" + dname + "' has " + std::to_string(ds.n_features()) + " features, model '" + mname +
                 "' expects " + std::to_string(model.n_features));
      }
      for (int y : ds.labels()) {
        if (static_cast<std::size_t>(y) >= model.n_classes) {
          fail("LabelOutOfRange", ErrorKind::Data,
               "dataset '" + dname + "' has labels outside the classes of model '" + mname + "'");
        }
      }
    }
  }

  std::vector<Job> work;
  for (const auto& [m, model] : models) {
    for (const auto& [d, ds] : datasets) work.push_back({m, d});
  }
  std::vector<std::vector<std::pair<std::size_t, PrefixEvaluation>>> results(work.size());
  detail::parallel_for(work.size(), jobs, "evaluation", [&](std::size_t i) {
    const EnsembleModel& model = models.at(work[i].model);
    const Dataset& ds = datasets.at(work[i].dataset);
    ProbaAccumulator acc(ds.features(), model.n_classes);
    for (std::size_t p : prefix_grid(model.members.size(), granularity)) {
      while (acc.members() < p) acc.add(model.members[acc.members()]);
      PrefixEvaluation ev;
      ev.confusion = confusion_matrix(ds.labels(), acc.predict(), model.n_classes);
      for (const auto& metric : metric_names()) ev.metrics[metric] = compute_metric(metric, ev.confusion);
      results[i].emplace_back(p, std::move(ev));
    }
  });

  VisualizerState state;
  state.granularity = granularity;
  for (std::size_t i = 0; i < work.size(); ++i) {
    for (auto& [p, ev] : results[i]) state.cache.emplace(PrefixKey{work[i].model, work[i].dataset, p}, std::move(ev));
  }
  state.models = std::move(models);
  state.datasets = std::move(datasets);
  return state;
}

std::vector<LineplotRow> performance_lineplot_data(const VisualizerState& state,
                                                   const std::vector<std::string>& metrics,
                                                   const std::vector<std::string>& datasets) {
  if (metrics.empty()) fail("UnknownName", ErrorKind::Usage, "empty metric selection");
  if (datasets.empty()) fail("UnknownName", ErrorKind::Usage, "empty dataset selection");
  for (const auto& m : metrics) {
    if (!is_metric(m)) fail("UnknownName", ErrorKind::Usage, "unknown metric '" + m + "'");
  }
  for (const auto& d : datasets) {
    if (!state.datasets.count(d)) fail("UnknownName", ErrorKind::Usage, "unknown dataset '" + d + "'");
  }
  const std::set<std::string> metric_set(metrics.begin(), metrics.end());
  const std::set<std::string> dataset_set(datasets.begin(), datasets.end());
  std::vector<LineplotRow> rows;
  // Cache keys iterate in (model, dataset, prefix) order already.
  for (const auto& [key, ev] : state.cache) {
    const auto& [model, dataset, prefix] = key;
    if (!dataset_set.count(dataset)) continue;
    for (const auto& [metric, value] : ev.metrics) {
      if (metric_set.count(metric)) rows.push_back({model, dataset, prefix, metric, value});
    }
  }
  return rows;
}

std::string lineplot_csv(const std::vector<LineplotRow>& rows) {
  std::string out = "model,dataset,prefix_size,metric,value\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.dataset + "," + std::to_string(r.prefix_size) + "," + r.metric + "," +
           fmt("%.17g", r.value) + "\n";
  }
  return out;
}

HeatmapData confusion_matrix_heatmap_data(const VisualizerState& state, const std::string& model,
                                          const std::string& dataset) {
  const auto mit = state.models.find(model);
  if (mit == state.models.end()) fail("UnknownName", ErrorKind::Usage, "unknown model '" + model + "'");
  if (!state.datasets.count(dataset)) fail("UnknownName", ErrorKind::Usage, "unknown dataset '" + dataset + "'");
  const EnsembleModel& m = mit->second;
  HeatmapData data;
  data.model = model;
  data.dataset = dataset;
  data.confusion = state.cache.at(PrefixKey{model, dataset, m.members.size()}).confusion;
  for (std::size_t k = 0; k < m.n_classes; ++k) {
    data.class_names.push_back(k < m.class_names.size() ? m.class_names[k] : std::to_string(k));
  }
  return data;
}

std::string heatmap_csv(const HeatmapData& data) {
  std::string out = "true_class";
  for (const auto& name : data.class_names) out += "," + name;
  out += "\n";
  const std::size_t k = data.confusion.n_classes();
  for (std::size_t t = 0; t < k; ++t) {
    out += data.class_names[t];
    for (std::size_t p = 0; p < k; ++p) out += "," + std::to_string(data.confusion.at(t, p));
    out += "\n";
  }
  return out;
}

std::string render_svg(const std::vector<LineplotRow>& rows, const SvgStyle& style) {
  if (rows.empty()) fail("EmptyData", ErrorKind::Usage, "nothing to plot");
  using SeriesKey = std::tuple<std::string, std::string, std::string>;
  std::map<SeriesKey, std::vector<std::pair<double, double>>> series;
  double x_max = 1.0;
  for (const auto& r : rows) {
    series[{r.model, r.dataset, r.metric}].emplace_back(static_cast<double>(r.prefix_size), r.value);
    x_max = std::max(x_max, static_cast<double>(r.prefix_size));
  }
  const double left = 60, right = 200, top = 40, bottom = 50;
  const double pw = style.width - left - right;
  const double ph = style.height - top - bottom;
  auto sx = [&](double x) { return left + (x_max > 1.0 ? (x - 1.0) / (x_max - 1.0) : 0.5) * pw; };
  auto sy = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, 1.0)) * ph; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) +
                    "\" height=\"" + std::to_string(style.height) + "\" style=\"background:white\">\n";
  if (!style.title.empty()) {
    svg += "<text x=\"" + fmt("%.1f", left) + "\" y=\"24\" font-size=\"16\">" + escape_xml(style.title) + "</text>\n";
  }
  svg += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top + ph) + "\" x2=\"" +
         fmt("%.1f", left + pw) + "\" y2=\"" + fmt("%.1f", top + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top) + "\" x2=\"" + fmt("%.1f", left) +
         "\" y2=\"" + fmt("%.1f", top + ph) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg += "<text x=\"" + fmt("%.1f", left - 8) + "\" y=\"" + fmt("%.1f", sy(v) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmt("%.2f", v) + "</text>\n";
  }
  svg += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", top + ph + 36) +
         "\" font-size=\"12\" text-anchor=\"middle\">number of members</text>\n";
  svg += "<text x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top + ph + 18) + "\" font-size=\"11\">1</text>\n";
  svg += "<text x=\"" + fmt("%.1f", left + pw) + "\" y=\"" + fmt("%.1f", top + ph + 18) +
         "\" font-size=\"11\" text-anchor=\"end\">" + fmt("%.0f", x_max) + "</text>\n";

  std::size_t s = 0;
  for (const auto& [key, points] : series) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::string pts;
    for (const auto& [x, y] : points) {
      if (!pts.empty()) pts += ' ';
      pts += fmt("%.2f", sx(x)) + "," + fmt("%.2f", sy(y));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts +
           "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(s);
    const auto& [model, dataset, metric] = key;
    svg += "<text x=\"" + fmt("%.1f", left + pw + 12) + "\" y=\"" + fmt("%.1f", ly + 4) + "\" font-size=\"11\" fill=\"" +
           color + "\">" + escape_xml(model + " / " + dataset + " / " + metric) + "</text>\n";
    ++s;
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_svg(const HeatmapData& data, const SvgStyle& style) {
  const std::size_t k = data.confusion.n_classes();
  if (k == 0) fail("EmptyData", ErrorKind::Usage, "empty confusion matrix");
  const double left = 110, top = 60;
  const double cell = std::min((style.width - left - 20) / static_cast<double>(k),
                               (style.height - top - 20) / static_cast<double>(k));
  std::size_t peak = 0;
  for (auto c : data.confusion.row_major()) peak = std::max(peak, c);

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) +
                    "\" height=\"" + std::to_string(style.height) + "\" style=\"background:white\">\n";
  const std::string title = style.title.empty() ? data.model + " on " + data.dataset : style.title;
  svg += "<text x=\"" + fmt("%.1f", left) + "\" y=\"24\" font-size=\"16\">" + escape_xml(title) + "</text>\n";
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t count = data.confusion.at(t, p);
      const double shade = peak > 0 ? static_cast<double>(count) / static_cast<double>(peak) : 0.0;
      const int level = static_cast<int>(std::lround(255.0 * (1.0 - shade)));
      char color[16];
      std::snprintf(color, sizeof color, "#%02x%02xff", level, level);
      const double x = left + cell * static_cast<double>(p);
      const double y = top + cell * static_cast<double>(t);
      svg += "<rect x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", y) + "\" width=\"" + fmt("%.2f", cell) +
             "\" height=\"" + fmt("%.2f", cell) + "\" fill=\"" + color + "\" stroke=\"black\"/>\n";
      svg += "<text x=\"" + fmt("%.2f", x + cell / 2) + "\" y=\"" + fmt("%.2f", y + cell / 2 + 5) +
             "\" font-size=\"14\" text-anchor=\"middle\" fill=\"" + (shade > 0.5 ? "white" : "black") + "\">" +
             std::to_string(count) + "</text>\n";
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double mid = cell * (static_cast<double>(c) + 0.5);
    svg += "<text x=\"" + fmt("%.2f", left - 8) + "\" y=\"" + fmt("%.2f", top + mid + 4) +
           "\" font-size=\"12\" text-anchor=\"end\">" + escape_xml(data.class_names[c]) + "</text>\n";
    svg += "<text x=\"" + fmt("%.2f", left + mid) + "\" y=\"" + fmt("%.2f", top - 8) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + escape_xml(data.class_names[c]) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace imbens
