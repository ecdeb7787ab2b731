#pragma once

// Aggregation of experiment records: nDCG-vs-fraction curves, group drops,
// runtime ratios, and CSV/SVG emission.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenlens/error.hpp"
#include "greenlens/green.hpp"
#include "greenlens/runner.hpp"
#include "greenlens/text.hpp"

namespace greenlens {

struct GroupMap {
  std::vector<std::string> group1{"user_knn", "svd", "item_knn", "item_knn_binary", "nmf"};
  std::vector<std::string> group2{"bias", "popularity", "popularity_binary", "funk_svd", "biased_mf"};

  std::vector<std::pair<std::string, const std::vector<std::string>*>> groups() const {
    return {{"group1", &group1}, {"group2", &group2}};
  }
};

struct CurvePoint {
  double fraction = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population formula over seeds
  double relative = 0.0;
  std::size_t n = 0;
};

struct Curve {
  std::string dataset;
  std::string algorithm;
  std::vector<CurvePoint> points;  // ascending fraction

  const CurvePoint* at(double fraction) const {
    for (const auto& p : points)
      if (fraction_label(p.fraction) == fraction_label(fraction)) return &p;
    return nullptr;
  }
};

namespace detail {

// Order-independent mean: values are summed in sorted order.
inline std::pair<double, double> mean_std(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(v.size()))};
}

}  // namespace detail

// Successful records only. Every (dataset, algorithm, seed) needs a
// fraction-1.0 record, which anchors the relative values.
inline std::vector<Curve> build_curves(const std::vector<ExperimentRecord>& records) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::map<std::string, std::vector<double>>> values;
  std::map<Key, std::set<std::uint64_t>> seeds, anchored;
  for (const auto& r : records) {
    if (!r.ok() || !r.ndcg_mean) continue;
    const Key key{r.dataset, r.algorithm};
    values[key][fraction_label(r.fraction)].push_back(*r.ndcg_mean);
    seeds[key].insert(r.seed);
    if (fraction_label(r.fraction) == "1.00") anchored[key].insert(r.seed);
  }
  std::vector<Curve> curves;
  for (const auto& [key, by_fraction] : values) {
    if (anchored[key] != seeds[key])
      throw DataError("no fraction-1.0 baseline for algorithm " + key.second + " on dataset " + key.first +
                      " for every seed");
    Curve c{key.first, key.second, {}};
    const double anchor = detail::mean_std(by_fraction.at("1.00")).first;
    for (const auto& [label, v] : by_fraction) {
      const auto [mean, sd] = detail::mean_std(v);
      CurvePoint p{*text::parse_double(label), mean, sd, 0.0, v.size()};
      p.relative = label == "1.00" ? 1.0 : mean / anchor;
      c.points.push_back(p);
    }
    std::sort(c.points.begin(), c.points.end(), [](auto& a, auto& b) { return a.fraction < b.fraction; });
    curves.push_back(std::move(c));
  }
  return curves;
}

struct GroupDrop {
  std::string group;
  double fraction = 0.0;
  double drop_pct = 0.0;  // 100 * (1 - mean relative value of members)
};

// Curves of one dataset. Every member of every group must be present.
inline std::vector<GroupDrop> group_summary(const std::vector<Curve>& curves, const GroupMap& groups,
                                            const std::vector<double>& at_fractions) {
  std::vector<GroupDrop> out;
  for (const auto& [name, members] : groups.groups()) {
    if (members->empty()) continue;
    for (double f : at_fractions) {
      std::vector<double> rel;
      for (const auto& m : *members) {
        auto it = std::find_if(curves.begin(), curves.end(), [&](const Curve& c) { return c.algorithm == m; });
        if (it == curves.end()) throw DataError(name + " member " + m + " has no curve");
        const auto* p = it->at(f);
        if (!p) throw DataError(name + " member " + m + " has no point at fraction " + fraction_label(f));
        rel.push_back(p->relative);
      }
      out.push_back({name, f, 100.0 * (1.0 - detail::mean_std(rel).first)});
    }
  }
  return out;
}

struct RuntimeRatio {
  std::string dataset;
  std::string algorithm;
  double fraction = 0.0;
  double ratio = 0.0;
};

// (fit + eval) at each fraction over (fit + eval) at 1.0, summed over
// seeds. The "__mean__" rows average the per-algorithm ratios.
inline std::vector<RuntimeRatio> runtime_ratios(const std::vector<ExperimentRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>> totals;
  for (const auto& r : records)
    if (r.ok()) totals[{r.dataset, r.algorithm}][fraction_label(r.fraction)].push_back(r.timing().total());
  std::vector<RuntimeRatio> out;
  std::map<std::pair<std::string, std::string>, std::vector<double>> per_dataset;
  for (const auto& [key, by_fraction] : totals) {
    auto full = by_fraction.find("1.00");
    if (full == by_fraction.end()) continue;
    auto sum = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      double s = 0.0;
      for (double x : v) s += x;
      return s;
    };
    const double base = sum(full->second);
    for (const auto& [label, v] : by_fraction) {
      const double ratio = label == "1.00" ? 1.0 : (base > 0 ? sum(v) / base : 0.0);
      out.push_back({key.first, key.second, *text::parse_double(label), ratio});
      per_dataset[{key.first, label}].push_back(ratio);
    }
  }
  for (const auto& [key, v] : per_dataset)
    out.push_back({key.first, "__mean__", *text::parse_double(key.second), detail::mean_std(v).first});
  return out;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
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

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                 "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
  return colors[i % (sizeof colors / sizeof *colors)];
}

inline std::string num(double v) { return text::fixed(v, 2); }

}  // namespace detail

// Line chart of relative nDCG against training fraction, one polyline per
// algorithm (class="curve", data-algorithm=<name>).
inline std::string curves_svg(const std::string& dataset, const std::vector<Curve>& curves) {
  const double w = 720, h = 440, left = 60, right = 170, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  double ymax = 1.2;
  for (const auto& c : curves)
    for (const auto& p : c.points)
      if (std::isfinite(p.relative)) ymax = std::max(ymax, p.relative * 1.05);
  auto x = [&](double f) { return left + f * pw; };
  auto y = [&](double v) { return top + ph - (std::isfinite(v) ? v : 0.0) / ymax * ph; };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\">\n"
    << "<title>" << detail::xml_escape(dataset) << ": relative nDCG@10 vs training fraction</title>\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 10; ++t) {
    const double f = t / 10.0;
    s << "<text x=\"" << detail::num(x(f)) << "\" y=\"" << top + ph + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
      << t * 10 << "%</text>\n";
  }
  for (double v = 0.0; v <= ymax + 1e-9; v += 0.2)
    s << "<text x=\"" << left - 6 << "\" y=\"" << detail::num(y(v) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
      << detail::num(v) << "</text>\n";
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10
    << "\" font-size=\"12\" text-anchor=\"middle\">share of full training set</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    s << "<polyline class=\"curve\" data-algorithm=\"" << detail::xml_escape(c.algorithm)
      << "\" fill=\"none\" stroke-width=\"2\" stroke=\"" << detail::palette(i) << "\" points=\"";
    for (std::size_t k = 0; k < c.points.size(); ++k)
      s << (k ? " " : "") << detail::num(x(c.points[k].fraction)) << ',' << detail::num(y(c.points[k].relative));
    s << "\"/>\n";
    s << "<text x=\"" << left + pw + 12 << "\" y=\"" << top + 14 + 16.0 * static_cast<double>(i)
      << "\" font-size=\"12\" fill=\"" << detail::palette(i) << "\">" << detail::xml_escape(c.algorithm)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t n = 0;
};

// Quartiles by linear interpolation between order statistics.
inline BoxStats box_stats(std::vector<double> v) {
  BoxStats b;
  b.n = v.size();
  if (v.empty()) return b;
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  b.min = v.front();
  b.q1 = q(0.25);
  b.median = q(0.5);
  b.q3 = q(0.75);
  b.max = v.back();
  return b;
}

// Box summary of absolute nDCG at 50% and 100% of the training data, per
// group (class="box", data-group, data-fraction).
inline std::string groups_svg(const std::string& dataset, const std::vector<ExperimentRecord>& records,
                              const GroupMap& groups) {
  struct Box {
    std::string group;
    double fraction;
    BoxStats stats;
  };
  std::vector<Box> boxes;
  double ymax = 0.0;
  for (const auto& [name, members] : groups.groups()) {
    for (double f : {0.5, 1.0}) {
      std::vector<double> v;
      for (const auto& r : records)
        if (r.ok() && r.ndcg_mean && r.dataset == dataset && fraction_label(r.fraction) == fraction_label(f) &&
            std::find(members->begin(), members->end(), r.algorithm) != members->end())
          v.push_back(*r.ndcg_mean);
      boxes.push_back({name, f, box_stats(v)});
      ymax = std::max(ymax, boxes.back().stats.max);
    }
  }
  ymax = ymax > 0 ? ymax * 1.1 : 1.0;
  const double w = 520, h = 400, left = 60, top = 40, ph = 300, slot = 100;
  auto y = [&](double v) { return top + ph - v / ymax * ph; };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\">\n"
    << "<title>" << detail::xml_escape(dataset) << ": nDCG@10 at 50% and 100% of training data</title>\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << detail::num(y(v) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
      << text::fixed(v, 3) << "</text>\n";
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5) + 10;
    s << "<g class=\"box\" data-group=\"" << b.group << "\" data-fraction=\"" << fraction_label(b.fraction)
      << "\" data-n=\"" << b.stats.n << "\">\n";
    if (b.stats.n > 0) {
      const char* color = b.fraction < 1.0 ? "#ff7f0e" : "#1f77b4";
      s << "<line x1=\"" << cx << "\" y1=\"" << detail::num(y(b.stats.min)) << "\" x2=\"" << cx << "\" y2=\""
        << detail::num(y(b.stats.max)) << "\" stroke=\"black\"/>\n"
        << "<rect x=\"" << cx - 25 << "\" y=\"" << detail::num(y(b.stats.q3)) << "\" width=\"50\" height=\""
        << detail::num(std::max(0.5, y(b.stats.q1) - y(b.stats.q3))) << "\" fill=\"" << color
        << "\" fill-opacity=\"0.6\" stroke=\"black\"/>\n"
        << "<line x1=\"" << cx - 25 << "\" y1=\"" << detail::num(y(b.stats.median)) << "\" x2=\"" << cx + 25
        << "\" y2=\"" << detail::num(y(b.stats.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    s << "<text x=\"" << cx << "\" y=\"" << top + ph + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
      << b.group << " @ " << static_cast<int>(b.fraction * 100) << "%</text>\n"
      << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

struct ReportFiles {
  std::vector<std::filesystem::path> written;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content, ReportFiles& files) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw RuntimeError("write failed for '" + path.string() + "'");
  files.written.push_back(path);
}

inline std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

}  // namespace detail

// Writes curves.csv, groups.csv, runtime_ratios.csv, energy.json and, per
// dataset, <dataset>_curves.svg and <dataset>_groups_50v100.svg. Groups are
// summarised over the members present in the records.
inline ReportFiles emit_report(const std::vector<ExperimentRecord>& records, const GroupMap& groups,
                               const std::filesystem::path& out_dir, const EnergyParams& energy = {}) {
  if (records.empty()) throw DataError("no experiment records to report");
  const auto curves = build_curves(records);
  if (curves.empty()) throw DataError("no successful experiment records to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw DataError("cannot create report directory '" + out_dir.string() + "'");

  ReportFiles files;
  std::set<std::string> datasets;
  std::ostringstream cs;
  cs << "dataset,algorithm,fraction,mean,std,relative\n";
  for (const auto& c : curves) {
    datasets.insert(c.dataset);
    for (const auto& p : c.points)
      cs << text::csv_escape(c.dataset) << ',' << c.algorithm << ',' << fraction_label(p.fraction) << ','
         << text::shortest(p.mean) << ',' << text::shortest(p.std) << ',' << text::shortest(p.relative) << '\n';
  }
  detail::write_file(out_dir / "curves.csv", cs.str(), files);

  std::ostringstream gs;
  gs << "dataset,group,fraction,drop_pct\n";
  for (const auto& d : datasets) {
    std::vector<Curve> dc;
    std::set<double> fractions;
    for (const auto& c : curves)
      if (c.dataset == d) {
        dc.push_back(c);
        for (const auto& p : c.points) fractions.insert(p.fraction);
      }
    GroupMap present;
    present.group1.clear();
    present.group2.clear();
    auto keep = [&](const std::vector<std::string>& from, std::vector<std::string>& to) {
      for (const auto& m : from) {
        auto it = std::find_if(dc.begin(), dc.end(), [&](const Curve& c) { return c.algorithm == m; });
        if (it == dc.end()) continue;
        bool complete = true;
        for (double f : fractions) complete = complete && it->at(f);
        if (complete) to.push_back(m);
      }
    };
    keep(groups.group1, present.group1);
    keep(groups.group2, present.group2);
    for (const auto& g : group_summary(dc, present, {fractions.begin(), fractions.end()}))
      gs << text::csv_escape(d) << ',' << g.group << ',' << fraction_label(g.fraction) << ','
         << text::shortest(g.drop_pct) << '\n';

    const auto stem = detail::safe_name(d);
    detail::write_file(out_dir / (stem + "_curves.svg"), curves_svg(d, dc), files);
    detail::write_file(out_dir / (stem + "_groups_50v100.svg"), groups_svg(d, records, present), files);
  }
  detail::write_file(out_dir / "groups.csv", gs.str(), files);

  const auto ratios = runtime_ratios(records);
  std::ostringstream rs;
  rs << "dataset,algorithm,fraction,ratio\n";
  nlohmann::json energy_doc = nlohmann::json::object();
  for (const auto& r : ratios) {
    rs << text::csv_escape(r.dataset) << ',' << r.algorithm << ',' << fraction_label(r.fraction) << ','
       << text::shortest(r.ratio) << '\n';
    if (r.algorithm == "__mean__" && fraction_label(r.fraction) == "0.50" && r.ratio > 0 && r.ratio <= 1)
      energy_doc[r.dataset] = to_json(energy_report(r.ratio, energy));
  }
  detail::write_file(out_dir / "runtime_ratios.csv", rs.str(), files);
  detail::write_file(out_dir / "energy.json", energy_doc.dump(2) + "\n", files);
  return files;
}

}  // namespace greenlens
