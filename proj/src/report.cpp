#include "xsnr/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "xsnr/interchange.hpp"
#include "xsnr/stats.hpp"

namespace xsnr {

// ---------------------------------------------------------------------------
// Box plots

WordBox word_box(std::span<const double> values) {
  if (values.empty()) throw ValidationError("box plot of an empty column");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  WordBox box;
  box.min = sorted.front();
  box.max = sorted.back();
  box.q1 = stats::quantile_sorted(sorted, 0.25);
  box.median = stats::quantile_sorted(sorted, 0.5);
  box.q3 = stats::quantile_sorted(sorted, 0.75);
  box.mean = stats::mean(values);
  const double iqr = box.q3 - box.q1;
  const double low_fence = box.q1 - 1.5 * iqr;
  const double high_fence = box.q3 + 1.5 * iqr;
  box.whisker_low = box.q1;
  box.whisker_high = box.q3;
  for (double v : sorted) {
    if (v < low_fence || v > high_fence) {
      box.outliers.push_back(v);
    } else {
      box.whisker_low = std::min(box.whisker_low, v);
      box.whisker_high = std::max(box.whisker_high, v);
    }
  }
  return box;
}

BoxplotSummary boxplot_summary(const AttentionMatrix& matrix) {
  BoxplotSummary summary;
  summary.text_id = matrix.text_id();
  summary.m_models = matrix.n_models();
  std::vector<double> column(matrix.n_models());
  for (std::size_t j = 0; j < matrix.n_words(); ++j) {
    for (std::size_t i = 0; i < matrix.n_models(); ++i) column[i] = matrix.at(i, j);
    summary.words.push_back(word_box(column));
  }
  return summary;
}

BoxplotSummary boxplot_summary(const AttentionMap& map) {
  return boxplot_summary(AttentionMatrix(map.text_id, {map.model_id}, {map.weights}));
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

ComparisonVariant compare_variant(const AttentionMatrix& matrix, const AttentionMap& feature_map,
                                  const CompareOptions& options) {
  ComparisonVariant v;
  std::optional<BootstrapConfig> bootstrap = options.bootstrap;
  if (bootstrap) bootstrap->level = options.ci_level;
  SweepDecorator decorate;
  if (bootstrap) {
    decorate = [&](SensitivityReport& r, const AttentionMatrix& m) {
      attach_bootstrap_cis(r, m, *bootstrap);
    };
  }
  std::vector<std::size_t> sizes = options.sizes;
  if (sizes.empty()) sizes.push_back(matrix.n_models());
  v.sweep = size_sweep(matrix, sizes, options.seed, options.estimator, decorate);
  v.full = sensitivity_report(matrix, options.estimator);
  if (bootstrap) attach_bootstrap_cis(v.full, matrix, *bootstrap);
  v.feature_signal = signal_deterministic(feature_map);
  v.feature_signal_ci = variance_ci_chisquare(feature_map, options.ci_level);
  v.transformer_signal_lower = v.full.signal < v.feature_signal;
  return v;
}

}  // namespace

ComparisonReport compare(std::span<const TokenizedText> texts,
                         std::span<const AttentionMatrix> transformer_inputs,
                         std::span<const AttentionMap> feature_maps,
                         const CompareOptions& options) {
  std::map<std::string, const AttentionMatrix*> matrices;
  for (const auto& m : transformer_inputs) {
    if (!matrices.emplace(m.text_id(), &m).second) {
      throw ValidationError("compare: duplicate attention matrix for text '" + m.text_id() + "'");
    }
  }
  std::map<std::string, const AttentionMap*> maps;
  for (const auto& f : feature_maps) {
    if (!maps.emplace(f.text_id, &f).second) {
      throw ValidationError("compare: duplicate feature map for text '" + f.text_id + "'");
    }
  }
  if (matrices.size() != texts.size() || maps.size() != texts.size()) {
    throw ValidationError("compare: texts, matrices and feature maps are not aligned");
  }

  std::vector<const TokenizedText*> ordered;
  for (const auto& t : texts) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const TokenizedText* a, const TokenizedText* b) { return a->text_id < b->text_id; });

  ComparisonReport report;
  report.ci_level = options.ci_level;
  for (const TokenizedText* text : ordered) {
    auto mi = matrices.find(text->text_id);
    auto fi = maps.find(text->text_id);
    if (mi == matrices.end() || fi == maps.end()) {
      throw ValidationError("compare: id mismatch, no inputs for text '" + text->text_id + "'");
    }
    const AttentionMatrix& matrix = validate_matrix(*mi->second, *text);
    const AttentionMap& feature_map = *fi->second;
    if (feature_map.size() != text->size()) {
      throw ValidationError("compare: feature map for '" + text->text_id +
                            "' does not match the token count");
    }

    TextComparison entry;
    entry.text_id = text->text_id;
    entry.length_bucket = text->length_bucket();
    entry.raw = compare_variant(matrix, feature_map, options);
    if (options.normalization) {
      const std::size_t k = resolve_support(*options.normalization, &feature_map);
      NormalizationSpec fixed = *options.normalization;
      fixed.support = k;
      entry.normalized_support = k;
      entry.normalized = compare_variant(normalize_matrix(matrix, fixed),
                                         normalize_map(feature_map, fixed), options);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json number_or_infinite(double v) {
  if (std::isinf(v)) return v > 0 ? "infinite" : "-infinite";
  return v;
}

nlohmann::json variant_json(const ComparisonVariant& v) {
  return {{"full", to_json(v.full)},
          {"sweep", to_json(v.sweep)},
          {"feature_signal", v.feature_signal},
          {"feature_signal_ci", to_json(v.feature_signal_ci)},
          {"transformer_signal_lower", v.transformer_signal_lower}};
}

}  // namespace

nlohmann::json to_json(const ConfidenceInterval& ci) {
  nlohmann::json j = {{"lower", number_or_infinite(ci.lower)},
                      {"upper", number_or_infinite(ci.upper)},
                      {"level", ci.level},
                      {"method", to_string(ci.method)}};
  if (ci.method == CiMethod::kPercentileBootstrap) {
    j["replicates"] = ci.replicates;
    j["seed"] = ci.seed;
    j["excluded"] = ci.excluded;
    j["unreliable"] = ci.unreliable;
  }
  return j;
}

nlohmann::json to_json(const SensitivityReport& report) {
  nlohmann::json j = {
      {"text_id", report.text_id},
      {"m_used", report.m_used},
      {"signal", report.signal},
      {"noise", report.noise},
      {"snr", number_or_infinite(report.snr)},
      {"estimator_options",
       {{"variance_convention", EstimatorOptions::kVarianceConvention},
        {"bias_correction", report.estimator_options.bias_correction}}}};
  if (report.bias_corrected_signal) {
    j["bias_corrected_signal"] = *report.bias_corrected_signal;
    j["bias_corrected_signal_negative"] = *report.bias_corrected_signal < 0.0;
  }
  if (report.signal_ci) j["signal_ci"] = to_json(*report.signal_ci);
  if (report.noise_ci) j["noise_ci"] = to_json(*report.noise_ci);
  if (report.snr_ci) j["snr_ci"] = to_json(*report.snr_ci);
  if (report.bias_corrected_signal_ci) {
    j["bias_corrected_signal_ci"] = to_json(*report.bias_corrected_signal_ci);
  }
  return j;
}

nlohmann::json to_json(const SizeSweep& sweep) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : sweep.reports) reports.push_back(to_json(r));
  return {{"sizes", sweep.sizes},
          {"permutation_seed", sweep.permutation_seed},
          {"reports", std::move(reports)}};
}

nlohmann::json to_json(const BoxplotSummary& summary, const TokenizedText* text) {
  nlohmann::json words = nlohmann::json::array();
  for (std::size_t j = 0; j < summary.words.size(); ++j) {
    const auto& b = summary.words[j];
    nlohmann::json w = {{"index", j},           {"min", b.min},
                        {"q1", b.q1},           {"median", b.median},
                        {"q3", b.q3},           {"max", b.max},
                        {"mean", b.mean},       {"whisker_low", b.whisker_low},
                        {"whisker_high", b.whisker_high}, {"outliers", b.outliers}};
    if (text) w["surface"] = text->tokens.at(j).surface;
    words.push_back(std::move(w));
  }
  return {{"schema_version", kSchemaVersion},
          {"text_id", summary.text_id},
          {"m_models", summary.m_models},
          {"quantile_convention", "linear_interpolation_type7"},
          {"whisker_rule", "1.5_iqr"},
          {"words", std::move(words)}};
}

nlohmann::json to_json(const ComparisonReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json j = {{"text_id", e.text_id},
                        {"length_bucket", to_string(e.length_bucket)},
                        {"raw", variant_json(e.raw)}};
    if (e.normalized) {
      j["normalized"] = variant_json(*e.normalized);
      j["normalization"] = {{"support", *e.normalized_support},
                            {"scale", "sum_abs_to_one"},
                            {"rank_key", "absolute_value"}};
    }
    entries.push_back(std::move(j));
  }
  return {{"schema_version", kSchemaVersion},
          {"ci_level", report.ci_level},
          {"entries", std::move(entries)}};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string full_precision(double v) {
  std::ostringstream os;
  os.precision(17);
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  os << v;
  return os.str();
}

}  // namespace

std::string boxplot_csv(const BoxplotSummary& summary, const TokenizedText& text) {
  std::ostringstream os;
  os << "index,surface,min,q1,median,q3,max,mean,whisker_low,whisker_high,outliers\r\n";
  for (std::size_t j = 0; j < summary.words.size(); ++j) {
    const auto& b = summary.words[j];
    std::string outliers;
    for (std::size_t k = 0; k < b.outliers.size(); ++k) {
      if (k) outliers += ' ';
      outliers += full_precision(b.outliers[k]);
    }
    os << j << ',' << csv_escape(text.tokens.at(j).surface) << ',' << full_precision(b.min)
       << ',' << full_precision(b.q1) << ',' << full_precision(b.median) << ','
       << full_precision(b.q3) << ',' << full_precision(b.max) << ',' << full_precision(b.mean)
       << ',' << full_precision(b.whisker_low) << ',' << full_precision(b.whisker_high) << ','
       << csv_escape(outliers) << "\r\n";
  }
  return os.str();
}

std::string comparison_csv(const ComparisonReport& report) {
  std::ostringstream os;
  os << "text_id,variant,m_used,signal,signal_lower,signal_upper,noise,snr,snr_lower,"
        "snr_upper,feature_signal,feature_lower,feature_upper\r\n";
  auto emit = [&](const std::string& id, const char* name, const ComparisonVariant& v) {
    for (const auto& r : v.sweep.reports) {
      os << csv_escape(id) << ',' << name << ',' << r.m_used << ',' << full_precision(r.signal)
         << ',' << (r.signal_ci ? full_precision(r.signal_ci->lower) : "") << ','
         << (r.signal_ci ? full_precision(r.signal_ci->upper) : "") << ','
         << full_precision(r.noise) << ',' << full_precision(r.snr) << ','
         << (r.snr_ci ? full_precision(r.snr_ci->lower) : "") << ','
         << (r.snr_ci ? full_precision(r.snr_ci->upper) : "") << ','
         << full_precision(v.feature_signal) << ',' << full_precision(v.feature_signal_ci.lower)
         << ',' << full_precision(v.feature_signal_ci.upper) << "\r\n";
    }
  };
  for (const auto& e : report.entries) {
    emit(e.text_id, "raw", e.raw);
    if (e.normalized) emit(e.text_id, "normalized", *e.normalized);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string xml_escape(const std::string& s) {
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

struct Scale {
  double lo, hi, px_lo, px_hi;
  double operator()(double v) const {
    if (hi == lo) return (px_lo + px_hi) / 2.0;
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

}  // namespace

std::string boxplot_svg(const BoxplotSummary& summary, const TokenizedText& text) {
  constexpr double kSlot = 28.0, kTop = 20.0, kPlotHeight = 260.0, kLeft = 60.0;
  const double width = kLeft + kSlot * static_cast<double>(summary.words.size()) + 20.0;
  const double height = kTop + kPlotHeight + 90.0;
  double lo = 0.0, hi = 0.0;
  for (const auto& b : summary.words) {
    lo = std::min(lo, b.min);
    hi = std::max(hi, b.max);
  }
  const Scale y{lo, hi, kTop + kPlotHeight, kTop};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<text x=\"" << kLeft << "\" y=\"12\">" << xml_escape(summary.text_id) << " ("
     << summary.m_models << " models)</text>\n";
  os << "<line x1=\"" << kLeft << "\" x2=\"" << width - 20 << "\" y1=\"" << y(0.0)
     << "\" y2=\"" << y(0.0) << "\" stroke=\"#ccc\"/>\n";
  os << "<text x=\"4\" y=\"" << y(hi) + 4 << "\">" << full_precision(hi).substr(0, 8)
     << "</text>\n<text x=\"4\" y=\"" << y(lo) + 4 << "\">" << full_precision(lo).substr(0, 8)
     << "</text>\n";
  for (std::size_t j = 0; j < summary.words.size(); ++j) {
    const auto& b = summary.words[j];
    const double cx = kLeft + kSlot * (static_cast<double>(j) + 0.5);
    const double half = kSlot * 0.3;
    os << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << y(b.whisker_low)
       << "\" y2=\"" << y(b.whisker_high) << "\" stroke=\"black\"/>\n";
    os << "<rect x=\"" << cx - half << "\" y=\"" << y(b.q3) << "\" width=\"" << 2 * half
       << "\" height=\"" << std::max(y(b.q1) - y(b.q3), 0.5)
       << "\" fill=\"#dde6f5\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << cx - half << "\" x2=\"" << cx + half << "\" y1=\"" << y(b.median)
       << "\" y2=\"" << y(b.median) << "\" stroke=\"orange\" stroke-width=\"2\"/>\n";
    os << "<line x1=\"" << cx - half << "\" x2=\"" << cx + half << "\" y1=\"" << y(b.mean)
       << "\" y2=\"" << y(b.mean)
       << "\" stroke=\"green\" stroke-width=\"2\" stroke-dasharray=\"3,2\"/>\n";
    for (double o : b.outliers) {
      os << "<circle cx=\"" << cx << "\" cy=\"" << y(o) << "\" r=\"2\" fill=\"none\" "
         << "stroke=\"black\"/>\n";
    }
    const double ty = kTop + kPlotHeight + 10;
    os << "<text transform=\"translate(" << cx << ',' << ty << ") rotate(60)\">"
       << xml_escape(text.tokens.at(j).surface) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string comparison_svg(const ComparisonReport& report) {
  constexpr double kPanelWidth = 420.0, kPanelHeight = 220.0, kLeft = 70.0, kGap = 50.0;
  std::ostringstream os;
  const double height = (kPanelHeight + kGap) * static_cast<double>(report.entries.size()) + 20;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + kPanelWidth + 40
     << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  double top = 20.0;
  for (const auto& e : report.entries) {
    const auto& sweep = e.raw.sweep;
    double lo = std::min(e.raw.feature_signal_ci.lower, e.raw.feature_signal);
    double hi = std::max(e.raw.feature_signal_ci.upper, e.raw.feature_signal);
    for (const auto& r : sweep.reports) {
      lo = std::min(lo, r.signal_ci ? r.signal_ci->lower : r.signal);
      hi = std::max(hi, r.signal_ci ? r.signal_ci->upper : r.signal);
    }
    const Scale x{static_cast<double>(sweep.sizes.front()),
                  static_cast<double>(sweep.sizes.back()), kLeft, kLeft + kPanelWidth};
    const Scale y{lo, hi, top + kPanelHeight, top};
    os << "<text x=\"" << kLeft << "\" y=\"" << top - 6 << "\">" << xml_escape(e.text_id)
       << " (" << to_string(e.length_bucket) << ", raw signal)</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << top << "\" width=\"" << kPanelWidth
       << "\" height=\"" << kPanelHeight << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << y(e.raw.feature_signal_ci.upper)
       << "\" width=\"" << kPanelWidth << "\" height=\""
       << std::max(y(e.raw.feature_signal_ci.lower) - y(e.raw.feature_signal_ci.upper), 0.5)
       << "\" fill=\"#f4d9c6\" opacity=\"0.6\"/>\n";
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + kPanelWidth << "\" y1=\""
       << y(e.raw.feature_signal) << "\" y2=\"" << y(e.raw.feature_signal)
       << "\" stroke=\"#c0504d\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" points=\"";
    for (const auto& r : sweep.reports) {
      os << x(static_cast<double>(r.m_used)) << ',' << y(r.signal) << ' ';
    }
    os << "\"/>\n";
    for (const auto& r : sweep.reports) {
      if (!r.signal_ci) continue;
      const double cx = x(static_cast<double>(r.m_used));
      os << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << y(r.signal_ci->lower)
         << "\" y2=\"" << y(r.signal_ci->upper) << "\" stroke=\"#1f4e9c\"/>\n";
    }
    for (const auto& r : sweep.reports) {
      os << "<text x=\"" << x(static_cast<double>(r.m_used)) - 4 << "\" y=\""
         << top + kPanelHeight + 14 << "\">" << r.m_used << "</text>\n";
    }
    os << "<text x=\"4\" y=\"" << top + 10 << "\">" << full_precision(hi).substr(0, 9)
       << "</text>\n<text x=\"4\" y=\"" << top + kPanelHeight << "\">"
       << full_precision(lo).substr(0, 9) << "</text>\n";
    top += kPanelHeight + kGap;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace xsnr
