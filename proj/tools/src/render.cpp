#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "priu/error.hpp"
#include "priu_tools/experiment.hpp"

namespace priu::tools {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 150, kTop = 30, kBottom = 50;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v, const char* fmt = "%.4g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string cell(const Json& r, const char* key, const char* fmt = "%.4g") {
  if (!r.contains(key) || r[key].is_null()) return "";
  const Json& v = r[key];
  if (v.is_number_float()) return num(v.get<double>(), fmt);
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_time_plot(const std::vector<Json>& records) {
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& r : records) {
    if (r.value("scenario", "") != "rate" || !r["rate"].is_number() || !r["update_seconds"].is_number())
      continue;
    const double rate = r["rate"].get<double>(), secs = r["update_seconds"].get<double>();
    if (rate > 0 && secs > 0) series[r["method"].get<std::string>()].emplace_back(rate, secs);
  }
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (auto& [name, pts] : series) {
    std::sort(pts.begin(), pts.end());
    for (auto [x, y] : pts) {
      x0 = std::min(x0, std::log10(x));
      x1 = std::max(x1, std::log10(x));
      y0 = std::min(y0, std::log10(y));
      y1 = std::max(y1, std::log10(y));
    }
  }
  if (series.empty()) x0 = -4, x1 = 0, y0 = -3, y1 = 0;
  x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (std::log10(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (std::log10(y) - y0) / (y1 - y0) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(x0); e <= static_cast<int>(x1); ++e) {
    const double x = px(std::pow(10.0, e));
    s << "<line x1=\"" << x << "\" y1=\"" << kTop << "\" x2=\"" << x << "\" y2=\"" << kTop + ph
      << "\" stroke=\"#ddd\"/>\n<text x=\"" << x << "\" y=\"" << kTop + ph + 18
      << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    const double y = py(std::pow(10.0, e));
    s << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + pw << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4
      << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
    << "\" text-anchor=\"middle\">deletion rate</text>\n";
  s << "<text transform=\"translate(16," << kTop + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">update time (s)</text>\n";
  std::size_t k = 0;
  for (const auto& [name, pts] : series) {
    const char* color = kColors[k % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : pts) s << px(x) << ',' << py(y) << ' ';
    s << "\"/>\n";
    for (auto [x, y] : pts)
      s << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = kTop + 10 + 18 * static_cast<double>(k);
    s << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 30 << "\" y2=\""
      << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n<text x=\"" << kLeft + pw + 36
      << "\" y=\"" << ly + 4 << "\">" << escape(name) << "</text>\n";
    ++k;
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_table(const std::vector<Json>& records) {
  std::ostringstream s;
  s << "| scenario | rate | subset | method | removed | update (s) | reference | L2 | cosine | validation | "
       "error |\n";
  s << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : records) {
    std::string validation = cell(r, "validation_value");
    if (!validation.empty()) validation = cell(r, "validation_metric") + " " + validation;
    s << "| " << cell(r, "scenario") << " | " << cell(r, "rate", "%g") << " | " << cell(r, "subset") << " | "
      << cell(r, "method") << " | " << cell(r, "removed") << " | " << cell(r, "update_seconds") << " | "
      << cell(r, "reference") << " | " << cell(r, "l2_to_reference", "%.3e") << " | "
      << cell(r, "cosine_to_reference", "%.6f") << " | " << validation << " | " << cell(r, "error") << " |\n";
  }
  return s.str();
}

void render_report(const std::vector<Json>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream svg(dir / "update_time.svg");
  require(svg.good(), ErrorCode::kData, "cannot write into '" + dir.string() + "'");
  svg << render_time_plot(records);
  std::ofstream md(dir / "summary.md");
  require(md.good(), ErrorCode::kData, "cannot write into '" + dir.string() + "'");
  md << "# Deletion sweep\n\n![update time](update_time.svg)\n\n" << render_table(records);
}

}  // namespace priu::tools
