#include "mcbd/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mcbd/errors.hpp"
#include "mcbd/experiments.hpp"

namespace mcbd::plots {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool has_columns(const CsvTable& t, std::initializer_list<const char*> names) {
  return std::all_of(names.begin(), names.end(), [&](const char* n) {
    return std::find(t.header.begin(), t.header.end(), n) != t.header.end();
  });
}

double number(const CsvTable& t, std::size_t row, const std::string& col) {
  const std::string& s = t.rows[row][t.column(col)];
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(row + 2, fmt::format("column {}: '{}' is not a number", col, s));
  }
}

std::optional<double> maybe_number(const CsvTable& t, std::size_t row, const std::string& col) {
  if (t.rows[row][t.column(col)] == "NA") return std::nullopt;
  return number(t, row, col);
}

// Linear blend between two RGB colours, t in [0, 1].
std::string blend(double t, int r0, int g0, int b0, int r1, int g1, int b1) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + t * (b - a))); };
  return fmt::format("#{:02x}{:02x}{:02x}", mix(r0, r1), mix(g0, g1), mix(b0, b1));
}

struct Svg {
  std::string body;
  int width;
  int height;

  void rect(double x, double y, double w, double h, const std::string& fill) {
    body += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="{}" stroke="#888" stroke-width="0.5"/>)"
                        "\n", x, y, w, h, fill);
  }
  void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 11) {
    body += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="{}" font-family="sans-serif" text-anchor="{}">{}</text>)"
                        "\n", x, y, size, anchor, s);
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double width = 2.0) {
    std::string coords;
    for (const auto& [x, y] : pts) coords += fmt::format("{:.1f},{:.1f} ", x, y);
    body += fmt::format(R"(<polyline points="{}" fill="none" stroke="{}" stroke-width="{:.1f}"/>)"
                        "\n", coords, color, width);
  }
  void circle(double x, double y, const std::string& color) {
    body += fmt::format(R"(<circle cx="{:.1f}" cy="{:.1f}" r="3" fill="{}"/>)" "\n", x, y, color);
  }
  void line(double x0, double y0, double x1, double y1, const char* color = "#000") {
    body += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="{}"/>)" "\n",
                        x0, y0, x1, y1, color);
  }

  void save(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)"
                       "\n", width, height, width, height)
        << R"(<rect width="100%" height="100%" fill="white"/>)" "\n"
        << body << "</svg>\n";
  }
};

struct Cell {
  double success_prob;
  std::optional<double> attempts;
};

// N along x, K along y (growing upward). The boundary is drawn through the top
// edge of the highest K row that does not exceed K*(N).
void heatmap(const std::map<std::pair<int, int>, Cell>& cells, const std::map<int, int>& k_star,
             bool attempts, const std::string& title, const fs::path& path) {
  std::set<int> ns, ks;
  double max_attempts = 0.0;
  for (const auto& [key, c] : cells) {
    ns.insert(key.first);
    ks.insert(key.second);
    if (c.attempts) max_attempts = std::max(max_attempts, *c.attempts);
  }
  const std::vector<int> nv(ns.begin(), ns.end()), kv(ks.begin(), ks.end());
  const double cw = std::max(24.0, 360.0 / nv.size());
  const double ch = std::max(12.0, 320.0 / kv.size());
  const double left = 60, top = 40;
  Svg svg{{}, static_cast<int>(left + cw * nv.size() + 130), static_cast<int>(top + ch * kv.size() + 60)};
  svg.text(left + cw * nv.size() / 2, 22, title, "middle", 14);

  auto row_y = [&](std::size_t i) { return top + ch * (kv.size() - 1 - i); };
  for (std::size_t i = 0; i < nv.size(); ++i) {
    for (std::size_t j = 0; j < kv.size(); ++j) {
      const auto it = cells.find({nv[i], kv[j]});
      std::string fill = "#dddddd";
      if (it != cells.end()) {
        if (!attempts) {
          fill = blend(it->second.success_prob, 0, 0, 0, 255, 255, 255);
        } else if (it->second.attempts) {
          const double t = max_attempts > 0 ? *it->second.attempts / max_attempts : 0.0;
          fill = blend(t, 255, 255, 255, 20, 40, 140);
        }
      }
      svg.rect(left + cw * i, row_y(j), cw, ch, fill);
    }
    svg.text(left + cw * (i + 0.5), top + ch * kv.size() + 16, std::to_string(nv[i]));
  }
  for (std::size_t j = 0; j < kv.size(); ++j) {
    svg.text(left - 6, row_y(j) + ch * 0.7, std::to_string(kv[j]), "end");
  }
  svg.text(left + cw * nv.size() / 2, top + ch * kv.size() + 36, "N (channels)");
  svg.text(16, top + ch * kv.size() / 2, "K", "middle", 12);

  std::vector<std::pair<double, double>> curve;
  for (std::size_t i = 0; i < nv.size(); ++i) {
    const auto ks_it = k_star.find(nv[i]);
    if (ks_it == k_star.end()) continue;
    const auto above = std::upper_bound(kv.begin(), kv.end(), ks_it->second);
    const std::size_t rows_below = static_cast<std::size_t>(above - kv.begin());
    const double y = top + ch * (kv.size() - rows_below);
    curve.emplace_back(left + cw * i, y);
    curve.emplace_back(left + cw * (i + 1), y);
  }
  if (!curve.empty()) svg.polyline(curve, "#e00000", 2.5);

  const double lx = left + cw * nv.size() + 20;
  for (int s = 0; s <= 10; ++s) {
    const double t = 1.0 - s / 10.0;
    const std::string fill = attempts ? blend(t, 255, 255, 255, 20, 40, 140)
                                      : blend(t, 0, 0, 0, 255, 255, 255);
    svg.rect(lx, top + s * 16, 18, 16, fill);
  }
  svg.text(lx + 24, top + 10, attempts ? fmt::format("{:.3g}", max_attempts) : "1", "start");
  svg.text(lx + 24, top + 170, "0", "start");
  if (attempts) {
    svg.rect(lx, top + 190, 18, 16, "#dddddd");
    svg.text(lx + 24, top + 202, "no success", "start");
  }
  svg.line(lx, top + 224, lx + 18, top + 224, "#e00000");
  svg.text(lx + 24, top + 228, "K*(N)", "start");
  svg.save(path);
}

void noise_chart(const CsvTable& t, const fs::path& path) {
  struct Point {
    double snr, err;
  };
  std::map<std::tuple<int, int, int>, std::vector<Point>> curves;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double snr = number(t, r, "snr_db");
    const double err = number(t, r, "mean_rel_err");
    if (!std::isfinite(snr) || !(err > 0.0)) continue;
    const auto key = std::make_tuple(static_cast<int>(number(t, r, "L")),
                                     static_cast<int>(number(t, r, "K")),
                                     static_cast<int>(number(t, r, "N")));
    curves[key].push_back({snr, err});
  }
  if (curves.empty()) throw ParseError(2, "noise CSV has no finite-SNR points with positive error");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto& [key, pts] : curves) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.snr < b.snr; });
    for (const auto& p : pts) {
      xmin = std::min(xmin, p.snr);
      xmax = std::max(xmax, p.snr);
      ymin = std::min(ymin, std::floor(std::log10(p.err)));
      ymax = std::max(ymax, std::ceil(std::log10(p.err)));
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double left = 70, top = 40, w = 420, h = 300;
  Svg svg{{}, static_cast<int>(left + w + 150), static_cast<int>(top + h + 60)};
  auto px = [&](double snr) { return left + w * (snr - xmin) / (xmax - xmin); };
  auto py = [&](double err) { return top + h * (ymax - std::log10(err)) / (ymax - ymin); };
  svg.text(left + w / 2, 22, "mean relative error vs SNR", "middle", 14);
  svg.line(left, top + h, left + w, top + h);
  svg.line(left, top, left, top + h);
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); ++e) {
    const double y = py(std::pow(10.0, e));
    svg.line(left, y, left + w, y, "#eeeeee");
    svg.text(left - 6, y + 4, fmt::format("1e{}", e), "end");
  }
  std::set<double> ticks;
  for (const auto& [key, pts] : curves) {
    for (const auto& p : pts) ticks.insert(p.snr);
  }
  for (double s : ticks) svg.text(px(s), top + h + 16, fmt::format("{:g}", s));
  svg.text(left + w / 2, top + h + 40, "SNR (dB)");

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::size_t idx = 0;
  for (const auto& [key, pts] : curves) {
    const std::string color = palette[idx % std::size(palette)];
    std::vector<std::pair<double, double>> line;
    for (const auto& p : pts) {
      line.emplace_back(px(p.snr), py(p.err));
      svg.circle(px(p.snr), py(p.err), color);
    }
    svg.polyline(line, color);
    const double ly = top + 10 + 18 * idx;
    svg.line(left + w + 20, ly, left + w + 40, ly, color.c_str());
    svg.text(left + w + 46, ly + 4,
             fmt::format("L={} K={} N={}", std::get<0>(key), std::get<1>(key), std::get<2>(key)),
             "start");
    ++idx;
  }
  svg.save(path);
}

CsvTable load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError(lineno, fmt::format("expected {} fields, got {}", t.header.size(), fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw ParseError(1, "empty CSV");
  return t;
}

CsvKind classify(const CsvTable& t) {
  if (has_columns(t, {"N", "K_star"})) return CsvKind::Boundary;
  if (has_columns(t, {"snr_db"})) {
    for (const char* c : {"L", "N", "K", "snr_db", "mean_rel_err"}) t.column(c);
    return CsvKind::NoiseSweep;
  }
  if (has_columns(t, {"success_prob"})) {
    for (const char* c : {"L", "N", "K", "success_prob", "mean_attempts_success"}) t.column(c);
    return CsvKind::PhaseGrid;
  }
  throw ParseError(1, "unrecognised CSV header (need success_prob, snr_db or K_star columns)");
}

std::vector<fs::path> render_plots(const std::vector<fs::path>& csv_paths, const fs::path& out_dir) {
  std::vector<std::pair<CsvTable, CsvKind>> tables;
  std::map<int, int> boundary;
  for (const auto& p : csv_paths) {
    CsvTable t = load(p);
    const CsvKind kind = classify(t);
    if (t.rows.empty()) throw ParseError(2, "CSV has a header but no data rows");
    if (kind == CsvKind::Boundary) {
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        boundary[static_cast<int>(number(t, r, "N"))] = static_cast<int>(number(t, r, "K_star"));
      }
    }
    tables.emplace_back(std::move(t), kind);
  }

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto& [t, kind] : tables) {
    if (kind == CsvKind::PhaseGrid) {
      std::map<std::pair<int, int>, Cell> cells;
      std::map<int, int> k_star = boundary;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int L = static_cast<int>(number(t, r, "L"));
        const int N = static_cast<int>(number(t, r, "N"));
        const int K = static_cast<int>(number(t, r, "K"));
        cells[{N, K}] = Cell{number(t, r, "success_prob"), maybe_number(t, r, "mean_attempts_success")};
        if (!k_star.count(N)) k_star[N] = experiments::information_limit(L, N);
      }
      heatmap(cells, k_star, false, "success probability", out_dir / "success_prob.svg");
      heatmap(cells, k_star, true, "mean attempts (successful trials)", out_dir / "attempts.svg");
      written.push_back(out_dir / "success_prob.svg");
      written.push_back(out_dir / "attempts.svg");
    } else if (kind == CsvKind::NoiseSweep) {
      noise_chart(t, out_dir / "error_vs_snr.svg");
      written.push_back(out_dir / "error_vs_snr.svg");
    }
  }
  return written;
}

}  // namespace mcbd::plots
