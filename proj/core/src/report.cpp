#include "qsynth/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "qsynth/experiment.hpp"
#include "qsynth/stats.hpp"

namespace fs = std::filesystem;

namespace qsynth {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::vector<SeriesPoint> aggregate_series(const std::vector<std::vector<EvalPoint>>& runs,
                                          double EvalPoint::*field) {
  std::map<long, std::vector<double>> by_step;
  for (const auto& run : runs)
    for (const EvalPoint& p : run) by_step[p.step].push_back(p.*field);
  std::vector<SeriesPoint> out;
  out.reserve(by_step.size());
  for (const auto& [step, values] : by_step) {
    const MeanCi ci = normal_ci95(values);
    out.push_back({step, ci.mean, ci.degenerate ? ci.mean : ci.ci_low,
                   ci.degenerate ? ci.mean : ci.ci_high, ci.count});
  }
  return out;
}

std::string render_series_svg(const std::string& title,
                              const std::vector<SeriesPoint>& points) {
  const int width = 640, height = 400;
  const int ml = 60, mr = 20, mt = 40, mb = 40;  // margins
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  if (!points.empty()) {
    long x_min = points.front().step, x_max = points.back().step;
    if (x_min == x_max) x_max = x_min + 1;
    double y_min = points.front().ci_low, y_max = points.front().ci_high;
    for (const SeriesPoint& p : points) {
      y_min = std::min(y_min, p.ci_low);
      y_max = std::max(y_max, p.ci_high);
    }
    if (y_max - y_min < 1e-12) {
      y_min -= 0.5;
      y_max += 0.5;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const auto sx = [&](double step) {
      return ml + (step - x_min) / static_cast<double>(x_max - x_min) *
                      (width - ml - mr);
    };
    const auto sy = [&](double v) {
      return height - mb - (v - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    // CI band
    std::ostringstream band;
    for (const SeriesPoint& p : points)
      band << sx(p.step) << ',' << sy(p.ci_high) << ' ';
    for (auto it = points.rbegin(); it != points.rend(); ++it)
      band << sx(it->step) << ',' << sy(it->ci_low) << ' ';
    os << "<polygon points=\"" << band.str()
       << "\" fill=\"#4682b4\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";

    // mean line
    std::ostringstream line;
    for (const SeriesPoint& p : points) line << sx(p.step) << ',' << sy(p.mean) << ' ';
    os << "<polyline points=\"" << line.str()
       << "\" fill=\"none\" stroke=\"#4682b4\" stroke-width=\"2\"/>\n";

    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
       << width - mr << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double v = y_min + (y_max - y_min) * i / 4.0;
      os << "<text x=\"" << ml - 6 << "\" y=\"" << sy(v) + 4
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
         << fmt4(v) << "</text>\n";
      const double st = x_min + (x_max - x_min) * i / 4.0;
      os << "<text x=\"" << sx(st) << "\" y=\"" << height - mb + 16
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
         << static_cast<long>(st) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir,
               bool render_svg) {
  try {
    if (run_dirs.empty()) throw ConfigError("report: no run directories given");

    struct RunData {
      std::string label;
      std::vector<std::vector<EvalPoint>> reps;
    };
    std::vector<RunData> runs;
    for (const std::string& dir : run_dirs) {
      if (!fs::exists(fs::path(dir) / "manifest.json"))
        throw ConfigError("report: '" + dir + "' has no manifest.json");
      RunData data;
      data.label = fs::path(dir).filename().string();
      if (data.label.empty()) data.label = fs::path(dir).parent_path().filename().string();
      std::vector<std::string> csvs;
      for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("run_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
          csvs.push_back(entry.path().string());
      }
      std::sort(csvs.begin(), csvs.end());
      if (csvs.empty()) throw ConfigError("report: '" + dir + "' has no run_*.csv files");
      for (const std::string& path : csvs) data.reps.push_back(read_metrics_csv(path));
      runs.push_back(std::move(data));
    }

    fs::create_directories(out_dir);
    const std::vector<std::pair<std::string, double EvalPoint::*>> metrics = {
        {"mean_fidelity", &EvalPoint::mean_fidelity},
        {"success_rate", &EvalPoint::success_rate},
        {"mean_rcd", &EvalPoint::mean_rcd},
        {"mean_ep_len", &EvalPoint::mean_ep_len},
    };

    std::ofstream summary(fs::path(out_dir) / "summary.csv");
    summary << "run,reps,final_step,success_mean,success_ci_low,success_ci_high,"
               "fidelity_mean,fidelity_ci_low,fidelity_ci_high,rcd_mean\n";
    std::cout << "run                          reps  success [95% CI]          fidelity\n";

    for (const RunData& run : runs) {
      for (const auto& [name, field] : metrics) {
        const std::vector<SeriesPoint> series = aggregate_series(run.reps, field);
        std::ofstream os(fs::path(out_dir) / (run.label + "_" + name + ".csv"));
        os << "step,mean,ci_low,ci_high\n";
        for (const SeriesPoint& p : series)
          os << p.step << ',' << fmt17(p.mean) << ',' << fmt17(p.ci_low) << ','
             << fmt17(p.ci_high) << '\n';
        if (render_svg) {
          std::ofstream svg(fs::path(out_dir) / (run.label + "_" + name + ".svg"));
          svg << render_series_svg(run.label + ": " + name, series);
        }
      }

      std::vector<double> final_success, final_fidelity, final_rcd;
      long final_step = 0;
      for (const auto& rep : run.reps) {
        if (rep.empty()) continue;
        final_success.push_back(rep.back().success_rate);
        final_fidelity.push_back(rep.back().mean_fidelity);
        final_rcd.push_back(rep.back().mean_rcd);
        final_step = std::max(final_step, rep.back().step);
      }
      const MeanCi s = normal_ci95(final_success);
      const MeanCi f = normal_ci95(final_fidelity);
      const MeanCi r = normal_ci95(final_rcd);
      summary << run.label << ',' << run.reps.size() << ',' << final_step << ','
              << fmt17(s.mean) << ',' << fmt17(s.ci_low) << ',' << fmt17(s.ci_high)
              << ',' << fmt17(f.mean) << ',' << fmt17(f.ci_low) << ','
              << fmt17(f.ci_high) << ',' << fmt17(r.mean) << '\n';
      std::ostringstream row;
      row.width(28);
      std::cout << run.label.substr(0, 27);
      for (std::size_t i = run.label.size(); i < 29; ++i) std::cout << ' ';
      std::cout << run.reps.size() << "     " << fmt4(s.mean) << " [" << fmt4(s.ci_low)
                << ", " << fmt4(s.ci_high) << "]   " << fmt4(f.mean) << '\n';
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace qsynth
