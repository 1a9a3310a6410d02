#include "uavtraj/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace uavtraj::metrics {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_sci(const std::optional<double>& v) { return v ? format_sci(*v) : "null"; }
std::string opt17(const std::optional<double>& v) { return v ? fmt17(*v) : "null"; }

// Digit runs compare numerically so GRU_2 sorts before GRU_10.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const std::string na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      const auto ta = na.substr(std::min(na.find_first_not_of('0'), na.size()));
      const auto tb = nb.substr(std::min(nb.find_first_not_of('0'), nb.size()));
      if (ta.size() != tb.size()) return ta.size() < tb.size();
      if (ta != tb) return ta < tb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      if (c) out += " | ";
      out += rows[i][c];
      out.append(width[c] - rows[i][c].size(), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (i == 0) {
      for (std::size_t c = 0; c < width.size(); ++c) {
        if (c) out += "-+-";
        out.append(width[c], '-');
      }
      out += '\n';
    }
  }
  return out;
}

std::string to_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) out += ',';
      out += r[c];
    }
    out += '\n';
  }
  return out;
}

}  // namespace

MetricsReport evaluate(std::span<const Matrix> preds, std::span<const Matrix> targets) {
  if (preds.empty()) throw Error(ErrorKind::EmptyInput, "no predictions to evaluate");
  if (preds.size() != targets.size()) throw Error(ErrorKind::DimensionMismatch, "prediction/target counts differ");

  std::size_t n = 0;
  double y_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].rows() != targets[i].rows() || preds[i].cols() != targets[i].cols()) {
      throw Error(ErrorKind::DimensionMismatch, "pair " + std::to_string(i) + " shapes differ");
    }
    for (double y : targets[i].values()) y_sum += y;
    n += targets[i].size();
  }
  if (n == 0) throw Error(ErrorKind::EmptyInput, "pairs contain no values");
  const double y_mean = y_sum / static_cast<double>(n);

  double sq = 0.0, ab = 0.0, tot = 0.0;
  std::array<double, 3> axis_sq{};
  std::array<std::size_t, 3> axis_n{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = preds[i].values();
    const auto t = targets[i].values();
    const std::size_t cols = preds[i].cols();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double e = t[j] - p[j];
      sq += e * e;
      ab += std::abs(e);
      tot += (t[j] - y_mean) * (t[j] - y_mean);
      if (cols == 3) {
        axis_sq[j % 3] += e * e;
        axis_n[j % 3] += 1;
      }
    }
  }

  MetricsReport r;
  const auto nd = static_cast<double>(n);
  r.mse = sq / nd;
  r.rmse = std::sqrt(r.mse);
  r.mae = ab / nd;
  if (tot > 0.0) r.r2 = 1.0 - sq / tot;
  r.n_samples = preds.size();
  for (std::size_t a = 0; a < 3; ++a) {
    r.axis_rmse[a] = axis_n[a] ? std::sqrt(axis_sq[a] / static_cast<double>(axis_n[a])) : 0.0;
  }
  return r;
}

double adjusted_r2(double r2, std::size_t num_layers) {
  if (num_layers == 0) throw Error(ErrorKind::InvalidArgument, "num_layers must be >= 1");
  return r2 / (128.0 + static_cast<double>(num_layers));
}

void annotate(MetricsReport& report, std::string model_id, std::string channel, std::string norm_method,
              std::size_t hidden_dim, std::size_t num_layers) {
  report.model_id = std::move(model_id);
  report.channel = std::move(channel);
  report.norm_method = std::move(norm_method);
  report.hidden_dim = hidden_dim;
  report.num_layers = num_layers;
  report.adjusted_r2.reset();
  if (report.r2 && num_layers > 0) report.adjusted_r2 = adjusted_r2(*report.r2, num_layers);
}

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1E", v);
  return buf;
}

RenderedTable report_table(std::vector<MetricsReport> reports, Layout layout) {
  if (reports.empty()) throw Error(ErrorKind::EmptyInput, "no reports to tabulate");
  std::stable_sort(reports.begin(), reports.end(),
                   [](const MetricsReport& a, const MetricsReport& b) { return natural_less(a.model_id, b.model_id); });

  std::vector<std::vector<std::string>> rows;
  if (layout == Layout::Grid) {
    rows.push_back({"model_id", "channel", "norm_method", "hidden_dim", "num_layers", "mse", "rmse", "mae", "r2",
                    "adjusted_r2", "n_samples"});
    for (const auto& r : reports) {
      rows.push_back({r.model_id, r.channel, r.norm_method, std::to_string(r.hidden_dim), std::to_string(r.num_layers),
                      format_sci(r.mse), format_sci(r.rmse), format_sci(r.mae), opt_sci(r.r2), opt_sci(r.adjusted_r2),
                      std::to_string(r.n_samples)});
    }
  } else {
    std::vector<std::string> header{"metric"};
    for (const auto& r : reports) header.push_back(r.model_id);
    rows.push_back(header);
    auto metric_row = [&](const char* name, auto&& get) {
      std::vector<std::string> row{name};
      for (const auto& r : reports) row.push_back(get(r));
      rows.push_back(std::move(row));
    };
    metric_row("mse", [](const MetricsReport& r) { return format_sci(r.mse); });
    metric_row("rmse", [](const MetricsReport& r) { return format_sci(r.rmse); });
    metric_row("mae", [](const MetricsReport& r) { return format_sci(r.mae); });
    metric_row("r2", [](const MetricsReport& r) { return opt_sci(r.r2); });
    metric_row("adjusted_r2", [](const MetricsReport& r) { return opt_sci(r.adjusted_r2); });
  }
  return {render(rows), to_csv(rows)};
}

std::string reports_to_csv(std::span<const MetricsReport> reports) {
  std::string out = "model_id,channel,norm_method,hidden_dim,num_layers,mse,rmse,mae,r2,adjusted_r2,n_samples\n";
  for (const auto& r : reports) {
    out += r.model_id + ',' + r.channel + ',' + r.norm_method + ',' + std::to_string(r.hidden_dim) + ',' +
           std::to_string(r.num_layers) + ',' + fmt17(r.mse) + ',' + fmt17(r.rmse) + ',' + fmt17(r.mae) + ',' +
           opt17(r.r2) + ',' + opt17(r.adjusted_r2) + ',' + std::to_string(r.n_samples) + '\n';
  }
  return out;
}

std::vector<MetricsReport> reports_from_csv(const std::string& csv, const std::string& origin) {
  std::istringstream is(csv);
  std::string line;
  std::size_t line_no = 0;
  std::vector<MetricsReport> out;
  auto num = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
      throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
  };
  auto opt = [&](const std::string& s) -> std::optional<double> {
    if (s == "null") return std::nullopt;
    return num(s);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1) {
      if (line.rfind("model_id,", 0) != 0) throw Error(ErrorKind::ParseError, origin + ":1: missing metrics header");
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 11) {
      throw Error(ErrorKind::ParseError, origin + ":" + std::to_string(line_no) + ": expected 11 fields");
    }
    MetricsReport r;
    r.model_id = f[0];
    r.channel = f[1];
    r.norm_method = f[2];
    r.hidden_dim = static_cast<std::size_t>(num(f[3]));
    r.num_layers = static_cast<std::size_t>(num(f[4]));
    r.mse = num(f[5]);
    r.rmse = num(f[6]);
    r.mae = num(f[7]);
    r.r2 = opt(f[8]);
    r.adjusted_r2 = opt(f[9]);
    r.n_samples = static_cast<std::size_t>(num(f[10]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace uavtraj::metrics
