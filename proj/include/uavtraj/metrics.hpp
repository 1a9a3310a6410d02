#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavtraj/numerics.hpp"

namespace uavtraj::metrics {

struct MetricsReport {
  std::string model_id;
  std::string channel;
  std::string norm_method;
  std::size_t hidden_dim = 0;
  std::size_t num_layers = 0;

  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  // Empty when every target scalar is equal (R² undefined).
  std::optional<double> r2;
  std::optional<double> adjusted_r2;
  std::size_t n_samples = 0;

  // Auxiliary per-column (x, y, z) RMSE.
  std::array<double, 3> axis_rmse{};
};

/// MSE / RMSE / MAE / R² over every scalar of every (pred, target) pair,
/// with ȳ the mean of all target scalars.
MetricsReport evaluate(std::span<const Matrix> preds, std::span<const Matrix> targets);

/// R² / (128 + num_layers), the complexity-penalized score used for the
/// layer-depth sweep. Not the textbook adjusted R².
double adjusted_r2(double r2, std::size_t num_layers);

/// Fills model identity fields and adjusted R² (from num_layers).
void annotate(MetricsReport& report, std::string model_id, std::string channel, std::string norm_method,
              std::size_t hidden_dim, std::size_t num_layers);

/// "2.2E-08" style: scientific notation, two significant digits.
std::string format_sci(double v);

enum class Layout {
  Grid,        // one row per model
  Comparison,  // one row per metric, one column per model
};

struct RenderedTable {
  std::string text;
  std::string csv;
};

/// Rows/columns are ordered by model id (natural order, so GRU_2 < GRU_10).
RenderedTable report_table(std::vector<MetricsReport> reports, Layout layout);

/// model_id,channel,norm_method,hidden_dim,num_layers,mse,rmse,mae,r2,adjusted_r2,n_samples
std::string reports_to_csv(std::span<const MetricsReport> reports);
std::vector<MetricsReport> reports_from_csv(const std::string& csv, const std::string& origin = "<memory>");

}  // namespace uavtraj::metrics
