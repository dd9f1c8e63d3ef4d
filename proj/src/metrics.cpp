#include "wxscale/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "wxscale/error.hpp"
#include "wxscale/exact_sum.hpp"
#include "wxscale/parallel.hpp"

namespace wxscale {

namespace {

AreaWeights normalized(std::vector<double> row_weights, std::size_t lon_count) {
  ExactSum total;
  for (double w : row_weights) total.add(w);
  const double row_mean = total.value() / static_cast<double>(row_weights.size());
  if (!(row_mean > 0)) throw Error(ErrorCode::InvalidGrid, "all latitude rows have zero area weight");

  AreaWeights out;
  out.lat_count = row_weights.size();
  out.lon_count = lon_count;
  out.values.reserve(row_weights.size() * lon_count);
  for (double w : row_weights) {
    const double a = w / row_mean;
    out.values.insert(out.values.end(), lon_count, a);
  }
  return out;
}

double cos_deg(double deg) {
  // exact zeros at the poles
  if (std::fabs(deg) == 90.0) return 0.0;
  return std::max(0.0, std::cos(deg * std::numbers::pi / 180.0));
}

void require_matching(const FieldBatch& pred, const FieldBatch& truth, const AreaWeights& weights) {
  if (pred.batch() != truth.batch() || pred.lat_count() != truth.lat_count() ||
      pred.lon_count() != truth.lon_count() || pred.columns() != truth.columns()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and truth grids differ in shape or columns");
  }
  if (weights.cells() != pred.cells()) {
    throw Error(ErrorCode::ShapeMismatch, "area weights have " + std::to_string(weights.cells()) +
                                              " cells, fields have " + std::to_string(pred.cells()));
  }
  if (pred.batch() == 0) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  for (double v : pred.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "prediction contains NaN/Inf");
  }
  for (double v : truth.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "truth contains NaN/Inf");
  }
}

std::string format_level(double level) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, level);
  return std::string(buf, res.ptr);
}

// Batch mean of per-element values, combined exactly in index order.
template <typename PerElement>
double batch_mean(std::size_t batch, unsigned threads, PerElement&& per_element) {
  std::vector<double> per_batch(batch);
  parallel_for(batch, threads, [&](std::size_t b) { per_batch[b] = per_element(b); });
  ExactSum total;
  for (double v : per_batch) total.add(v);
  return total.value() / static_cast<double>(batch);
}

}  // namespace

AreaWeights area_weights(std::size_t lat_count, std::size_t lon_count) {
  if (lat_count < 2) throw Error(ErrorCode::InvalidGrid, "lat_count must be >= 2");
  if (lon_count < 1) throw Error(ErrorCode::InvalidGrid, "lon_count must be >= 1");
  std::vector<double> latitudes(lat_count);
  const double n = static_cast<double>(lat_count);
  for (std::size_t k = 0; k < lat_count; ++k) {
    const double kk = static_cast<double>(k);
    latitudes[k] = (lat_count % 2 == 1) ? -90.0 + 180.0 * kk / (n - 1.0) : -90.0 + 180.0 * (kk + 0.5) / n;
  }
  return area_weights_from_latitudes(latitudes, lon_count);
}

AreaWeights area_weights_from_latitudes(std::span<const double> latitudes_deg, std::size_t lon_count) {
  if (latitudes_deg.empty() || lon_count < 1) throw Error(ErrorCode::InvalidGrid, "empty grid");
  std::vector<double> rows;
  rows.reserve(latitudes_deg.size());
  for (double lat : latitudes_deg) {
    if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0) {
      throw Error(ErrorCode::InvalidGrid, "latitude out of range");
    }
    rows.push_back(cos_deg(lat));
  }
  return normalized(std::move(rows), lon_count);
}

std::vector<double> VariableSpec::level_weights() const {
  if (kind == VariableKind::Surface) return {1.0};
  ExactSum total;
  for (double p : levels) total.add(p);
  const double sum = total.value();
  std::vector<double> out;
  out.reserve(levels.size());
  for (double p : levels) out.push_back(p / sum);
  return out;
}

std::vector<std::string> VariableSpec::column_names() const {
  if (kind == VariableKind::Surface) return {name};
  std::vector<std::string> out;
  out.reserve(levels.size());
  for (double p : levels) out.push_back(name + format_level(p));
  return out;
}

double default_surface_weight(const std::string& name) {
  if (name == "10u" || name == "10v" || name == "msl") return 0.1;
  return 1.0;
}

void EvalConfig::validate() const {
  if (variables.empty()) throw Error(ErrorCode::InvalidConfig, "no variables configured");
  for (const auto& v : variables) {
    if (!(v.weight >= 0) || !std::isfinite(v.weight)) {
      throw Error(ErrorCode::InvalidConfig, v.name + ": loss weight must be >= 0");
    }
    if (!(v.inv_variance > 0) || !std::isfinite(v.inv_variance)) {
      throw Error(ErrorCode::InvalidConfig, v.name + ": inverse variance must be > 0");
    }
    if (v.kind == VariableKind::UpperAir) {
      if (v.levels.empty()) throw Error(ErrorCode::InvalidConfig, v.name + ": upper-air variable without levels");
      for (double p : v.levels) {
        if (!(p > 0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidConfig, v.name + ": levels must be > 0");
      }
    } else if (!v.levels.empty()) {
      throw Error(ErrorCode::InvalidConfig, v.name + ": surface variable with levels");
    }
  }
  if (!(total_weight() > 0)) throw Error(ErrorCode::InvalidConfig, "total loss weight must be > 0");
}

double EvalConfig::total_weight() const {
  ExactSum total;
  for (const auto& v : variables) total.add(v.weight);
  return total.value();
}

FieldBatch::FieldBatch(std::size_t batch, std::size_t lat_count, std::size_t lon_count,
                       std::vector<std::string> columns)
    : batch_(batch), lat_(lat_count), lon_(lon_count), columns_(std::move(columns)),
      values_(batch * lat_count * lon_count * columns_.size(), 0.0) {}

FieldBatch::FieldBatch(std::size_t batch, std::size_t lat_count, std::size_t lon_count,
                       std::vector<std::string> columns, std::vector<double> values)
    : batch_(batch), lat_(lat_count), lon_(lon_count), columns_(std::move(columns)), values_(std::move(values)) {
  if (values_.size() != batch_ * lat_ * lon_ * columns_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "value count does not match batch x lat x lon x columns");
  }
}

std::size_t FieldBatch::column_index(const std::string& name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw Error(ErrorCode::UnknownVariable, "no column '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

double weighted_mse(const FieldBatch& pred, const FieldBatch& truth, const AreaWeights& weights,
                    const EvalConfig& cfg, unsigned threads) {
  cfg.validate();
  require_matching(pred, truth, weights);

  // Column coefficient s_j * (w_j * level_weight / W), in configuration order.
  struct Column {
    std::size_t index;
    double coef;
  };
  std::vector<Column> cols;
  const double total_w = cfg.total_weight();
  for (const auto& v : cfg.variables) {
    const auto names = v.column_names();
    const auto lw = v.level_weights();
    for (std::size_t k = 0; k < names.size(); ++k) {
      cols.push_back({pred.column_index(names[k]), v.inv_variance * (v.weight * lw[k] / total_w)});
    }
  }

  const std::size_t cells = pred.cells();
  return batch_mean(pred.batch(), threads, [&](std::size_t b) {
    ExactSum sum;
    for (const Column& c : cols) {
      for (std::size_t i = 0; i < cells; ++i) {
        const double e = pred.at(b, i, c.index) - truth.at(b, i, c.index);
        sum.add(c.coef * weights.values[i] * (e * e));
      }
    }
    return sum.value() / static_cast<double>(cells);
  });
}

double per_variable_mse(const FieldBatch& pred, const FieldBatch& truth, const AreaWeights& weights,
                        const std::string& column, unsigned threads) {
  return per_variable_mse(pred, truth, weights, pred.column_index(column), threads);
}

double per_variable_mse(const FieldBatch& pred, const FieldBatch& truth, const AreaWeights& weights,
                        std::size_t column, unsigned threads) {
  require_matching(pred, truth, weights);
  if (column >= pred.columns().size()) {
    throw Error(ErrorCode::UnknownVariable, "column index " + std::to_string(column) + " out of range");
  }
  const std::size_t cells = pred.cells();
  return batch_mean(pred.batch(), threads, [&](std::size_t b) {
    ExactSum sum;
    for (std::size_t i = 0; i < cells; ++i) {
      const double e = pred.at(b, i, column) - truth.at(b, i, column);
      sum.add(weights.values[i] * (e * e));
    }
    return sum.value() / static_cast<double>(cells);
  });
}

double crps_ensemble(const EnsembleSample& sample, bool fair) {
  const auto& x = sample.members;
  if (x.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble has no members");
  if (!std::isfinite(sample.observation)) throw Error(ErrorCode::NonFiniteInput, "observation is not finite");
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "ensemble member is not finite");
  }
  const std::size_t n = x.size();
  if (fair && n < 2) throw Error(ErrorCode::InvalidInput, "fair CRPS needs at least two members");
  const double nd = static_cast<double>(n);

  ExactSum skill;
  for (double v : x) skill.add(std::fabs(v - sample.observation));

  // sum_ij |x_i - x_j| = 2 sum_k (2k - n + 1) x_(k) over the sorted members
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  ExactSum spread;
  for (std::size_t k = 0; k < n; ++k) {
    const double coef = 2.0 * (2.0 * static_cast<double>(k) - nd + 1.0);
    spread.add(coef * sorted[k]);
  }
  const double denom = fair ? 2.0 * nd * (nd - 1.0) : 2.0 * nd * nd;
  return skill.value() / nd - spread.value() / denom;
}

double crps_integral_oracle(const EnsembleSample& sample, double step) {
  const auto& x = sample.members;
  if (x.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble has no members");
  if (!(step > 0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidInput, "integration step must be > 0");
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  const double obs = sample.observation;

  std::vector<double> breaks(sorted);
  breaks.push_back(obs);
  std::sort(breaks.begin(), breaks.end());
  const double lo = breaks.front() - 1.0;
  const double hi = breaks.back() + 1.0;
  const double nd = static_cast<double>(sorted.size());

  std::size_t below = 0;  // members <= current midpoint
  auto integrand = [&](double y) {
    while (below < sorted.size() && sorted[below] <= y) ++below;
    const double f = static_cast<double>(below) / nd - (y >= obs ? 1.0 : 0.0);
    return f * f;
  };

  // Neumaier-compensated running sum over cells in increasing y.
  double sum = 0.0, comp = 0.0;
  auto accumulate = [&](double a, double b) {
    if (!(b > a)) return;
    const double term = integrand(0.5 * (a + b)) * (b - a);
    const double t = sum + term;
    comp += (std::fabs(sum) >= std::fabs(term)) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  };

  const auto cells = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  std::size_t next_break = 0;
  double left = lo;
  for (std::size_t k = 1; k <= cells; ++k) {
    const double right = std::min(hi, lo + static_cast<double>(k) * step);
    while (next_break < breaks.size() && breaks[next_break] < right) {
      if (breaks[next_break] > left) {
        accumulate(left, breaks[next_break]);
        left = breaks[next_break];
      }
      ++next_break;
    }
    accumulate(left, right);
    left = right;
  }
  return sum + comp;
}

}  // namespace wxscale
