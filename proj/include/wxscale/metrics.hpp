#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wxscale {

/// Per-cell area weights for a lat-lon grid, row-major (latitude, longitude),
/// normalized to mean 1.
struct AreaWeights {
  std::size_t lat_count = 0;
  std::size_t lon_count = 0;
  std::vector<double> values;

  std::size_t cells() const { return values.size(); }
};

/// Cosine-latitude weights. Odd `lat_count` places rows uniformly from -90 to
/// +90 inclusive (721 rows -> 0.25 degree with both poles); even counts use
/// cell-centred rows. Throws InvalidGrid for lat_count < 2 or lon_count < 1.
AreaWeights area_weights(std::size_t lat_count, std::size_t lon_count);

/// Cosine weights for explicit row latitudes (degrees). Throws InvalidGrid if
/// every row has zero weight.
AreaWeights area_weights_from_latitudes(std::span<const double> latitudes_deg, std::size_t lon_count);

enum class VariableKind { Surface, UpperAir };

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::Surface;
  std::vector<double> levels;  // hPa, upper-air only
  double weight = 1.0;         // w_j
  double inv_variance = 1.0;   // s_j = 1 / sigma^2

  // Per-level sub-weights p / sum(p); {1.0} for surface variables.
  std::vector<double> level_weights() const;
  // Column names: "2t" for surface, "z500", "z850", ... for upper-air.
  std::vector<std::string> column_names() const;
};

// Surface defaults: 2t -> 1.0; 10u, 10v, msl -> 0.1; anything else 1.0.
double default_surface_weight(const std::string& name);

struct EvalConfig {
  std::vector<VariableSpec> variables;
  double lead_time_hours = 6.0;

  // Throws InvalidConfig on negative weights, non-positive s_j, missing or
  // non-positive levels, or a zero total weight.
  void validate() const;
  double total_weight() const;
};

/// Gridded values for a batch of initialization times:
/// values[((b * cells) + i) * columns + j].
class FieldBatch {
 public:
  FieldBatch() = default;
  FieldBatch(std::size_t batch, std::size_t lat_count, std::size_t lon_count, std::vector<std::string> columns);
  FieldBatch(std::size_t batch, std::size_t lat_count, std::size_t lon_count, std::vector<std::string> columns,
             std::vector<double> values);

  std::size_t batch() const { return batch_; }
  std::size_t lat_count() const { return lat_; }
  std::size_t lon_count() const { return lon_; }
  std::size_t cells() const { return lat_ * lon_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double& at(std::size_t b, std::size_t cell, std::size_t col) {
    return values_[(b * cells() + cell) * columns_.size() + col];
  }
  double at(std::size_t b, std::size_t cell, std::size_t col) const {
    return values_[(b * cells() + cell) * columns_.size() + col];
  }

  // Index of a column; throws UnknownVariable.
  std::size_t column_index(const std::string& name) const;

  friend bool operator==(const FieldBatch&, const FieldBatch&) = default;

 private:
  std::size_t batch_ = 0, lat_ = 0, lon_ = 0;
  std::vector<std::string> columns_;
  std::vector<double> values_;
};

/// Unified validation loss: batch mean of the cell mean of
/// sum_j s_j (w_j / W) a_i (pred - truth)^2, with upper-air variables expanded
/// over their levels. Terms are summed exactly, so the value is independent of
/// variable/cell order and of `threads`.
double weighted_mse(const FieldBatch& pred, const FieldBatch& truth, const AreaWeights& weights,
                    const EvalConfig& cfg, unsigned threads = 1);

/// Area-weighted MSE of one column, with no variance or loss weighting.
double per_variable_mse(const FieldBatch& pred, const FieldBatch& truth, const AreaWeights& weights,
                        const std::string& column, unsigned threads = 1);
double per_variable_mse(const FieldBatch& pred, const FieldBatch& truth, const AreaWeights& weights,
                        std::size_t column, unsigned threads = 1);

struct EnsembleSample {
  std::vector<double> members;
  double observation = 0.0;
};

/// (1/N) sum |x_i - x| - 1/(2N^2) sum_ij |x_i - x_j|; with `fair` the second
/// term uses 1/(2N(N-1)). Throws EmptyEnsemble / NonFiniteInput.
double crps_ensemble(const EnsembleSample& sample, bool fair = false);

/// Quadrature of the integral of (F(y) - 1{y >= x})^2 over
/// [min - 1, max + 1] with the empirical CDF F. Composite midpoint rule on a
/// uniform grid of spacing `step`, with members and the observation inserted
/// as extra nodes so no cell straddles a jump.
double crps_integral_oracle(const EnsembleSample& sample, double step);

}  // namespace wxscale
