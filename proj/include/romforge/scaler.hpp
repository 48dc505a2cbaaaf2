#pragma once

#include <string>

#include <json.hpp>

#include "romforge/types.hpp"

namespace romforge::ml {

enum class ScalerKind { kNone, kZScore, kMinMax };

std::string to_string(ScalerKind kind);
ScalerKind scaler_kind_from_string(const std::string& s);

/// "zscore", "minmax", "none", or any of them prefixed with "log-" ("log" alone = log + none).
struct ScalingSpec {
  ScalerKind kind = ScalerKind::kZScore;
  bool log = false;
};
std::string to_string(const ScalingSpec& s);
ScalingSpec scaling_from_string(const std::string& s);

/// Per-column affine map x -> (x - offset) / scale, optionally after y = log(sign * x).
/// z-score: offset = mean, scale = population std; min-max: offset = min, scale = max - min.
/// The scale is floored at 1e-12 (1 + |offset|) so constant columns map to 0 and back exactly.
/// The log variant needs every column to keep one strict sign.
struct Scaler {
  ScalerKind kind = ScalerKind::kNone;
  bool log = false;
  Vector sign;  ///< +1 / -1 per column (log variant only)
  Vector offset;
  Vector scale;

  /// Rows of `x` are samples.
  static Scaler fit(const Matrix& x, ScalerKind kind, bool log = false);

  int dims() const { return static_cast<int>(offset.size()); }
  Matrix apply(const Matrix& x) const;
  Vector apply(const Vector& x) const;
  Matrix invert(const Matrix& z) const;
  Vector invert(const Vector& z) const;
};

/// Shorthand for Scaler::fit(x, ScalerKind::kZScore).
Scaler zscore_fit(const Matrix& x);

nlohmann::json scaler_to_json(const Scaler& s);
Scaler scaler_from_json(const nlohmann::json& j);

}  // namespace romforge::ml
