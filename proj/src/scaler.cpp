#include "romforge/scaler.hpp"

#include <cmath>

#include "romforge/error.hpp"

namespace romforge::ml {

std::string to_string(ScalerKind kind) {
  switch (kind) {
    case ScalerKind::kNone: return "none";
    case ScalerKind::kZScore: return "zscore";
    case ScalerKind::kMinMax: return "minmax";
  }
  return "none";
}

ScalerKind scaler_kind_from_string(const std::string& s) {
  if (s == "none") return ScalerKind::kNone;
  if (s == "zscore") return ScalerKind::kZScore;
  if (s == "minmax") return ScalerKind::kMinMax;
  throw UsageError("unknown scaler '" + s + "' (expected none, zscore or minmax)");
}

std::string to_string(const ScalingSpec& s) {
  if (!s.log) return to_string(s.kind);
  return s.kind == ScalerKind::kNone ? "log" : "log-" + to_string(s.kind);
}

ScalingSpec scaling_from_string(const std::string& s) {
  if (s == "log") return {ScalerKind::kNone, true};
  if (s.rfind("log-", 0) == 0) return {scaler_kind_from_string(s.substr(4)), true};
  return {scaler_kind_from_string(s), false};
}

namespace {

Matrix log_columns(const Matrix& x, const Vector& sign) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double v = sign[c] * x(r, c);
      if (!(v > 0.0))
        throw DataError("scaler: log scaling of column " + std::to_string(c) + " met a value of the wrong sign or zero");
      y(r, c) = std::log(v);
    }
  return y;
}

}  // namespace

Scaler Scaler::fit(const Matrix& x_in, ScalerKind kind, bool log) {
  if (x_in.rows() == 0) throw DataError("scaler: no samples to fit");
  if (!x_in.allFinite()) throw DataError("scaler: non-finite values in fit data");
  Scaler s;
  s.kind = kind;
  s.log = log;
  const Eigen::Index f = x_in.cols();
  Matrix logged;
  if (log) {
    s.sign = Vector::Ones(f);
    for (Eigen::Index c = 0; c < f; ++c)
      if (x_in(0, c) < 0.0) s.sign[c] = -1.0;
    logged = log_columns(x_in, s.sign);
  }
  const Matrix& x = log ? logged : x_in;
  s.offset = Vector::Zero(f);
  s.scale = Vector::Ones(f);
  if (kind == ScalerKind::kNone) return s;
  for (Eigen::Index c = 0; c < f; ++c) {
    double off = 0.0, sc = 1.0;
    if (kind == ScalerKind::kZScore) {
      off = x.col(c).mean();
      sc = std::sqrt((x.col(c).array() - off).square().mean());
    } else {
      off = x.col(c).minCoeff();
      sc = x.col(c).maxCoeff() - off;
    }
    s.offset[c] = off;
    s.scale[c] = std::max(sc, 1e-12 * (1.0 + std::abs(off)));
  }
  return s;
}

Matrix Scaler::apply(const Matrix& x) const {
  if (x.cols() != offset.size())
    throw DataError("scaler: expected " + std::to_string(offset.size()) + " columns, got " + std::to_string(x.cols()));
  const Matrix y = log ? log_columns(x, sign) : x;
  return (y.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array();
}

Vector Scaler::apply(const Vector& x) const {
  if (x.size() != offset.size())
    throw DataError("scaler: expected " + std::to_string(offset.size()) + " values, got " + std::to_string(x.size()));
  return apply(Matrix(x.transpose())).row(0).transpose();
}

Matrix Scaler::invert(const Matrix& z) const {
  if (z.cols() != offset.size())
    throw DataError("scaler: expected " + std::to_string(offset.size()) + " columns, got " + std::to_string(z.cols()));
  Matrix y = (z.array().rowwise() * scale.transpose().array()).matrix().rowwise() + offset.transpose();
  if (log)
    for (Eigen::Index c = 0; c < y.cols(); ++c) y.col(c) = sign[c] * y.col(c).array().exp().matrix();
  return y;
}

Vector Scaler::invert(const Vector& z) const {
  if (z.size() != offset.size())
    throw DataError("scaler: expected " + std::to_string(offset.size()) + " values, got " + std::to_string(z.size()));
  return invert(Matrix(z.transpose())).row(0).transpose();
}

Scaler zscore_fit(const Matrix& x) { return Scaler::fit(x, ScalerKind::kZScore); }

nlohmann::json scaler_to_json(const Scaler& s) {
  nlohmann::json j = {{"kind", to_string(s.kind)},
          {"log", s.log},
          {"offset", std::vector<double>(s.offset.data(), s.offset.data() + s.offset.size())},
          {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())}};
  if (s.log) j["sign"] = std::vector<double>(s.sign.data(), s.sign.data() + s.sign.size());
  return j;
}

Scaler scaler_from_json(const nlohmann::json& j) {
  try {
    Scaler s;
    s.kind = scaler_kind_from_string(j.at("kind").get<std::string>());
    const auto off = j.at("offset").get<std::vector<double>>();
    const auto sc = j.at("scale").get<std::vector<double>>();
    if (off.size() != sc.size()) throw DataError("scaler: offset and scale lengths differ");
    s.offset = Eigen::Map<const Vector>(off.data(), static_cast<Eigen::Index>(off.size()));
    s.scale = Eigen::Map<const Vector>(sc.data(), static_cast<Eigen::Index>(sc.size()));
    for (double v : sc)
      if (!(v > 0.0)) throw DataError("scaler: non-positive scale");
    s.log = j.at("log").get<bool>();
    if (s.log) {
      const auto sg = j.at("sign").get<std::vector<double>>();
      if (sg.size() != off.size()) throw DataError("scaler: sign length differs");
      for (double v : sg)
        if (v != 1.0 && v != -1.0) throw DataError("scaler: sign entries must be +1 or -1");
      s.sign = Eigen::Map<const Vector>(sg.data(), static_cast<Eigen::Index>(sg.size()));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scaler: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
}

}  // namespace romforge::ml
