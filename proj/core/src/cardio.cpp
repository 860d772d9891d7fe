#include "cine/cardio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cine/error.hpp"

namespace cine::cardio {

VolumeCurve volume_curve(const LabelMap& labels) { return volume_curve(labels, labels.geometry()); }

VolumeCurve volume_curve(const LabelMap& labels, const Geometry& geometry) {
  const Shape4& sh = labels.shape();
  const double ml_per_voxel = geometry.voxel_volume_mm3() / 1000.0;
  VolumeCurve curve;
  curve.lv_ml.assign(sh.nframes, 0.0);
  curve.rv_ml.assign(sh.nframes, 0.0);
  curve.myo_ml.assign(sh.nframes, 0.0);
  const auto data = labels.data();
  const std::size_t per_frame = sh.frame_size() * sh.nslices;
  for (int t = 0; t < sh.nframes; ++t) {
    std::size_t counts[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < per_frame; ++i) {
      const std::uint8_t v = data[t * per_frame + i];
      if (v <= kRvBloodPool) ++counts[v];
    }
    curve.lv_ml[t] = static_cast<double>(counts[kLvBloodPool]) * ml_per_voxel;
    curve.myo_ml[t] = static_cast<double>(counts[kLvMyocardium]) * ml_per_voxel;
    curve.rv_ml[t] = static_cast<double>(counts[kRvBloodPool]) * ml_per_voxel;
  }
  return curve;
}

FunctionalParams functional_params(const VolumeCurve& curve) {
  if (curve.lv_ml.empty() || curve.rv_ml.size() != curve.lv_ml.size())
    fail(ErrorCode::Shape, "volume curve is empty or inconsistent");
  FunctionalParams p;
  auto fill = [&](const std::vector<double>& v, double& edv, double& esv, double& ef) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    edv = *hi;
    esv = *lo;
    if (edv > 0) {
      ef = (edv - esv) / edv;
    } else {
      ef = 0;
      p.degenerate = true;
    }
  };
  fill(curve.lv_ml, p.lv_edv_ml, p.lv_esv_ml, p.lv_ef);
  fill(curve.rv_ml, p.rv_edv_ml, p.rv_esv_ml, p.rv_ef);
  return p;
}

int ed_frame(const VolumeCurve& curve) {
  return static_cast<int>(std::max_element(curve.lv_ml.begin(), curve.lv_ml.end()) - curve.lv_ml.begin());
}

int es_frame(const VolumeCurve& curve) {
  return static_cast<int>(std::min_element(curve.lv_ml.begin(), curve.lv_ml.end()) - curve.lv_ml.begin());
}

BlandAltman bland_altman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "Bland-Altman series differ in length");
  if (a.size() < 2) fail(ErrorCode::LengthMismatch, "Bland-Altman needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double bias = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0;
  for (double v : d) ss += (v - bias) * (v - bias);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {bias, bias - 1.96 * sd, bias + 1.96 * sd};
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "correlation series differ in length");
  if (a.size() < 3) fail(ErrorCode::LengthMismatch, "correlation needs at least three pairs");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) fail(ErrorCode::ZeroVariance, "correlation of a constant series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace cine::cardio
