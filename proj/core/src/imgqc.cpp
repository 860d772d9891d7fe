#include <algorithm>
#include <cmath>
#include <numeric>

#include "cine/error.hpp"
#include "cine/imgqc.hpp"

namespace cine::imgqc {

namespace {

void check_pair(const CineVolume& ref, const CineVolume& test) {
  if (!(ref.shape() == test.shape())) fail(ErrorCode::Shape, "reference and test volumes differ in shape");
}

double reference_scale(const CineVolume& ref) {
  const double peak = ref.intensity_range().second;
  return peak > 0 ? 1.0 / peak : 1.0;
}

Image normalized_frame(const CineVolume& v, int slice, int t, double scale) {
  Image img = v.magnitude_frame(slice, t);
  for (double& p : img.px) p *= scale;
  return img;
}

// Valid-mode separable filtering with a normalized 1-D kernel.
Image filter_valid(const Image& in, const std::vector<double>& k) {
  const int w = static_cast<int>(k.size());
  const int ox = in.nx - w + 1, oy = in.ny - w + 1;
  Image tmp(ox, in.ny), out(ox, oy);
  for (int y = 0; y < in.ny; ++y)
    for (int x = 0; x < ox; ++x) {
      double acc = 0;
      for (int i = 0; i < w; ++i) acc += k[i] * in(x + i, y);
      tmp(x, y) = acc;
    }
  for (int y = 0; y < oy; ++y)
    for (int x = 0; x < ox; ++x) {
      double acc = 0;
      for (int i = 0; i < w; ++i) acc += k[i] * tmp(x, y + i);
      out(x, y) = acc;
    }
  return out;
}

struct Accum {
  double abs_sum = 0;
  double sq_sum = 0;
  std::size_t n = 0;
};

Accum accumulate_error(const CineVolume& ref, const CineVolume& test, int slice) {
  const double scale = reference_scale(ref);
  const Shape4& sh = ref.shape();
  Accum a;
  for (int t = 0; t < sh.nframes; ++t)
    for (int y = 0; y < sh.ny; ++y)
      for (int x = 0; x < sh.nx; ++x) {
        const double d = std::abs(ref.at(x, y, slice, t)) * scale - std::abs(test.at(x, y, slice, t)) * scale;
        a.abs_sum += std::abs(d);
        a.sq_sum += d * d;
        ++a.n;
      }
  return a;
}

double slice_ssim(const CineVolume& ref, const CineVolume& test, int slice, const SsimOptions& options) {
  const double scale = reference_scale(ref);
  double total = 0;
  for (int t = 0; t < ref.shape().nframes; ++t)
    total += ssim_frame(normalized_frame(ref, slice, t, scale), normalized_frame(test, slice, t, scale), options);
  return total / ref.shape().nframes;
}

}  // namespace

double mae(const CineVolume& ref, const CineVolume& test) {
  check_pair(ref, test);
  double sum = 0;
  std::size_t n = 0;
  for (int s = 0; s < ref.shape().nslices; ++s) {
    const Accum a = accumulate_error(ref, test, s);
    sum += a.abs_sum;
    n += a.n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::optional<double> psnr(const CineVolume& ref, const CineVolume& test) {
  check_pair(ref, test);
  double sq = 0;
  std::size_t n = 0;
  for (int s = 0; s < ref.shape().nslices; ++s) {
    const Accum a = accumulate_error(ref, test, s);
    sq += a.sq_sum;
    n += a.n;
  }
  if (n == 0 || sq == 0) return std::nullopt;
  return 10.0 * std::log10(1.0 / (sq / static_cast<double>(n)));
}

double ssim_frame(const Image& ref, const Image& test, const SsimOptions& options) {
  if (ref.nx != test.nx || ref.ny != test.ny) fail(ErrorCode::Shape, "SSIM frames differ in shape");
  if (ref.nx < options.window || ref.ny < options.window) fail(ErrorCode::TooSmall, "image smaller than SSIM window");
  std::vector<double> k(options.window);
  const int r = options.window / 2;
  for (int i = 0; i < options.window; ++i) k[i] = std::exp(-0.5 * (i - r) * (i - r) / (options.sigma * options.sigma));
  const double ksum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= ksum;

  Image xx(ref.nx, ref.ny), yy(ref.nx, ref.ny), xy(ref.nx, ref.ny);
  for (std::size_t i = 0; i < ref.px.size(); ++i) {
    xx.px[i] = ref.px[i] * ref.px[i];
    yy.px[i] = test.px[i] * test.px[i];
    xy.px[i] = ref.px[i] * test.px[i];
  }
  const Image mx = filter_valid(ref, k), my = filter_valid(test, k);
  const Image exx = filter_valid(xx, k), eyy = filter_valid(yy, k), exy = filter_valid(xy, k);
  const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
  const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
  double total = 0;
  for (std::size_t i = 0; i < mx.px.size(); ++i) {
    const double ux = mx.px[i], uy = my.px[i];
    const double vx = exx.px[i] - ux * ux;
    const double vy = eyy.px[i] - uy * uy;
    const double cxy = exy.px[i] - ux * uy;
    total += ((2 * ux * uy + c1) * (2 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.px.size());
}

double ssim(const CineVolume& ref, const CineVolume& test, const SsimOptions& options) {
  check_pair(ref, test);
  double total = 0;
  for (int s = 0; s < ref.shape().nslices; ++s) total += slice_ssim(ref, test, s, options);
  return total / ref.shape().nslices;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1));
  }
  return s;
}

ImageQualityReport image_quality(const CineVolume& ref, const CineVolume& test, const SsimOptions& options) {
  check_pair(ref, test);
  ImageQualityReport report;
  std::vector<double> maes, psnrs, ssims;
  for (int s = 0; s < ref.shape().nslices; ++s) {
    const Accum a = accumulate_error(ref, test, s);
    SliceQuality q;
    q.mae = a.abs_sum / static_cast<double>(a.n);
    if (a.sq_sum > 0) q.psnr_db = 10.0 * std::log10(1.0 / (a.sq_sum / static_cast<double>(a.n)));
    q.ssim = slice_ssim(ref, test, s, options);
    maes.push_back(q.mae);
    if (q.psnr_db) psnrs.push_back(*q.psnr_db);
    ssims.push_back(q.ssim);
    report.slices.push_back(q);
  }
  report.mae = summarize(maes);
  if (!psnrs.empty()) report.psnr_db = summarize(psnrs);
  report.ssim = summarize(ssims);
  return report;
}

}  // namespace cine::imgqc
