#include "cine/segment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "cine/error.hpp"
#include "cine/io.hpp"

namespace cine::segment {

namespace {

struct Component {
  std::vector<int> pixels;
  double cx = 0, cy = 0;
};

std::vector<Component> components(const std::vector<std::uint8_t>& mask, int nx, int ny) {
  std::vector<int> seen(mask.size(), 0);
  std::vector<Component> out;
  std::vector<int> stack;
  for (int start = 0; start < nx * ny; ++start) {
    if (!mask[start] || seen[start]) continue;
    Component c;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      c.pixels.push_back(p);
      const int x = p % nx, y = p / nx;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= nx || q[1] >= ny) continue;
        const int i = q[1] * nx + q[0];
        if (mask[i] && !seen[i]) {
          seen[i] = 1;
          stack.push_back(i);
        }
      }
    }
    std::sort(c.pixels.begin(), c.pixels.end());
    for (int p : c.pixels) {
      c.cx += p % nx;
      c.cy += p / nx;
    }
    c.cx /= static_cast<double>(c.pixels.size());
    c.cy /= static_cast<double>(c.pixels.size());
    out.push_back(std::move(c));
  }
  return out;
}

const Component* largest(const std::vector<Component>& cs, const Component* exclude = nullptr) {
  const Component* best = nullptr;
  for (const Component& c : cs)
    if (&c != exclude && (!best || c.pixels.size() > best->pixels.size())) best = &c;
  return best;
}

LabelFrame segment_frame(const Image& img, const IntensityModel& m) {
  const int nx = img.nx, ny = img.ny;
  const double t_low = 0.5 * (m.background + m.myocardium);
  const double t_high = 0.5 * (m.myocardium + m.blood);
  std::vector<std::uint8_t> myo(img.px.size()), blood(img.px.size());
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    myo[i] = img.px[i] >= t_low && img.px[i] < t_high;
    blood[i] = img.px[i] >= t_high;
  }
  LabelFrame out(nx, ny);
  const auto myo_cs = components(myo, nx, ny);
  const Component* wall = largest(myo_cs);
  if (!wall) return out;
  for (int p : wall->pixels) out.px[p] = kLvMyocardium;

  const auto blood_cs = components(blood, nx, ny);
  const Component* lv = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const Component& c : blood_cs) {
    const double d = std::hypot(c.cx - wall->cx, c.cy - wall->cy);
    if (d < best) {
      best = d;
      lv = &c;
    }
  }
  if (!lv) return out;
  for (int p : lv->pixels) out.px[p] = kLvBloodPool;
  if (const Component* rv = largest(blood_cs, lv))
    for (int p : rv->pixels) out.px[p] = kRvBloodPool;
  return out;
}

}  // namespace

LabelMap phantom_threshold(const CineVolume& image, const IntensityModel& model) {
  if (!(model.background < model.myocardium && model.myocardium < model.blood))
    fail(ErrorCode::Parameter, "intensity model must be ordered background < myocardium < blood");
  image.validate();
  const Shape4& sh = image.shape();
  // The brightest percent of voxels should sit near the blood intensity.
  std::vector<double> mags;
  mags.reserve(sh.size());
  for (const cplx& v : image.data()) mags.push_back(std::abs(v));
  const std::size_t k = std::min(mags.size() - 1, static_cast<std::size_t>(0.99 * static_cast<double>(mags.size())));
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
  const double p99 = mags[k];
  if (!(p99 > 0.5 * model.blood && p99 < 2.0 * model.blood))
    fail(ErrorCode::IntensityModelMismatch, "image intensities do not match the phantom intensity model");

  LabelMap labels(sh, image.geometry());
  for (int s = 0; s < sh.nslices; ++s)
    for (int t = 0; t < sh.nframes; ++t) labels.set_frame(s, t, segment_frame(image.magnitude_frame(s, t), model));
  return labels;
}

std::string scan_time_tag(double scan_time_s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", scan_time_s);
  return buf;
}

LabelMap external_mask(const std::filesystem::path& dir, const std::string& subject, std::optional<double> scan_time_s,
                       const Shape4& shape) {
  namespace fs = std::filesystem;
  const fs::path base = dir / subject;
  std::vector<fs::path> candidates;
  if (scan_time_s) candidates.push_back(base / ("seg_t" + scan_time_tag(*scan_time_s) + ".nii"));
  candidates.push_back(base / "seg.nii");
  for (const fs::path& p : candidates) {
    if (!fs::exists(p)) continue;
    LabelMap l = io::load_labels(p);
    if (!(l.shape() == shape)) fail(ErrorCode::MissingMask, "mask " + p.string() + " does not match the image shape");
    return l;
  }
  fail(ErrorCode::MissingMask, "no mask for subject " + subject + " under " + dir.string());
}

}  // namespace cine::segment
