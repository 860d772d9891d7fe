#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cine/trajectory.hpp"
#include "cine/volume.hpp"

namespace oracle {

using cine::cplx;

// sum_p x(p) exp(-2 pi i k.p) with p centred as (i - nx/2, j - ny/2).
inline std::vector<cplx> direct_dft(const cine::Frame& x, std::span<const cine::traj::KPoint> k) {
  std::vector<cplx> out(k.size());
  for (std::size_t s = 0; s < k.size(); ++s) {
    cplx acc = 0;
    for (int j = 0; j < x.ny; ++j)
      for (int i = 0; i < x.nx; ++i) {
        const double ph = -2 * std::numbers::pi * (k[s].kx * (i - x.nx / 2) + k[s].ky * (j - x.ny / 2));
        acc += x(i, j) * cplx(std::cos(ph), std::sin(ph));
      }
    out[s] = acc;
  }
  return out;
}

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  cplx acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
  return acc;
}

inline double norm(std::span<const cplx> a) { return std::sqrt(std::real(inner(a, a))); }

inline cine::Frame random_frame(int nx, int ny, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  cine::Frame f(nx, ny);
  for (cplx& v : f.px) v = {n(rng), n(rng)};
  return f;
}

inline std::vector<cplx> random_samples(std::size_t count, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<cplx> v(count);
  for (cplx& c : v) c = {n(rng), n(rng)};
  return v;
}

inline double relative_rms(std::span<const cplx> test, std::span<const cplx> ref) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::norm(test[i] - ref[i]);
    den += std::norm(ref[i]);
  }
  return std::sqrt(num / den);
}

// Random blob mask of `label`: union of a few random discs.
inline cine::LabelFrame random_mask(int nx, int ny, std::uint8_t label, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cx(0.2 * nx, 0.8 * nx), cy(0.2 * ny, 0.8 * ny), r(1.0, 0.2 * nx);
  std::uniform_int_distribution<int> blobs(1, 4);
  cine::LabelFrame m(nx, ny);
  const int n = blobs(rng);
  for (int b = 0; b < n; ++b) {
    const double x0 = cx(rng), y0 = cy(rng), rr = r(rng);
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        if (std::hypot(x - x0, y - y0) <= rr) m(x, y) = label;
  }
  return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cine_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
