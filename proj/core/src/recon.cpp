#include "cine/recon.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cine/error.hpp"
#include "cine/parallel.hpp"

namespace cine::recon {

namespace {

double stack_norm2(const FrameStack& x) {
  double s = 0;
  for (const Frame& f : x)
    for (const cplx& v : f.px) s += std::norm(v);
  return s;
}

void check_dataset(const ksim::KSpaceDataset& ds, const nufft::Plan& plan) {
  if (ds.nx != plan.nx() || ds.ny != plan.ny()) fail(ErrorCode::Shape, "dataset does not match NUFFT plan");
  if (ds.frames.empty()) fail(ErrorCode::EmptyFrame, "dataset has no slices");
  for (const auto& slice : ds.frames)
    for (const auto& f : slice)
      if (f.spokes.empty()) fail(ErrorCode::EmptyFrame, "a frame has no spokes");
}

CineVolume volume_from(const ksim::KSpaceDataset& ds, const std::vector<FrameStack>& slices) {
  Geometry g = ds.geometry;
  const Shape4 shape{ds.nx, ds.ny, ds.n_slices(), ds.n_frames()};
  CineVolume vol(shape, g, true);
  for (int s = 0; s < shape.nslices; ++s) vol.set_slice_stack(s, slices[s]);
  return vol;
}

// A^H (A x - y) per frame; returns ||A x - y||^2.
double data_gradient(const std::vector<nufft::FrameOperator>& ops, const FrameStack& x,
                     const std::vector<const ksim::FrameData*>& data, FrameStack& grad) {
  std::vector<double> res(ops.size(), 0.0);
  parallel_for(ops.size(), [&](std::size_t f) {
    std::vector<cplx> r = ops[f].forward(x[f]);
    const auto& y = data[f]->samples;
    double acc = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] -= y[i];
      acc += std::norm(r[i]);
    }
    res[f] = acc;
    grad[f] = ops[f].adjoint(r);
  });
  double total = 0;
  for (double v : res) total += v;
  return total;
}

double residual(const std::vector<nufft::FrameOperator>& ops, const FrameStack& x,
                const std::vector<const ksim::FrameData*>& data) {
  std::vector<double> res(ops.size(), 0.0);
  parallel_for(ops.size(), [&](std::size_t f) {
    const std::vector<cplx> r = ops[f].forward(x[f]);
    const auto& y = data[f]->samples;
    double acc = 0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += std::norm(r[i] - y[i]);
    res[f] = acc;
  });
  double total = 0;
  for (double v : res) total += v;
  return total;
}

FrameStack adjoint_slice(const ksim::KSpaceDataset& ds, const std::vector<nufft::FrameOperator>& ops, int slice) {
  FrameStack out(ops.size());
  const double scale = radial_area_scale(ds.n_readout);
  parallel_for(ops.size(), [&](std::size_t f) {
    const ksim::FrameData& fd = ds.at(slice, static_cast<int>(f));
    traj::DensityCompensation dcf = traj::ramp_dcf(fd.spokes, traj::kVoronoiCenterFloor);
    for (double& w : dcf.weights) w *= scale;
    out[f] = ops[f].adjoint(fd.samples, dcf.weights);
  });
  return out;
}

}  // namespace

void UnrolledParams::validate() const {
  if (n_unroll < 1) fail(ErrorCode::Parameter, "n_unroll must be >= 1");
  if (step_size && !(*step_size >= 0)) fail(ErrorCode::Parameter, "step size must be >= 0");
  if (power_iterations < 1) fail(ErrorCode::Parameter, "power iteration count must be >= 1");
  if (!(lambda_spatial >= 0 && lambda_temporal >= 0)) fail(ErrorCode::Parameter, "lambda must be >= 0");
  if (!(tv_epsilon > 0)) fail(ErrorCode::Parameter, "tv_epsilon must be > 0");
}

double radial_area_scale(int n_readout) { return std::numbers::pi / static_cast<double>(n_readout); }

std::vector<nufft::FrameOperator> slice_operators(const ksim::KSpaceDataset& ds, const nufft::Plan& plan,
                                                  int slice) {
  std::vector<nufft::FrameOperator> ops;
  ops.reserve(ds.n_frames());
  for (int f = 0; f < ds.n_frames(); ++f) ops.emplace_back(plan, ds.at(slice, f).spokes);
  return ops;
}

ReconResult recon_adjoint(const ksim::KSpaceDataset& ds, const nufft::Plan& plan) {
  check_dataset(ds, plan);
  std::vector<FrameStack> slices(ds.n_slices());
  for (int s = 0; s < ds.n_slices(); ++s) slices[s] = adjoint_slice(ds, slice_operators(ds, plan, s), s);
  ReconResult out;
  out.complex_image = volume_from(ds, slices);
  out.magnitude = out.complex_image.magnitude();
  return out;
}

double tv_value(const FrameStack& x, double ls, double lt, double eps) {
  if (!(eps > 0)) fail(ErrorCode::Parameter, "tv epsilon must be > 0");
  const int nt = static_cast<int>(x.size());
  if (nt == 0) return 0.0;
  const int nx = x[0].nx, ny = x[0].ny;
  double spatial = 0, temporal = 0;
  for (int t = 0; t < nt; ++t) {
    const Frame& f = x[t];
    const Frame& next = x[(t + 1) % nt];
    for (int y = 0; y < ny; ++y)
      for (int xx = 0; xx < nx; ++xx) {
        const cplx v = f(xx, y);
        const cplx dx = xx + 1 < nx ? f(xx + 1, y) - v : cplx(0.0);
        const cplx dy = y + 1 < ny ? f(xx, y + 1) - v : cplx(0.0);
        const cplx dt = next(xx, y) - v;
        spatial += std::sqrt(std::norm(dx) + std::norm(dy) + eps);
        temporal += std::sqrt(std::norm(dt) + eps);
      }
  }
  return ls * spatial + lt * temporal;
}

FrameStack tv_gradient(const FrameStack& x, double ls, double lt, double eps) {
  if (!(eps > 0)) fail(ErrorCode::Parameter, "tv epsilon must be > 0");
  const int nt = static_cast<int>(x.size());
  FrameStack g;
  g.reserve(nt);
  for (const Frame& f : x) g.emplace_back(f.nx, f.ny);
  if (nt == 0 || (ls == 0 && lt == 0)) return g;
  const int nx = x[0].nx, ny = x[0].ny;
  for (int t = 0; t < nt; ++t) {
    const int tn = (t + 1) % nt;
    const Frame& f = x[t];
    const Frame& next = x[tn];
    Frame& gf = g[t];
    Frame& gn = g[tn];
    for (int y = 0; y < ny; ++y)
      for (int xx = 0; xx < nx; ++xx) {
        const cplx v = f(xx, y);
        if (ls != 0) {
          const cplx dx = xx + 1 < nx ? f(xx + 1, y) - v : cplx(0.0);
          const cplx dy = y + 1 < ny ? f(xx, y + 1) - v : cplx(0.0);
          const double s = std::sqrt(std::norm(dx) + std::norm(dy) + eps);
          const cplx cx = ls * dx / s;
          const cplx cy = ls * dy / s;
          if (xx + 1 < nx) {
            gf(xx + 1, y) += cx;
            gf(xx, y) -= cx;
          }
          if (y + 1 < ny) {
            gf(xx, y + 1) += cy;
            gf(xx, y) -= cy;
          }
        }
        if (lt != 0) {
          const cplx dt = next(xx, y) - v;
          const cplx ct = lt * dt / std::sqrt(std::norm(dt) + eps);
          gn(xx, y) += ct;
          gf(xx, y) -= ct;
        }
      }
  }
  return g;
}

double estimate_lipschitz(const std::vector<nufft::FrameOperator>& ops, int iterations, std::uint64_t seed) {
  if (ops.empty()) fail(ErrorCode::EmptyFrame, "no operators");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int nx = ops[0].plan().nx(), ny = ops[0].plan().ny();
  FrameStack v(ops.size(), Frame(nx, ny));
  for (Frame& f : v)
    for (cplx& p : f.px) p = cplx(normal(rng), normal(rng));
  double norm = std::sqrt(stack_norm2(v));
  double lambda = 0;
  for (int it = 0; it < iterations; ++it) {
    for (Frame& f : v)
      for (cplx& p : f.px) p /= norm;
    FrameStack w(ops.size());
    parallel_for(ops.size(), [&](std::size_t f) { w[f] = ops[f].adjoint(ops[f].forward(v[f])); });
    norm = std::sqrt(stack_norm2(w));
    lambda = norm;  // ||A^H A v|| with ||v|| = 1
    v = std::move(w);
    if (norm == 0) break;
  }
  return lambda;
}

ReconResult recon_unrolled(const ksim::KSpaceDataset& ds, const nufft::Plan& plan, const UnrolledParams& params) {
  params.validate();
  check_dataset(ds, plan);
  const int ns = ds.n_slices();
  const int nf = ds.n_frames();
  std::vector<FrameStack> slices(ns);
  ReconResult out;
  out.residual_history.assign(params.n_unroll + 1, 0.0);

  for (int s = 0; s < ns; ++s) {
    const auto ops = slice_operators(ds, plan, s);
    std::vector<const ksim::FrameData*> data(nf);
    for (int f = 0; f < nf; ++f) data[f] = &ds.at(s, f);

    double lipschitz = 0;
    double eta = 0;
    if (params.step_size) {
      eta = *params.step_size;
      lipschitz = eta > 0 ? 1.0 / eta : 0.0;
    } else {
      lipschitz = estimate_lipschitz(ops, params.power_iterations);
      eta = lipschitz > 0 ? 1.0 / lipschitz : 0.0;
    }
    if (!params.step_size) out.lipschitz = std::max(out.lipschitz, lipschitz);
    const double ls = params.lambda_spatial * lipschitz;
    const double lt = params.lambda_temporal * lipschitz;

    FrameStack x = params.init == Init::Adjoint ? adjoint_slice(ds, ops, s) : FrameStack(nf, Frame(ds.nx, ds.ny));
    FrameStack grad(nf);
    double r0 = 0;
    for (int k = 0; k < params.n_unroll; ++k) {
      const double r = data_gradient(ops, x, data, grad);
      if (k == 0) r0 = r;
      out.residual_history[k] += r;
      if (r0 > 0 && r > 10.0 * r0) fail(ErrorCode::Divergence, "data residual grew more than 10x; step too large");
      const FrameStack reg = tv_gradient(x, ls, lt, params.tv_epsilon);
      for (int f = 0; f < nf; ++f)
        for (std::size_t i = 0; i < x[f].px.size(); ++i) x[f].px[i] -= eta * (grad[f].px[i] + reg[f].px[i]);
    }
    const double r_final = residual(ops, x, data);
    if (r0 > 0 && r_final > 10.0 * r0) fail(ErrorCode::Divergence, "data residual grew more than 10x; step too large");
    out.residual_history[params.n_unroll] += r_final;
    for (const Frame& f : x)
      for (const cplx& v : f.px)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          fail(ErrorCode::Divergence, "reconstruction produced non-finite values");
    slices[s] = std::move(x);
  }
  out.complex_image = volume_from(ds, slices);
  out.magnitude = out.complex_image.magnitude();
  return out;
}

}  // namespace cine::recon
