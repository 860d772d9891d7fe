#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "cine/error.hpp"
#include "cine/imgqc.hpp"

namespace cine::imgqc {

namespace {

double safe_ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

// Power spectrum of a real image by separable DFT, with the fraction of
// energy beyond each radial cutoff (cycles per pixel).
struct SpectralSplit {
  double above_quarter = 0;  // |f| > 0.125
  double above_half = 0;     // |f| > 0.25
  double total = 0;
};

class Dft2 {
public:
  Dft2(int nx, int ny) : nx_(nx), ny_(ny), tx_(twiddles(nx)), ty_(twiddles(ny)) {}

  SpectralSplit split(const Image& img) const {
    std::vector<cplx> rows(static_cast<std::size_t>(nx_) * ny_);
    for (int y = 0; y < ny_; ++y)
      for (int u = 0; u < nx_; ++u) {
        cplx acc = 0.0;
        for (int x = 0; x < nx_; ++x) acc += img(x, y) * tx_[static_cast<std::size_t>((u * x) % nx_)];
        rows[static_cast<std::size_t>(y) * nx_ + u] = acc;
      }
    SpectralSplit s;
    for (int v = 0; v < ny_; ++v)
      for (int u = 0; u < nx_; ++u) {
        cplx acc = 0.0;
        for (int y = 0; y < ny_; ++y)
          acc += rows[static_cast<std::size_t>(y) * nx_ + u] * ty_[static_cast<std::size_t>((v * y) % ny_)];
        const double e = std::norm(acc);
        const double fx = (u <= nx_ / 2 ? u : u - nx_) / static_cast<double>(nx_);
        const double fy = (v <= ny_ / 2 ? v : v - ny_) / static_cast<double>(ny_);
        const double f = std::hypot(fx, fy);
        s.total += e;
        if (f > 0.125) s.above_quarter += e;
        if (f > 0.25) s.above_half += e;
      }
    return s;
  }

private:
  static std::vector<cplx> twiddles(int n) {
    std::vector<cplx> t(n);
    for (int i = 0; i < n; ++i) t[i] = std::polar(1.0, -2.0 * std::numbers::pi * i / n);
    return t;
  }
  int nx_, ny_;
  std::vector<cplx> tx_, ty_;
};

double gradient_entropy(const Image& img) {
  constexpr int kBins = 32;
  std::vector<double> g;
  g.reserve(img.px.size());
  double gmax = 0;
  for (int y = 0; y < img.ny; ++y)
    for (int x = 0; x < img.nx; ++x) {
      const double gx = img(std::min(x + 1, img.nx - 1), y) - img(x, y);
      const double gy = img(x, std::min(y + 1, img.ny - 1)) - img(x, y);
      g.push_back(std::hypot(gx, gy));
      gmax = std::max(gmax, g.back());
    }
  if (!(gmax > 0)) return 0.0;
  std::vector<double> hist(kBins, 0.0);
  for (double v : g) hist[std::min(kBins - 1, static_cast<int>(v / gmax * kBins))] += 1.0;
  double h = 0;
  for (double c : hist)
    if (c > 0) {
      const double p = c / static_cast<double>(g.size());
      h -= p * std::log(p);
    }
  return h;
}

// Mean standard deviation of the four corner patches.
double corner_noise(const Image& img) {
  const int p = std::max(2, std::min(img.nx, img.ny) / 8);
  double total = 0;
  for (int cy : {0, img.ny - p})
    for (int cx : {0, img.nx - p}) {
      double s = 0, ss = 0;
      for (int y = cy; y < cy + p; ++y)
        for (int x = cx; x < cx + p; ++x) {
          s += img(x, y);
          ss += img(x, y) * img(x, y);
        }
      const double n = static_cast<double>(p) * p;
      const double var = std::max(0.0, ss / n - (s / n) * (s / n));
      total += std::sqrt(var);
    }
  return total / 4.0;
}

std::string join(std::span<const double> v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      fail(ErrorCode::Parameter, "malformed number in model file: " + item);
    }
  }
  return out;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

const char* qc1_feature_name(int index) {
  static const char* names[kQc1FeatureCount] = {"hf_energy_ratio", "temporal_tv",   "gradient_entropy",
                                                "background_noise", "blur_index", "log_spokes_per_frame"};
  if (index < 0 || index >= kQc1FeatureCount) fail(ErrorCode::Parameter, "QC1 feature index out of range");
  return names[index];
}

Qc1Features qc1_features(const CineVolume& recon, int slice, double spokes_per_frame) {
  const Shape4& sh = recon.shape();
  if (slice < 0 || slice >= sh.nslices) fail(ErrorCode::Parameter, "slice index out of range");
  if (!(spokes_per_frame > 0)) fail(ErrorCode::Parameter, "spokes per frame must be positive");
  std::vector<Image> frames;
  frames.reserve(sh.nframes);
  double sum = 0;
  for (int t = 0; t < sh.nframes; ++t) {
    frames.push_back(recon.magnitude_frame(slice, t));
    for (double v : frames.back().px) {
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteImage, "QC1 input is not finite");
      sum += v;
    }
  }
  const double mean = sum / static_cast<double>(sh.size() / sh.nslices);

  Qc1Features f;
  const Dft2 dft(sh.nx, sh.ny);
  double hf = 0, blur = 0, entropy = 0, noise = 0;
  for (const Image& img : frames) {
    const SpectralSplit s = dft.split(img);
    hf += safe_ratio(s.above_half, s.total);
    blur += safe_ratio(s.above_quarter, s.total);
    entropy += gradient_entropy(img);
    noise += corner_noise(img);
  }
  const double nf = sh.nframes;
  double ttv = 0;
  if (sh.nframes > 1)
    for (int t = 0; t < sh.nframes; ++t) {
      const Image& a = frames[t];
      const Image& b = frames[(t + 1) % sh.nframes];
      for (std::size_t i = 0; i < a.px.size(); ++i) ttv += std::abs(b.px[i] - a.px[i]);
    }
  f.values[0] = hf / nf;
  f.values[1] = safe_ratio(ttv / static_cast<double>(sh.size() / sh.nslices), mean);
  f.values[2] = entropy / nf;
  f.values[3] = safe_ratio(noise / nf, mean);
  f.values[4] = blur / nf;
  f.values[5] = std::log(spokes_per_frame);
  return f;
}

Qc1Features qc1_features(const CineVolume& recon, const traj::AcquisitionSchedule& schedule) {
  Qc1Features total;
  const int ns = recon.shape().nslices;
  for (int s = 0; s < ns; ++s) {
    const Qc1Features f = qc1_features(recon, s, schedule.mean_spokes_per_frame());
    for (int i = 0; i < kQc1FeatureCount; ++i) total.values[i] += f.values[i] / ns;
  }
  total.values[5] = std::log(schedule.mean_spokes_per_frame());
  return total;
}

void LinearModel::validate() const {
  const std::size_t n = weights.size();
  if (n == 0) fail(ErrorCode::Parameter, "linear model has no weights");
  if (mean.size() != n || sd.size() != n) fail(ErrorCode::Parameter, "linear model normalization size mismatch");
  for (double s : sd)
    if (!(s > 0)) fail(ErrorCode::Parameter, "linear model normalization sd must be > 0");
}

double LinearModel::score(std::span<const double> features) const {
  if (features.size() != weights.size()) fail(ErrorCode::Shape, "feature count does not match model");
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * (features[i] - mean[i]) / sd[i];
  return z;
}

Verdict qc1_predict(const LinearModel& model, const Qc1Features& features) {
  Verdict v;
  v.score = model.score(features.values);
  v.pass = v.score >= model.threshold;
  return v;
}

ClassificationStats classification_stats(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) fail(ErrorCode::LengthMismatch, "truth and prediction lengths differ");
  int tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) (predicted[i] ? tp : fn)++;
    else (predicted[i] ? fp : tn)++;
  }
  ClassificationStats s;
  s.n = static_cast<int>(truth.size());
  s.sensitivity = safe_ratio(tp, tp + fn);
  s.specificity = safe_ratio(tn, tn + fp);
  s.balanced_accuracy = 0.5 * (s.sensitivity + s.specificity);
  return s;
}

TrainedLinearModel qc1_train(std::span<const std::vector<double>> features, std::span<const int> labels,
                             const TrainOptions& options) {
  if (features.size() != labels.size()) fail(ErrorCode::LengthMismatch, "features and labels differ in length");
  if (features.empty()) fail(ErrorCode::DegenerateLabels, "no training examples");
  const std::size_t dim = features.front().size();
  if (dim == 0) fail(ErrorCode::Parameter, "empty feature vectors");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) fail(ErrorCode::Parameter, "labels must be 0 or 1");
    if (features[i].size() != dim) fail(ErrorCode::Shape, "inconsistent feature dimension");
    for (double v : features[i])
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteImage, "non-finite training feature");
    by_class[labels[i]].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) fail(ErrorCode::DegenerateLabels, "training labels contain a single class");
  if (by_class[0].size() < 10 || by_class[1].size() < 10)
    fail(ErrorCode::TooSmall, "need at least 10 examples per class");
  if (!(options.holdout_fraction >= 0 && options.holdout_fraction < 1))
    fail(ErrorCode::Parameter, "holdout fraction must be in [0, 1)");

  // Seeded stratified hold-out split.
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> train, holdout;
  for (auto& cls : by_class) {
    for (std::size_t i = cls.size(); i > 1; --i) std::swap(cls[i - 1], cls[rng() % i]);
    const auto n_hold = static_cast<std::size_t>(options.holdout_fraction * static_cast<double>(cls.size()));
    holdout.insert(holdout.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(n_hold));
    train.insert(train.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_hold), cls.end());
  }

  // Balance the training split by resampling the minority class.
  std::vector<std::size_t> train_cls[2];
  for (std::size_t i : train) train_cls[labels[i]].push_back(i);
  const int minority = train_cls[0].size() < train_cls[1].size() ? 0 : 1;
  std::vector<std::size_t> balanced = train;
  const std::size_t deficit = train_cls[1 - minority].size() - train_cls[minority].size();
  for (std::size_t k = 0; k < deficit; ++k)
    balanced.push_back(train_cls[minority][rng() % train_cls[minority].size()]);

  TrainedLinearModel out;
  LinearModel& m = out.model;
  m.mean.assign(dim, 0.0);
  m.sd.assign(dim, 0.0);
  for (std::size_t i : balanced)
    for (std::size_t d = 0; d < dim; ++d) m.mean[d] += features[i][d];
  for (double& v : m.mean) v /= static_cast<double>(balanced.size());
  for (std::size_t i : balanced)
    for (std::size_t d = 0; d < dim; ++d) m.sd[d] += std::pow(features[i][d] - m.mean[d], 2);
  for (double& v : m.sd) {
    v = std::sqrt(v / static_cast<double>(balanced.size()));
    if (!(v > 1e-12)) v = 1.0;
  }

  std::vector<std::vector<double>> z(balanced.size(), std::vector<double>(dim));
  for (std::size_t k = 0; k < balanced.size(); ++k)
    for (std::size_t d = 0; d < dim; ++d) z[k][d] = (features[balanced[k]][d] - m.mean[d]) / m.sd[d];

  m.weights.assign(dim, 0.0);
  m.bias = 0;
  const double n = static_cast<double>(balanced.size());
  std::vector<double> gw(dim);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0;
    for (std::size_t k = 0; k < balanced.size(); ++k) {
      double s = m.bias;
      for (std::size_t d = 0; d < dim; ++d) s += m.weights[d] * z[k][d];
      const double r = sigmoid(s) - labels[balanced[k]];
      for (std::size_t d = 0; d < dim; ++d) gw[d] += r * z[k][d];
      gb += r;
    }
    for (std::size_t d = 0; d < dim; ++d)
      m.weights[d] -= options.learning_rate * (gw[d] / n + options.l2 * m.weights[d]);
    m.bias -= options.learning_rate * gb / n;
  }
  m.threshold = 0;

  auto evaluate = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> truth, pred;
    for (std::size_t i : idx) {
      truth.push_back(labels[i]);
      pred.push_back(m.score(features[i]) >= m.threshold ? 1 : 0);
    }
    return classification_stats(truth, pred);
  };
  out.train = evaluate(train);
  if (!holdout.empty()) out.holdout = evaluate(holdout);
  return out;
}

void write_linear_model(std::ostream& out, const LinearModel& model) {
  model.validate();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "kind=linear\n";
  out << "weights=" << join(model.weights) << '\n';
  out << "bias=" << model.bias << '\n';
  out << "mean=" << join(model.mean) << '\n';
  out << "sd=" << join(model.sd) << '\n';
  out << "threshold=" << model.threshold << '\n';
}

LinearModel read_linear_model(std::istream& in) {
  LinearModel m;
  bool have_weights = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Parameter, "malformed model line: " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "weights") {
      m.weights = split_doubles(value);
      have_weights = true;
    } else if (key == "mean") {
      m.mean = split_doubles(value);
    } else if (key == "sd") {
      m.sd = split_doubles(value);
    } else if (key == "bias" || key == "threshold") {
      const auto v = split_doubles(value);
      if (v.size() != 1) fail(ErrorCode::Parameter, "expected one value for " + key);
      (key == "bias" ? m.bias : m.threshold) = v[0];
    }
  }
  if (!have_weights) fail(ErrorCode::Parameter, "model file has no weights");
  m.validate();
  return m;
}

void save_linear_model(const LinearModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  write_linear_model(out, model);
  if (!out) fail(ErrorCode::Io, "failed writing " + path);
}

LinearModel load_linear_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read " + path);
  return read_linear_model(in);
}

}  // namespace cine::imgqc
