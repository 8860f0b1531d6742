#include "qsynth/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace qsynth {

namespace {

constexpr double kHalfLog2PiE = 1.4189385332046727;  // 0.5 * log(2*pi*e)
constexpr double kThetaUnitFloor = 1e-6;
constexpr int kCnotIndex = 3;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// y = W x + b with row-major W (out x in).
void linear(const double* w, const double* b, std::span<const double> x,
            std::span<double> y) {
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < y.size(); ++o) {
    double acc = b[o];
    const double* row = w + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// Accumulates dW += delta x^T, db += delta, and dx += W^T delta.
void linear_backward(const double* w, std::span<const double> x,
                     std::span<const double> delta, double* dw, double* db,
                     std::span<double> dx) {
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < delta.size(); ++o) {
    const double d = delta[o];
    if (d == 0.0) continue;
    const double* row = w + o * in;
    double* drow = dw + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      drow[i] += d * x[i];
      dx[i] += row[i] * d;
    }
    db[o] += d;
  }
}

struct Categorical {
  std::vector<double> probs;
  std::vector<double> log_probs;
  double entropy = 0.0;
};

// Stable softmax; mask < 0 marks indices excluded from the distribution.
Categorical categorical_from_logits(std::span<const double> logits, int masked = -1) {
  Categorical c;
  c.probs.assign(logits.size(), 0.0);
  c.log_probs.assign(logits.size(), -std::numeric_limits<double>::infinity());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (static_cast<int>(i) == masked) continue;
    max_logit = std::max(max_logit, logits[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (static_cast<int>(i) == masked) continue;
    sum += std::exp(logits[i] - max_logit);
  }
  const double log_sum = std::log(sum) + max_logit;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (static_cast<int>(i) == masked) continue;
    c.log_probs[i] = logits[i] - log_sum;
    c.probs[i] = std::exp(c.log_probs[i]);
    if (c.probs[i] > 0.0) c.entropy -= c.probs[i] * c.log_probs[i];
  }
  return c;
}

// Log-density of theta_unit under sigmoid(Normal(mu, sigma^2)), including
// the change-of-variables term. Shared by sample() and evaluate() so both
// paths assign identical densities.
double angle_log_density(double mu, double log_std, double theta_unit) {
  const double u = std::clamp(theta_unit, kThetaUnitFloor, 1.0 - kThetaUnitFloor);
  const double z = std::log(u / (1.0 - u));
  const double sigma = std::exp(log_std);
  const double dz = (z - mu) / sigma;
  return -0.5 * dz * dz - log_std - 0.5 * std::log(2.0 * M_PI) - std::log(u * (1.0 - u));
}

}  // namespace

struct PolicyNet::Trace {
  std::vector<double> x;
  std::vector<double> h1;
  std::vector<double> h2;
  PolicyHeads heads;
};

PolicyNet::PolicyNet(int n, int hidden, bool discrete_only)
    : n_(n), obs_dim_(4 * (1 << n)), hidden_(hidden), discrete_only_(discrete_only) {
  if (n < 2 || n > kMaxQubits)
    throw std::invalid_argument("PolicyNet: n must be in 2..12");
  if (hidden < 1) throw std::invalid_argument("PolicyNet: hidden width must be positive");
  compute_offsets();
}

PolicyNet::PolicyNet(int n, std::uint64_t seed, int hidden, bool discrete_only)
    : PolicyNet(n, hidden, discrete_only) {
  Rng rng(seed);
  init_params(rng);
}

void PolicyNet::compute_offsets() {
  const std::size_t d = obs_dim_, h = hidden_, n = n_;
  std::size_t at = 0;
  w1_ = at; at += h * d;
  b1_ = at; at += h;
  w2_ = at; at += h * h;
  b2_ = at; at += h;
  wg_ = at; at += 4 * h;
  bg_ = at; at += 4;
  wq1_ = at; at += n * h;
  bq1_ = at; at += n;
  wq2_ = at; at += n * h;
  bq2_ = at; at += n;
  wmu_ = at; at += h;
  bmu_ = at; at += 1;
  wv_ = at; at += h;
  bv_ = at; at += 1;
  log_std_ = at; at += 1;
  params_.assign(at, 0.0);
}

namespace {

// Orthogonal init: Gram-Schmidt over the shorter dimension of a Gaussian
// matrix, scaled by gain. Gives (semi-)orthogonal weight matrices.
void orthogonal_fill(double* w, std::size_t rows, std::size_t cols, double gain,
                     Rng& rng) {
  const std::size_t big = std::max(rows, cols);
  const std::size_t small = std::min(rows, cols);
  std::vector<double> m(big * small);  // column-major columns of length `big`
  for (double& v : m) v = rng.normal();
  for (std::size_t c = 0; c < small; ++c) {
    double* col = m.data() + c * big;
    for (std::size_t p = 0; p < c; ++p) {
      const double* prev = m.data() + p * big;
      double dot = 0.0;
      for (std::size_t i = 0; i < big; ++i) dot += col[i] * prev[i];
      for (std::size_t i = 0; i < big; ++i) col[i] -= dot * prev[i];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < big; ++i) norm += col[i] * col[i];
    norm = std::sqrt(std::max(norm, 1e-30));
    for (std::size_t i = 0; i < big; ++i) col[i] /= norm;
  }
  // Columns of m are orthonormal in R^big. Lay out as rows x cols.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = rows >= cols ? m[c * big + r] : m[r * big + c];
      w[r * cols + c] = gain * v;
    }
  }
}

}  // namespace

void PolicyNet::init_params(Rng& rng) {
  const double trunk_gain = std::sqrt(2.0);
  const double head_gain = 0.01;  // near-uniform initial policy
  double* p = params_.data();
  orthogonal_fill(p + w1_, hidden_, obs_dim_, trunk_gain, rng);
  orthogonal_fill(p + w2_, hidden_, hidden_, trunk_gain, rng);
  orthogonal_fill(p + wg_, 4, hidden_, head_gain, rng);
  orthogonal_fill(p + wq1_, n_, hidden_, head_gain, rng);
  orthogonal_fill(p + wq2_, n_, hidden_, head_gain, rng);
  orthogonal_fill(p + wmu_, 1, hidden_, head_gain, rng);
  orthogonal_fill(p + wv_, 1, hidden_, 1.0, rng);
  params_[log_std_] = 0.0;
}

PolicyNet::Trace PolicyNet::run_trunk(std::span<const double> obs) const {
  if (static_cast<int>(obs.size()) != obs_dim_)
    throw std::invalid_argument("PolicyNet: observation length mismatch");
  Trace t;
  t.x.assign(obs.begin(), obs.end());
  t.h1.assign(hidden_, 0.0);
  t.h2.assign(hidden_, 0.0);
  const double* p = params_.data();
  linear(p + w1_, p + b1_, t.x, t.h1);
  for (double& v : t.h1) v = std::tanh(v);
  linear(p + w2_, p + b2_, t.h1, t.h2);
  for (double& v : t.h2) v = std::tanh(v);

  PolicyHeads& h = t.heads;
  h.gate_logits.assign(4, 0.0);
  h.q1_logits.assign(n_, 0.0);
  h.q2_logits.assign(n_, 0.0);
  linear(p + wg_, p + bg_, t.h2, h.gate_logits);
  linear(p + wq1_, p + bq1_, t.h2, h.q1_logits);
  linear(p + wq2_, p + bq2_, t.h2, h.q2_logits);
  double mu = 0.0, value = 0.0;
  linear(p + wmu_, p + bmu_, t.h2, std::span<double>(&mu, 1));
  linear(p + wv_, p + bv_, t.h2, std::span<double>(&value, 1));
  h.angle_mean = mu;
  h.value = value;
  h.angle_log_std = std::clamp(params_[log_std_], kLogStdMin, kLogStdMax);
  return t;
}

PolicyHeads PolicyNet::forward(std::span<const double> obs) const {
  return run_trunk(obs).heads;
}

SampledAction PolicyNet::sample(std::span<const double> obs, Rng& rng) const {
  const Trace t = run_trunk(obs);
  const PolicyHeads& h = t.heads;

  SampledAction out;
  const Categorical gate = categorical_from_logits(h.gate_logits);
  out.action.gate = rng.categorical(gate.probs);
  out.log_prob = gate.log_probs[out.action.gate];
  out.entropy = gate.entropy;

  const Categorical q1 = categorical_from_logits(h.q1_logits);
  out.action.q1 = rng.categorical(q1.probs);
  out.log_prob += q1.log_probs[out.action.q1];
  out.entropy += q1.entropy;

  if (out.action.gate == kCnotIndex) {
    const Categorical q2 = categorical_from_logits(h.q2_logits, out.action.q1);
    out.action.q2 = rng.categorical(q2.probs);
    out.log_prob += q2.log_probs[out.action.q2];
    out.entropy += q2.entropy;
    out.action.theta_unit = 0.5;
  } else {
    out.action.q2 = 0;
    if (discrete_only_) {
      out.action.theta_unit = 0.5;  // decoded angle 0; refinement owns angles
    } else {
      const double sigma = std::exp(h.angle_log_std);
      const double z = rng.normal(h.angle_mean, sigma);
      out.action.theta_unit = sigmoid(z);
      out.log_prob += angle_log_density(h.angle_mean, h.angle_log_std, out.action.theta_unit);
      out.entropy += kHalfLog2PiE + h.angle_log_std;
    }
  }
  out.value = h.value;
  return out;
}

ActionEvaluation PolicyNet::evaluate(std::span<const double> obs,
                                     const AgentAction& a) const {
  const Trace t = run_trunk(obs);
  const PolicyHeads& h = t.heads;
  if (a.gate < 0 || a.gate >= 4 || a.q1 < 0 || a.q1 >= n_)
    throw std::invalid_argument("PolicyNet::evaluate: action out of range");

  ActionEvaluation out;
  const Categorical gate = categorical_from_logits(h.gate_logits);
  out.log_prob = gate.log_probs[a.gate];
  out.entropy = gate.entropy;

  const Categorical q1 = categorical_from_logits(h.q1_logits);
  out.log_prob += q1.log_probs[a.q1];
  out.entropy += q1.entropy;

  if (a.gate == kCnotIndex) {
    if (a.q2 < 0 || a.q2 >= n_ || a.q2 == a.q1)
      throw std::invalid_argument("PolicyNet::evaluate: invalid q2");
    const Categorical q2 = categorical_from_logits(h.q2_logits, a.q1);
    out.log_prob += q2.log_probs[a.q2];
    out.entropy += q2.entropy;
  } else if (!discrete_only_) {
    out.log_prob += angle_log_density(h.angle_mean, h.angle_log_std, a.theta_unit);
    out.entropy += kHalfLog2PiE + h.angle_log_std;
  }
  out.value = h.value;
  return out;
}

AgentAction PolicyNet::deterministic_action(std::span<const double> obs) const {
  const PolicyHeads h = forward(obs);
  AgentAction a;
  a.gate = static_cast<int>(std::max_element(h.gate_logits.begin(), h.gate_logits.end()) -
                            h.gate_logits.begin());
  a.q1 = static_cast<int>(std::max_element(h.q1_logits.begin(), h.q1_logits.end()) -
                          h.q1_logits.begin());
  if (a.gate == kCnotIndex) {
    int best = -1;
    for (int j = 0; j < n_; ++j) {
      if (j == a.q1) continue;
      if (best < 0 || h.q2_logits[j] > h.q2_logits[best]) best = j;
    }
    a.q2 = best;
    a.theta_unit = 0.5;
  } else {
    a.q2 = 0;
    a.theta_unit = discrete_only_ ? 0.5 : sigmoid(h.angle_mean);
  }
  return a;
}

void PolicyNet::backward(std::span<const double> obs, const AgentAction& a,
                         double c_logp, double c_value, double c_entropy,
                         std::vector<double>& grad) const {
  if (grad.size() != params_.size())
    throw std::invalid_argument("PolicyNet::backward: gradient buffer size mismatch");
  const Trace t = run_trunk(obs);
  const PolicyHeads& h = t.heads;
  const double* p = params_.data();
  double* g = grad.data();

  std::vector<double> d_h2(hidden_, 0.0);

  // d(log p)/d(logit_j) = 1[j==a] - p_j ; d(entropy)/d(logit_j) = -p_j (log p_j + H)
  auto categorical_head = [&](const Categorical& c, int chosen, int masked,
                              std::size_t w_off, std::size_t b_off, int count) {
    std::vector<double> delta(count, 0.0);
    for (int j = 0; j < count; ++j) {
      if (j == masked) continue;
      double d = c_logp * ((j == chosen ? 1.0 : 0.0) - c.probs[j]);
      if (c.probs[j] > 0.0) d += c_entropy * (-c.probs[j] * (c.log_probs[j] + c.entropy));
      delta[j] = d;
    }
    linear_backward(p + w_off, t.h2, delta, g + w_off, g + b_off, d_h2);
  };

  const Categorical gate = categorical_from_logits(h.gate_logits);
  categorical_head(gate, a.gate, -1, wg_, bg_, 4);
  const Categorical q1 = categorical_from_logits(h.q1_logits);
  categorical_head(q1, a.q1, -1, wq1_, bq1_, n_);

  if (a.gate == kCnotIndex) {
    const Categorical q2 = categorical_from_logits(h.q2_logits, a.q1);
    categorical_head(q2, a.q2, a.q1, wq2_, bq2_, n_);
  } else if (!discrete_only_) {
    const double u = std::clamp(a.theta_unit, kThetaUnitFloor, 1.0 - kThetaUnitFloor);
    const double z = std::log(u / (1.0 - u));
    const double sigma = std::exp(h.angle_log_std);
    const double zd = (z - h.angle_mean) / sigma;
    const double d_mu = c_logp * zd / sigma;
    linear_backward(p + wmu_, t.h2, std::span<const double>(&d_mu, 1), g + wmu_,
                    g + bmu_, d_h2);
    // log-std gradient passes through the clamp only in its interior
    if (params_[log_std_] > kLogStdMin && params_[log_std_] < kLogStdMax)
      grad[log_std_] += c_logp * (zd * zd - 1.0) + c_entropy;
  }

  linear_backward(p + wv_, t.h2, std::span<const double>(&c_value, 1), g + wv_,
                  g + bv_, d_h2);

  // trunk
  std::vector<double> d_h2pre(hidden_);
  for (int i = 0; i < hidden_; ++i) d_h2pre[i] = d_h2[i] * (1.0 - t.h2[i] * t.h2[i]);
  std::vector<double> d_h1(hidden_, 0.0);
  linear_backward(p + w2_, t.h1, d_h2pre, g + w2_, g + b2_, d_h1);
  std::vector<double> d_h1pre(hidden_);
  for (int i = 0; i < hidden_; ++i) d_h1pre[i] = d_h1[i] * (1.0 - t.h1[i] * t.h1[i]);
  std::vector<double> d_x(obs_dim_, 0.0);
  linear_backward(p + w1_, t.x, d_h1pre, g + w1_, g + b1_, d_x);
}

void PolicyNet::save(std::ostream& os) const {
  os << "qsynth-policy v1\n";
  os << "n " << n_ << "\n";
  os << "hidden " << hidden_ << "\n";
  os << "discrete_only " << (discrete_only_ ? 1 : 0) << "\n";
  os << "param_count " << params_.size() << "\n";
  char buf[40];
  for (double v : params_) {
    std::snprintf(buf, sizeof(buf), "%a", v);
    os << buf << "\n";
  }
}

PolicyNet PolicyNet::load(std::istream& is) {
  std::string magic, version;
  if (!(is >> magic >> version) || magic != "qsynth-policy" || version != "v1")
    throw std::invalid_argument("PolicyNet::load: bad header");
  std::string key;
  int n = 0, hidden = 0, discrete = 0;
  std::size_t count = 0;
  if (!(is >> key >> n) || key != "n")
    throw std::invalid_argument("PolicyNet::load: missing n");
  if (!(is >> key >> hidden) || key != "hidden")
    throw std::invalid_argument("PolicyNet::load: missing hidden");
  if (!(is >> key >> discrete) || key != "discrete_only")
    throw std::invalid_argument("PolicyNet::load: missing discrete_only");
  if (!(is >> key >> count) || key != "param_count")
    throw std::invalid_argument("PolicyNet::load: missing param_count");
  PolicyNet net(n, hidden, discrete != 0);
  if (net.params_.size() != count)
    throw std::invalid_argument("PolicyNet::load: parameter count mismatch");
  std::string tok;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(is >> tok)) throw std::invalid_argument("PolicyNet::load: truncated parameters");
    net.params_[i] = std::strtod(tok.c_str(), nullptr);
  }
  return net;
}

}  // namespace qsynth
