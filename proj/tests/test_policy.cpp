#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qsynth/policy.hpp"
#include "support/test_oracles.hpp"

using namespace qsynth;
namespace oracle = qsynth::testing;

namespace {

Observation random_obs(int n, Rng& rng) {
  return encode_observation(oracle::random_state(n, rng), oracle::random_state(n, rng));
}

// Scalar objective matching backward()'s coefficient contract.
double objective(const PolicyNet& policy, const Observation& obs, const AgentAction& a,
                 double c1, double c2, double c3) {
  const ActionEvaluation ev = policy.evaluate(obs, a);
  return c1 * ev.log_prob + c2 * ev.value + c3 * ev.entropy;
}

}  // namespace

TEST_CASE("zeroed weights give uniform heads") {
  PolicyNet policy(2, 1);
  std::fill(policy.params().begin(), policy.params().end(), 0.0);
  const Observation obs(policy.obs_dim(), 0.3);
  const PolicyHeads h = policy.forward(obs);
  for (double l : h.gate_logits) CHECK(l == 0.0);
  for (double l : h.q1_logits) CHECK(l == 0.0);
  CHECK(h.angle_mean == 0.0);
  CHECK(h.value == 0.0);

  // uniform 4-way gate head and 2-way q1 head
  const ActionEvaluation ev = policy.evaluate(obs, {0, 1, 0, 0.5});
  CHECK(ev.log_prob ==
        doctest::Approx(std::log(0.25) + std::log(0.5) +
                        // angle density at theta_unit = 0.5: z = 0, sigma = 1,
                        // change of variables -log(1/4)
                        (-0.5 * std::log(2 * M_PI) + std::log(4.0)))
            .epsilon(1e-12));

  // CNOT with n = 2: the masked q2 head has all mass on the single other qubit
  const ActionEvaluation cnot_ev = policy.evaluate(obs, {3, 0, 1, 0.5});
  CHECK(cnot_ev.log_prob == doctest::Approx(std::log(0.25) + std::log(0.5) + 0.0)
                                .epsilon(1e-12));
  // entropies: log 4 (gate) + log 2 (q1) + 0 (single-option q2)
  CHECK(cnot_ev.entropy ==
        doctest::Approx(std::log(4.0) + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("forward is pure and validates dimensions") {
  PolicyNet policy(2, 9);
  Rng rng(4);
  const Observation obs = random_obs(2, rng);
  const PolicyHeads a = policy.forward(obs);
  const PolicyHeads b = policy.forward(obs);
  CHECK(a.gate_logits == b.gate_logits);
  CHECK(a.value == b.value);
  CHECK_THROWS_AS(policy.forward(Observation(7, 0.0)), std::invalid_argument);
}

TEST_CASE("softmax heads are normalized") {
  PolicyNet policy(3, 21);
  Rng rng(6);
  const PolicyHeads h = policy.forward(random_obs(3, rng));
  auto sum_softmax = [](const std::vector<double>& logits) {
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double s = 0.0;
    for (double l : logits) s += std::exp(l - mx);
    double total = 0.0;
    for (double l : logits) total += std::exp(l - mx) / s;
    return total;
  };
  CHECK(std::abs(sum_softmax(h.gate_logits) - 1.0) < 1e-12);
  CHECK(std::abs(sum_softmax(h.q1_logits) - 1.0) < 1e-12);
  CHECK(std::abs(sum_softmax(h.q2_logits) - 1.0) < 1e-12);
}

TEST_CASE("sampling is deterministic given the rng stream") {
  PolicyNet policy(2, 33);
  Rng rng_obs(8);
  const Observation obs = random_obs(2, rng_obs);
  Rng a(123), b(123);
  for (int i = 0; i < 50; ++i) {
    const SampledAction sa = policy.sample(obs, a);
    const SampledAction sb = policy.sample(obs, b);
    CHECK(sa.action.gate == sb.action.gate);
    CHECK(sa.action.q1 == sb.action.q1);
    CHECK(sa.action.q2 == sb.action.q2);
    CHECK(sa.action.theta_unit == sb.action.theta_unit);
    CHECK(sa.log_prob == sb.log_prob);
  }
}

TEST_CASE("sampled actions are valid and q2 is masked") {
  PolicyNet policy(3, 77);
  Rng rng(9);
  const Observation obs = random_obs(3, rng);
  for (int i = 0; i < 500; ++i) {
    const SampledAction s = policy.sample(obs, rng);
    CHECK(s.action.gate >= 0);
    CHECK(s.action.gate < 4);
    CHECK(s.action.q1 >= 0);
    CHECK(s.action.q1 < 3);
    if (s.action.gate == 3) CHECK(s.action.q2 != s.action.q1);
    CHECK(s.action.theta_unit >= 0.0);
    CHECK(s.action.theta_unit <= 1.0);
    CHECK(std::isfinite(s.log_prob));
  }
}

TEST_CASE("evaluate matches the density assigned at sampling time") {
  PolicyNet policy(2, 5);
  Rng rng(10);
  const Observation obs = random_obs(2, rng);
  for (int i = 0; i < 200; ++i) {
    const SampledAction s = policy.sample(obs, rng);
    const ActionEvaluation ev = policy.evaluate(obs, s.action);
    CHECK(std::abs(ev.log_prob - s.log_prob) < 1e-9);
    CHECK(std::abs(ev.entropy - s.entropy) < 1e-12);
    CHECK(ev.value == s.value);
  }
}

TEST_CASE("angle head is inert for CNOT actions") {
  PolicyNet policy(2, 5);
  Rng rng(11);
  const Observation obs = random_obs(2, rng);
  const AgentAction cnot{3, 0, 1, 0.9};
  const double before = policy.evaluate(obs, cnot).log_prob;
  policy.params().back() = 1.5;  // angle log-std is the final parameter
  const double after = policy.evaluate(obs, cnot).log_prob;
  CHECK(before == after);
}

TEST_CASE("small angle std concentrates theta_unit at sigmoid(mu)") {
  PolicyNet policy(2, 5);
  std::fill(policy.params().begin(), policy.params().end(), 0.0);
  policy.params().back() = -4.0;  // sigma = e^-4
  Rng rng(12);
  const Observation obs(policy.obs_dim(), 0.1);
  double sum = 0.0;
  int rotations = 0;
  for (int i = 0; i < 10000; ++i) {
    const SampledAction s = policy.sample(obs, rng);
    if (s.action.gate != 3) {
      sum += s.action.theta_unit;
      ++rotations;
    }
  }
  REQUIRE(rotations > 5000);
  const double mean = sum / rotations;
  // sigmoid(0) = 0.5; sample std of theta_unit is ~ sigma / 4
  const double se = (std::exp(-4.0) / 4.0) / std::sqrt(static_cast<double>(rotations));
  CHECK(std::abs(mean - 0.5) < 3.0 * se + 1e-6);
}

TEST_CASE("zero coefficients give zero gradients") {
  PolicyNet policy(2, 6);
  Rng rng(13);
  const Observation obs = random_obs(2, rng);
  const SampledAction s = policy.sample(obs, rng);
  std::vector<double> grad(policy.param_count(), 0.0);
  policy.backward(obs, s.action, 0.0, 0.0, 0.0, grad);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(1701);
  int configs_checked = 0;
  for (int cfg_idx = 0; cfg_idx < 20; ++cfg_idx) {
    const int n = cfg_idx % 2 == 0 ? 2 : 3;
    const bool discrete_only = cfg_idx >= 16;
    PolicyNet policy(n, 9000 + cfg_idx, 16, discrete_only);  // small net keeps FD cheap
    for (double& p : policy.params()) p += rng.uniform(-0.05, 0.05);

    const Observation obs = random_obs(n, rng);
    // alternate rotation / CNOT coverage
    SampledAction s = policy.sample(obs, rng);
    const bool want_cnot = cfg_idx % 2 == 1;
    for (int guard = 0; guard < 200 && (s.action.gate == 3) != want_cnot; ++guard)
      s = policy.sample(obs, rng);

    const double c1 = rng.uniform(-1.0, 1.0);
    const double c2 = rng.uniform(-1.0, 1.0);
    const double c3 = rng.uniform(-1.0, 1.0);

    std::vector<double> grad(policy.param_count(), 0.0);
    policy.backward(obs, s.action, c1, c2, c3, grad);

    const double h = 1e-5;
    for (std::size_t i = 0; i < policy.param_count(); ++i) {
      const double saved = policy.params()[i];
      policy.params()[i] = saved + h;
      const double plus = objective(policy, obs, s.action, c1, c2, c3);
      policy.params()[i] = saved - h;
      const double minus = objective(policy, obs, s.action, c1, c2, c3);
      policy.params()[i] = saved;
      const double fd = (plus - minus) / (2.0 * h);
      const double err = std::abs(grad[i] - fd);
      const double tol = 1e-4 * std::max(std::abs(fd), std::abs(grad[i])) + 1e-8;
      if (err >= tol) {
        CAPTURE(cfg_idx);
        CAPTURE(i);
        CAPTURE(grad[i]);
        CAPTURE(fd);
      }
      REQUIRE(err < tol);
    }
    ++configs_checked;
  }
  CHECK(configs_checked == 20);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  PolicyNet policy(3, 321);
  Rng rng(14);
  for (double& p : policy.params()) p += rng.uniform(-0.2, 0.2);

  std::stringstream ss;
  policy.save(ss);
  const PolicyNet loaded = PolicyNet::load(ss);
  REQUIRE(loaded.param_count() == policy.param_count());
  for (std::size_t i = 0; i < policy.param_count(); ++i)
    CHECK(loaded.params()[i] == policy.params()[i]);

  std::stringstream again;
  loaded.save(again);
  CHECK(again.str() == ss.str());

  std::stringstream garbage("not-a-checkpoint");
  CHECK_THROWS_AS(PolicyNet::load(garbage), std::invalid_argument);
}

TEST_CASE("deterministic action takes argmax heads") {
  PolicyNet policy(2, 55);
  Rng rng(15);
  const Observation obs = random_obs(2, rng);
  const PolicyHeads h = policy.forward(obs);
  const AgentAction a = policy.deterministic_action(obs);
  for (int j = 0; j < 4; ++j) CHECK(h.gate_logits[a.gate] >= h.gate_logits[j]);
  for (int j = 0; j < 2; ++j) CHECK(h.q1_logits[a.q1] >= h.q1_logits[j]);
  if (a.gate != 3) {
    CHECK(a.theta_unit == doctest::Approx(1.0 / (1.0 + std::exp(-h.angle_mean)))
                              .epsilon(1e-15));
  }
}
