#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cts/rng.hpp"
#include "cts/rollout.hpp"

using namespace cts;

namespace {

// O(T^2) brute force: A_t = sum_l (gamma*lambda)^l * delta_{t+l}, the chain
// stopping at terminals and truncations.
void oracle_gae(const std::vector<double>& r, const std::vector<double>& v,
                const std::vector<uint8_t>& done,
                const std::vector<uint8_t>& trunc,
                const std::vector<double>& boot, double gamma, double lambda,
                std::vector<double>& adv) {
  const size_t n = r.size();
  adv.assign(n, 0.0);
  for (size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    double w = 1.0;
    for (size_t l = t; l < n; ++l) {
      double delta;
      if (done[l])
        delta = r[l] - v[l];
      else if (trunc[l])
        delta = r[l] + gamma * boot[l] - v[l];
      else
        delta = r[l] + gamma * v[l + 1] - v[l];
      acc += w * delta;
      if (done[l] || trunc[l]) break;
      w *= gamma * lambda;
    }
    adv[t] = acc;
  }
}

}  // namespace

TEST_CASE("undiscounted returns over a terminal episode") {
  const std::vector<double> rewards{1, 1, 1};
  const std::vector<double> values{0, 0, 0};
  const std::vector<uint8_t> dones{0, 0, 1};
  auto [adv, ret] = compute_gae(rewards, values, dones, 0.0, 1.0, 1.0);
  CHECK(ret[0] == doctest::Approx(3.0));
  CHECK(ret[1] == doctest::Approx(2.0));
  CHECK(ret[2] == doctest::Approx(1.0));
}

TEST_CASE("lambda 0 reduces to one-step TD") {
  Rng rng(5);
  const double gamma = 0.97;
  std::vector<double> rewards(10), values(10);
  std::vector<uint8_t> dones(10, 0);
  dones[9] = 1;
  for (int i = 0; i < 10; ++i) {
    rewards[static_cast<size_t>(i)] = gaussian(rng);
    values[static_cast<size_t>(i)] = gaussian(rng);
  }
  auto [adv, ret] = compute_gae(rewards, values, dones, 0.0, gamma, 0.0);
  for (size_t t = 0; t < 10; ++t) {
    const double next_v = dones[t] ? 0.0 : values[t + 1];
    CHECK(adv[t] ==
          doctest::Approx(rewards[t] + gamma * next_v - values[t]).epsilon(1e-12));
  }
}

TEST_CASE("matches the O(T^2) brute-force oracle") {
  Rng rng(9);
  for (int rep = 0; rep < 500; ++rep) {
    const size_t n = 1 + static_cast<size_t>(uniform(rng) * 12);
    std::vector<double> rewards(n), values(n), boot(n, 0.0);
    std::vector<uint8_t> dones(n, 0), trunc(n, 0);
    for (size_t i = 0; i < n; ++i) {
      rewards[i] = gaussian(rng);
      values[i] = gaussian(rng);
      const double u = uniform(rng);
      if (u < 0.15) {
        dones[i] = 1;
      } else if (u < 0.25) {
        trunc[i] = 1;
        boot[i] = gaussian(rng);
      }
    }
    if (!dones[n - 1] && !trunc[n - 1]) {
      trunc[n - 1] = 1;
      boot[n - 1] = gaussian(rng);
    }
    const double gamma = uniform(rng, 0.9, 0.999);
    const double lambda = uniform(rng, 0.0, 1.0);

    std::vector<double> adv, ret, adv_oracle;
    compute_gae(rewards, values, dones, trunc, boot, gamma, lambda, adv, ret);
    oracle_gae(rewards, values, dones, trunc, boot, gamma, lambda, adv_oracle);
    for (size_t t = 0; t < n; ++t) {
      CHECK(std::abs(adv[t] - adv_oracle[t]) <= 1e-10);
      CHECK(std::abs(ret[t] - (adv[t] + values[t])) <= 1e-12);
    }
  }
}

TEST_CASE("length mismatch and open stream rejected") {
  std::vector<double> r{1, 2}, v{0};
  std::vector<uint8_t> d{0, 1}, tr{0, 0};
  std::vector<double> boot{0, 0}, adv, ret;
  CHECK_THROWS_AS(compute_gae(r, v, d, tr, boot, 0.99, 0.95, adv, ret),
                  std::invalid_argument);
  std::vector<double> v2{0, 0};
  std::vector<uint8_t> d_open{0, 0};
  CHECK_THROWS_AS(compute_gae(r, v2, d_open, tr, boot, 0.99, 0.95, adv, ret),
                  std::invalid_argument);
}

TEST_CASE("buffer bookkeeping") {
  RolloutBuffer buf(3, 2);
  CHECK(buf.total() == 0);
  buf.at(1, 0).reward.push_back(1.0);
  buf.at(2, 1).reward.push_back(1.0);
  buf.at(2, 1).reward.push_back(1.0);
  CHECK(buf.total() == 3);
  CHECK(buf.at(1, 0).env == 1);
  CHECK(buf.at(2, 1).agent == 1);
  buf.clear();
  CHECK(buf.total() == 0);
  CHECK(buf.at(2, 1).env == 2);
}
