#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "invar/error.hpp"
#include "invar/imgcore.hpp"
#include "invar/timewarp.hpp"

using namespace invar;

namespace {

TimeSeries column(std::initializer_list<double> v) {
  TimeSeries s(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) s(i++, 0) = x;
  return s;
}

// Minimum over every monotone path, by explicit enumeration.
double brute_dtw(const TimeSeries& x, const TimeSeries& y) {
  const Eigen::Index T = x.rows(), S = y.rows();
  double best = INFINITY;
  std::function<void(Eigen::Index, Eigen::Index, double)> walk = [&](Eigen::Index i, Eigen::Index k, double acc) {
    acc += (x.row(i) - y.row(k)).squaredNorm();
    if (i == T - 1 && k == S - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < T && k + 1 < S) walk(i + 1, k + 1, acc);
    if (i + 1 < T) walk(i + 1, k, acc);
    if (k + 1 < S) walk(i, k + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

TimeSeries from_code(int code, int len, int alphabet) {
  TimeSeries s(len, 1);
  for (int t = 0; t < len; ++t) {
    s(t, 0) = code % alphabet;
    code /= alphabet;
  }
  return s;
}

TimeSeries smooth_input(int T, int m, double sigma, std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  TimeSeries u(T, m);
  for (int c = 0; c < m; ++c) {
    Raster r(1, T);
    for (int t = 0; t < T; ++t) r(0, t) = n(rng);
    const Raster b = gaussian_blur(r, sigma);
    const double mean = b.mean(), sd = std::sqrt((b - mean).square().mean());
    for (int t = 0; t < T; ++t) u(t, c) = (b(0, t) - mean) / sd;
  }
  return u;
}

std::vector<double> sine_warp(int T, double a) {
  std::vector<double> w(T);
  for (int t = 0; t < T; ++t) {
    const double s = t / (T - 1.0);
    w[t] = (T - 1) * (s + a * std::sin(2.0 * std::numbers::pi * s) / (2.0 * std::numbers::pi));
  }
  w.back() = T - 1.0;
  return w;
}

LtiModel two_channel_model() {
  LtiModel m;
  m.A.resize(3, 3);
  m.A << -0.1, 0.2, 0.0, -0.2, -0.1, 0.0, 0.0, 0.0, -0.3;
  m.B = Eigen::MatrixXd::Zero(3, 2);
  m.B(0, 0) = 1.0;
  m.B(2, 1) = 1.0;
  m.C.resize(2, 3);
  m.C << 1.0, 0.5, 0.0, 0.0, 0.3, 1.0;
  return m;
}

}  // namespace

TEST_CASE("dtw examples") {
  const TimeSeries x = column({0.0, 1.0, 3.0, 2.0});
  const DtwResult self = dtw(x, x);
  CHECK(self.cost == 0.0);
  REQUIRE(self.path.size() == 4);
  for (int t = 0; t < 4; ++t) CHECK(self.path[t] == std::pair{t, t});

  const DtwResult r = dtw(column({0.0, 1.0}), column({0.0, 0.0, 1.0}));
  CHECK(r.cost == 0.0);
  CHECK(r.path == WarpPath{{0, 0}, {0, 1}, {1, 2}});

  CHECK(series_l2(column({1.0, 2.0}), column({0.0, 0.0})) == 5.0);
  CHECK_THROWS_AS(dtw(x, TimeSeries::Zero(4, 2)), Error);
}

TEST_CASE("dtw matches path enumeration on short binary series") {
  for (int T = 2; T <= 5; ++T)
    for (int S = 2; S <= 5; ++S)
      for (int a = 0; a < (1 << T); ++a)
        for (int b = 0; b < (1 << S); ++b) {
          const TimeSeries x = from_code(a, T, 2), y = from_code(b, S, 2);
          REQUIRE(dtw(x, y).cost == brute_dtw(x, y));
        }
}

TEST_CASE("dtw properties on random series") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> len(2, 9), dim(1, 3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = dim(rng);
    TimeSeries x(len(rng), d), y(len(rng), d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = n(rng);
    const DtwResult r = dtw(x, y);
    CHECK(r.cost == dtw(y, x).cost);
    CHECK(dtw(x, x).cost == 0.0);
    REQUIRE(r.path.front() == std::pair{0, 0});
    REQUIRE(r.path.back() == std::pair{static_cast<int>(x.rows()) - 1, static_cast<int>(y.rows()) - 1});
    double along = 0.0;
    for (std::size_t k = 0; k < r.path.size(); ++k) {
      along += (x.row(r.path[k].first) - y.row(r.path[k].second)).squaredNorm();
      if (k == 0) continue;
      const int di = r.path[k].first - r.path[k - 1].first, dk = r.path[k].second - r.path[k - 1].second;
      CHECK(((di == 1 && dk == 1) || (di == 1 && dk == 0) || (di == 0 && dk == 1)));
    }
    CHECK(along == doctest::Approx(r.cost).epsilon(1e-12));
    if (x.rows() <= 6 && y.rows() <= 6) CHECK(r.cost == doctest::Approx(brute_dtw(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("simulate") {
  LtiModel integ;
  integ.A = Eigen::MatrixXd::Zero(1, 1);
  integ.B = Eigen::MatrixXd::Ones(1, 1);
  integ.C = Eigen::MatrixXd::Ones(1, 1);

  const TimeSeries u = column({1.0, -2.0, 0.5, 3.0, 1.0});
  CHECK(simulate(integ, TimeSeries::Zero(5, 1)).isZero(0.0));

  const TimeSeries plain = simulate(integ, u);
  CHECK(simulate(integ, u, {0.0, 1.0, 2.0, 3.0, 4.0}) == plain);
  double acc = 0.0;
  for (int t = 0; t < 5; ++t) {
    CHECK(plain(t, 0) == acc);
    acc += u(t, 0);
  }

  // Warped integrator: cumulative sum of the interpolated input.
  const std::vector<double> w{0.0, 0.5, 1.5, 3.0, 4.0};
  const TimeSeries warped = simulate(integ, u, w);
  const double uw[] = {1.0, -0.5, -0.75, 3.0, 1.0};
  acc = 0.0;
  for (int t = 0; t < 5; ++t) {
    CHECK(warped(t, 0) == doctest::Approx(acc));
    acc += uw[t];
  }

  const LtiModel m = two_channel_model();
  std::mt19937 rng(1);
  const TimeSeries u2 = smooth_input(30, 2, 3.0, rng);
  std::vector<double> id(30);
  for (int t = 0; t < 30; ++t) id[t] = t;
  CHECK(simulate(m, u2, id) == simulate(m, u2));

  LtiModel bad = integ;
  bad.A(0, 0) = 0.1;
  CHECK_THROWS_AS(simulate(bad, u), Error);
  bad = integ;
  bad.C = Eigen::MatrixXd::Ones(1, 2);
  CHECK_THROWS_AS(validate(bad), Error);
  CHECK_THROWS_AS(simulate(integ, u, {0.0, 5.0}), Error);
}

TEST_CASE("twdc objective and identical series") {
  const LtiModel m = two_channel_model();
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const TimeSeries u = smooth_input(60, 2, 6.0, rng);
    const TimeSeries x = simulate(m, u);
    const TwdcResult r = twdc(x, x, m);
    for (std::size_t k = 1; k < r.objective.size(); ++k) CHECK(r.objective[k] <= r.objective[k - 1]);
    // Bounded by the exact alignment: u_j = u_0 = u with identity warps,
    // which leaves only the priors on the input.
    double bound = 2e-6 * u.squaredNorm();
    for (int t = 0; t + 1 < 60; ++t) bound += (u.row(t + 1) - u.row(t)).squaredNorm();
    CHECK(r.cost <= bound);
    CHECK(r.w1 == r.w2);
  }
}

TEST_CASE("twdc separates warped copies from independent inputs") {
  const LtiModel m = two_channel_model();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> amp(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, 0.01);
  const int T = 100;
  int ok = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const TimeSeries u = smooth_input(T, 2, 8.0, rng), v = smooth_input(T, 2, 8.0, rng);
    TimeSeries x = simulate(m, u), y = simulate(m, u, sine_warp(T, amp(rng))), z = simulate(m, v);
    for (TimeSeries* s : {&x, &y, &z})
      for (Eigen::Index i = 0; i < s->size(); ++i) s->data()[i] += noise(rng);
    const TwdcResult same = twdc(x, y, m), cross = twdc(x, z, m);
    ok += same.cost < 0.2 * cross.cost;
    for (const TwdcResult* r : {&same, &cross}) {
      for (std::size_t k = 1; k < r->objective.size(); ++k) CHECK(r->objective[k] <= r->objective[k - 1]);
      CHECK(r->w1.front() == 0.0);
      CHECK(r->w1.back() == T - 1.0);
      for (std::size_t t = 1; t < r->w2.size(); ++t) CHECK(r->w2[t] >= r->w2[t - 1]);
    }
  }
  CHECK(ok == 5);
}

TEST_CASE("twdc with a pass-through model orders pairs like dtw") {
  // Unit-step Euler with A = -I makes the state the previous input.
  LtiModel pass;
  pass.A = -Eigen::MatrixXd::Identity(1, 1);
  pass.B = Eigen::MatrixXd::Identity(1, 1);
  pass.C = Eigen::MatrixXd::Identity(1, 1);
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> amp(-0.5, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const TimeSeries u = smooth_input(60, 1, 4.0, rng), v = smooth_input(60, 1, 4.0, rng);
    const TimeSeries x = simulate(pass, u), y = simulate(pass, u, sine_warp(60, amp(rng))), z = simulate(pass, v);
    const bool by_dtw = dtw(x, y).cost < dtw(x, z).cost;
    const bool by_twdc = twdc(x, y, pass).cost < twdc(x, z, pass).cost;
    CHECK(by_dtw == by_twdc);
  }
}

TEST_CASE("twdc rejects an ill-conditioned deconvolution") {
  // Relative degree two: C B = 0, so the second-to-last input is invisible.
  LtiModel m;
  m.A.resize(2, 2);
  m.A << 0.0, 1.0, 0.0, 0.0;
  m.B.resize(2, 1);
  m.B << 0.0, 1.0;
  m.C.resize(1, 2);
  m.C << 1.0, 0.0;
  std::mt19937 rng(5);
  const TimeSeries x = simulate(m, smooth_input(20, 1, 3.0, rng));
  TwdcParams p;
  p.ridge = 0.0;
  try {
    twdc(x, x, m, p);
    FAIL("expected a conditioning error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Conditioning);
  }
  CHECK_THROWS_AS(twdc(x, TimeSeries::Zero(19, 1), m), Error);
}

TEST_CASE("experimental least-squares model fit") {
  LtiModel m;
  m.A.resize(2, 2);
  m.A << -0.2, 0.1, -0.1, -0.3;
  m.B.resize(2, 1);
  m.B << 1.0, 0.5;
  m.C = Eigen::MatrixXd::Identity(2, 2);
  std::mt19937 rng(17);
  const TimeSeries u = smooth_input(80, 1, 2.0, rng);
  const TimeSeries y = simulate(m, u);
  const LtiModel fit = experimental::fit_lti(y, u);
  CHECK((fit.A - m.A).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.B - m.B).cwiseAbs().maxCoeff() < 1e-8);
}
