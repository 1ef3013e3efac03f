#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "agsam/kernels.hpp"
#include "agsam/optim.hpp"
#include "agsam/quadratic.hpp"
#include "agsam/rng.hpp"

using namespace agsam;
using namespace agsam::optim;

namespace {

// quadratic pair disguised as a batch loss: batches tagged by their first
// label pick the train or valid quadratic
struct QuadPair {
  QuadraticLoss train;
  QuadraticLoss valid;

  LossFn loss_fn() const {
    return [this](const ParamVector& theta, const Batch& batch) {
      const QuadraticLoss& q = batch.labels.at(0) == 0 ? train : valid;
      return BatchGradEval{q.value(theta), 0.0, q.grad(theta)};
    };
  }
};

Batch tag_batch(int tag) {
  Batch b;
  b.rows = 1;
  b.dim = 1;
  b.features = {0.0};
  b.labels = {tag};
  return b;
}

bool bitwise_equal(const ParamVector& a, const ParamVector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.values().data(), b.values().data(),
                     a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("sgd_step plain update") {
  OptimizerState state;
  const SgdConfig cfg{0.1, 0.0, 0.0};
  const ParamVector theta = make_param_vector({1.0});
  const ParamVector grad = make_param_vector({2.0});
  const ParamVector next = sgd_step(state, cfg, theta, grad);
  CHECK(next[0] == 0.8);
  CHECK(state.step_count == 1);
}

TEST_CASE("sgd_step with zero gradient and no decay is a no-op") {
  OptimizerState state;
  const SgdConfig cfg{0.5, 0.9, 0.0};
  const ParamVector theta = make_param_vector({1.0, -2.0});
  const ParamVector zero = make_param_vector({0.0, 0.0});
  const ParamVector next = sgd_step(state, cfg, theta, zero);
  CHECK(next[0] == 1.0);
  CHECK(next[1] == -2.0);
}

TEST_CASE("sgd momentum matches the hand-unrolled recurrence exactly") {
  const double lr = 0.1, momentum = 0.9, wd = 0.01;
  OptimizerState state;
  const SgdConfig cfg{lr, momentum, wd};
  ParamVector theta = make_param_vector({1.0, -0.5});
  const ParamVector g1 = make_param_vector({0.3, 0.7});
  const ParamVector g2 = make_param_vector({-0.2, 0.4});

  // independent recurrence
  double buf[2] = {0.0, 0.0};
  double t[2] = {1.0, -0.5};
  for (const auto* g : {&g1, &g2}) {
    for (int i = 0; i < 2; ++i) {
      buf[i] = momentum * buf[i];
      buf[i] += (*g)[i];
      buf[i] += wd * t[i];
      t[i] = t[i];
    }
    for (int i = 0; i < 2; ++i) t[i] -= lr * buf[i];
  }

  theta = sgd_step(state, cfg, theta, g1);
  theta = sgd_step(state, cfg, theta, g2);
  CHECK(theta[0] == t[0]);
  CHECK(theta[1] == t[1]);
}

TEST_CASE("sam_perturb analytic cases") {
  const ParamVector theta = make_param_vector({0.0, 0.0});
  const ParamVector grad = make_param_vector({3.0, 4.0});
  const ParamVector out = sam_perturb(theta, grad, 0.05, false);
  CHECK(out[0] == doctest::Approx(0.03).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.04).epsilon(1e-15));

  const ParamVector zero_grad = make_param_vector({0.0, 0.0});
  const ParamVector same = sam_perturb(theta, zero_grad, 0.05, false);
  CHECK(bitwise_equal(same, theta));

  // ASAM: theta=[2,0], g=[1,0] -> T=|theta|, T^2 g/||T g|| = [2,0]
  const ParamVector t2 = make_param_vector({2.0, 0.0});
  const ParamVector g2 = make_param_vector({1.0, 0.0});
  const ParamVector adaptive = sam_perturb(t2, g2, 1.0, true);
  CHECK(adaptive[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(adaptive[1] == 0.0);
}

TEST_CASE("sam_step with rho=0 equals sgd_step bitwise") {
  const QuadPair pair{QuadraticLoss::random_spd(3, 71),
                      QuadraticLoss::random_spd(3, 72)};
  const LossFn fn = pair.loss_fn();
  const Batch bt = tag_batch(0);

  ParamVector theta_sam = make_param_vector({0.4, -0.7, 1.1});
  ParamVector theta_sgd = theta_sam;
  OptimizerState s1, s2;
  const SamConfig cfg{0.0, {0.05, 0.9, 0.001}, false};
  for (int step = 0; step < 25; ++step) {
    theta_sam = sam_step(s1, cfg, theta_sam, bt, fn).first;
    const BatchGradEval eval = fn(theta_sgd, bt);
    theta_sgd = sgd_step(s2, cfg.base, theta_sgd, eval.grad);
    CHECK(bitwise_equal(theta_sam, theta_sgd));
  }
}

TEST_CASE("sam_step matches the two-phase closed form on a quadratic") {
  const QuadraticLoss q = QuadraticLoss::random_spd(4, 99);
  const LossFn fn = [&](const ParamVector& t, const Batch&) {
    return BatchGradEval{q.value(t), 0.0, q.grad(t)};
  };
  const double rho = 0.1, lr = 0.05;
  const ParamVector theta = make_param_vector({1.0, -1.0, 0.5, 2.0});

  OptimizerState state;
  const SamConfig cfg{rho, {lr, 0.0, 0.0}, false};
  const ParamVector got = sam_step(state, cfg, theta, tag_batch(0), fn).first;

  ParamVector g1 = q.grad(theta);
  ParamVector tilt = theta;
  tilt.axpy(rho / g1.norm(), g1);
  ParamVector g2 = q.grad(tilt);
  ParamVector want = theta;
  want.axpy(-lr, g2);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(got[i] - want[i]) <= 1e-12);
}

TEST_CASE("sam_step at a stationary point moves only by weight decay") {
  const QuadraticLoss q = QuadraticLoss::diagonal({2.0, 3.0}, {0.5, -0.25});
  const LossFn fn = [&](const ParamVector& t, const Batch&) {
    return BatchGradEval{q.value(t), 0.0, q.grad(t)};
  };
  OptimizerState state;
  const SamConfig cfg{0.1, {0.1, 0.0, 0.01}, false};
  const ParamVector theta = make_param_vector({0.5, -0.25});  // the minimum
  const ParamVector next = sam_step(state, cfg, theta, tag_batch(0), fn).first;
  CHECK(next[0] == doctest::Approx(0.5 * (1.0 - 0.1 * 0.01)).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(-0.25 * (1.0 - 0.1 * 0.01)).epsilon(1e-15));
}

TEST_CASE("agnostic_sam_step with rho2=0 reduces to sam_step bitwise") {
  for (const bool adaptive : {false, true}) {
    for (const AgnosticVariant variant :
         {AgnosticVariant::kFull, AgnosticVariant::kSimpler}) {
      const QuadPair pair{QuadraticLoss::random_spd(3, 301),
                          QuadraticLoss::random_symmetric(3, 302)};
      const LossFn fn = pair.loss_fn();
      const Batch bt = tag_batch(0), bv = tag_batch(1);

      ParamVector theta_ag = make_param_vector({0.9, -0.2, 0.4});
      ParamVector theta_sam = theta_ag;
      OptimizerState s1, s2;
      const AgnosticSamConfig ag{0.08, 0.0, 0.9, {0.05, 0.9, 0.0}, adaptive,
                                 variant};
      const SamConfig sam{0.08, {0.05, 0.9, 0.0}, adaptive};
      for (int step = 0; step < 50; ++step) {
        theta_ag = agnostic_sam_step(s1, ag, theta_ag, bt, bv, fn).first;
        theta_sam = sam_step(s2, sam, theta_sam, bt, fn).first;
        REQUIRE(bitwise_equal(theta_ag, theta_sam));
      }
    }
  }
}

TEST_CASE("beta=0 keeps no history in g_v") {
  const QuadPair pair{QuadraticLoss::random_spd(2, 501),
                      QuadraticLoss::random_spd(2, 502)};
  const LossFn fn = pair.loss_fn();
  const Batch bt = tag_batch(0), bv = tag_batch(1);

  OptimizerState state;
  const AgnosticSamConfig cfg{0.1, 0.05, 0.0, {0.05, 0.0, 0.0}, false,
                              AgnosticVariant::kFull};
  ParamVector theta = make_param_vector({1.0, -1.0});
  for (int step = 0; step < 3; ++step) {
    // expected g_v: exactly the current validation gradient at theta_tilde_v
    const ParamVector g_v0 = pair.valid.grad(theta);
    const ParamVector tilde_v = sam_perturb(theta, g_v0, cfg.rho2, false);
    const ParamVector expect = pair.valid.grad(tilde_v);
    theta = agnostic_sam_step(state, cfg, theta, bt, bv, fn).first;
    REQUIRE(state.g_v.has_value());
    for (std::size_t i = 0; i < 2; ++i)
      CHECK((*state.g_v)[i] == doctest::Approx(expect[i]).epsilon(1e-15));
  }
}

TEST_CASE("first step with beta=0.9 follows the momentum recurrence by hand") {
  const QuadraticLoss train = QuadraticLoss::diagonal({2.0, 1.0}, {0.0, 0.0});
  const QuadraticLoss valid = QuadraticLoss::diagonal({1.0, 3.0}, {0.2, -0.1});
  const QuadPair pair{train, valid};
  const LossFn fn = pair.loss_fn();
  const double rho1 = 0.1, rho2 = 0.05, beta = 0.9, lr = 0.05;

  OptimizerState state;
  const AgnosticSamConfig cfg{rho1, rho2, beta, {lr, 0.0, 0.0}, false,
                              AgnosticVariant::kFull};
  const ParamVector theta = make_param_vector({1.0, -1.0});
  const ParamVector got =
      agnostic_sam_step(state, cfg, theta, tag_batch(0), tag_batch(1), fn)
          .first;

  // hand-unrolled first iteration: g_v starts at zero
  ParamVector g_v0 = valid.grad(theta);
  ParamVector tilde_v = theta;
  tilde_v.axpy(rho2 / g_v0.norm(), g_v0);
  ParamVector g_vt = valid.grad(tilde_v);
  ParamVector g_v = g_vt;
  g_v *= 1.0 - beta;  // beta * 0 + (1-beta) g_vt
  REQUIRE(state.g_v.has_value());
  for (std::size_t i = 0; i < 2; ++i)
    CHECK((*state.g_v)[i] == doctest::Approx(g_v[i]).epsilon(1e-15));

  ParamVector g_t = train.grad(theta);
  ParamVector tilde_t = theta;
  tilde_t.axpy(rho1 / g_t.norm(), g_t);
  tilde_t.axpy(-rho2 / g_v.norm(), g_v);
  ParamVector want = theta;
  want.axpy(-lr, train.grad(tilde_t));
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(std::abs(got[i] - want[i]) <= 1e-12);
}

TEST_CASE("constant validation loss falls back to sam behavior") {
  const QuadraticLoss train = QuadraticLoss::random_spd(3, 601);
  const QuadraticLoss flat =
      QuadraticLoss(std::vector<double>(9, 0.0), {0.0, 0.0, 0.0});
  const QuadPair pair{train, flat};
  const LossFn fn = pair.loss_fn();

  OptimizerState s1, s2;
  const AgnosticSamConfig ag{0.1, 0.05, 0.9, {0.05, 0.9, 0.0}, false,
                             AgnosticVariant::kFull};
  const SamConfig sam{0.1, {0.05, 0.9, 0.0}, false};
  ParamVector theta_ag = make_param_vector({0.3, 0.6, -0.9});
  ParamVector theta_sam = theta_ag;
  for (int step = 0; step < 20; ++step) {
    theta_ag =
        agnostic_sam_step(s1, ag, theta_ag, tag_batch(0), tag_batch(1), fn)
            .first;
    theta_sam = sam_step(s2, sam, theta_sam, tag_batch(0), fn).first;
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::isfinite(theta_ag[i]));
    REQUIRE(bitwise_equal(theta_ag, theta_sam));
  }
}

TEST_CASE("empty validation batch is rejected") {
  const QuadPair pair{QuadraticLoss::random_spd(2, 1),
                      QuadraticLoss::random_spd(2, 2)};
  const LossFn fn = pair.loss_fn();
  OptimizerState state;
  const AgnosticSamConfig cfg;
  const ParamVector theta = make_param_vector({1.0, 2.0});
  Batch empty;
  CHECK_THROWS_AS(
      agnostic_sam_step(state, cfg, theta, tag_batch(0), empty, fn),
      std::invalid_argument);
}

TEST_CASE("research_eta_step with eta1=eta2=0 is a plain gradient step") {
  const QuadPair pair{QuadraticLoss::random_spd(3, 801),
                      QuadraticLoss::random_spd(3, 802)};
  const LossFn fn = pair.loss_fn();
  const ResearchEtaConfig cfg{0.0, 0.0, 0.1};
  const ParamVector theta = make_param_vector({0.5, 1.5, -2.0});
  const auto [next, trace] =
      research_eta_step(cfg, theta, tag_batch(0), tag_batch(1), fn);
  ParamVector want = theta;
  want.axpy(-0.1, pair.train.grad(theta));
  CHECK(bitwise_equal(trace.theta_tilde_t, theta));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(next[i] == doctest::Approx(want[i]).epsilon(1e-15));
}

TEST_CASE("research_eta_step matches the closed-form affine expression") {
  const QuadraticLoss train = QuadraticLoss::random_spd(4, 901);
  const QuadraticLoss valid = QuadraticLoss::random_symmetric(4, 902);
  const QuadPair pair{train, valid};
  const LossFn fn = pair.loss_fn();
  const ResearchEtaConfig cfg{0.02, 0.01, 0.1};
  const ParamVector theta = make_param_vector({0.2, -0.4, 0.8, -1.6});
  const auto [next, trace] =
      research_eta_step(cfg, theta, tag_batch(0), tag_batch(1), fn);

  ParamVector tilde_v = theta;
  tilde_v.axpy(cfg.eta2, valid.grad(theta));
  ParamVector tilde_t = theta;
  tilde_t.axpy(cfg.eta1, train.grad(theta));
  tilde_t.axpy(-cfg.eta2, valid.grad(tilde_v));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(trace.theta_tilde_v[i] - tilde_v[i]) <= 1e-12);
    CHECK(std::abs(trace.theta_tilde_t[i] - tilde_t[i]) <= 1e-12);
  }

  // trace gradients equal an independent recomputation at the recorded
  // points, bitwise
  CHECK(bitwise_equal(trace.grad_t_theta, train.grad(trace.theta)));
  CHECK(bitwise_equal(trace.grad_v_tilde_v, valid.grad(trace.theta_tilde_v)));
  CHECK(bitwise_equal(trace.grad_t_tilde_t, train.grad(trace.theta_tilde_t)));
}

TEST_CASE("taylor decomposition holds to second order on quadratics") {
  SplitMix64 rng(777);
  for (int instance = 0; instance < 25; ++instance) {
    const std::size_t dim = 2 + rng.next_below(5);
    const QuadraticLoss train = QuadraticLoss::random_symmetric(dim, rng.next());
    const QuadraticLoss valid = QuadraticLoss::random_symmetric(dim, rng.next());
    const QuadPair pair{train, valid};
    const LossFn fn = pair.loss_fn();

    std::vector<double> t0(dim);
    for (double& v : t0) v = rng.next_gaussian();
    const ParamVector theta = make_param_vector(t0);
    const double eta1 = 0.003, eta2 = 0.002;
    const auto [next, trace] = research_eta_step({eta1, eta2, 0.1}, theta,
                                                 tag_batch(0), tag_batch(1), fn);

    const double direct = train.value(trace.theta_tilde_t);
    const double first_order = train.value(theta) +
                               eta1 * trace.grad_t_theta.norm_sq() -
                               eta2 * trace.grad_t_theta.dot(trace.grad_v_tilde_v);

    // constant from the known Hessian: |direct - first_order| =
    // 1/2 |d^T A d| <= 1/2 ||A||_F max(||g_t||,||g_v||)^2 (eta1+eta2)^2
    const double a_norm = std::sqrt(kernels::norm_sq(train.matrix()));
    const double g_scale = std::max(trace.grad_t_theta.norm(),
                                    trace.grad_v_tilde_v.norm());
    const double c = 0.5 * a_norm * g_scale * g_scale;
    CHECK(std::abs(direct - first_order) <=
          c * (eta1 + eta2) * (eta1 + eta2) + 1e-15);
  }
}

TEST_CASE("trajectories are bitwise deterministic") {
  auto run_trajectory = [] {
    const QuadPair pair{QuadraticLoss::random_spd(3, 111),
                        QuadraticLoss::random_spd(3, 112)};
    const LossFn fn = pair.loss_fn();
    OptimizerState state;
    const AgnosticSamConfig cfg{0.1, 0.05, 0.9, {0.05, 0.9, 0.0005}, false,
                                AgnosticVariant::kFull};
    ParamVector theta = make_param_vector({0.1, 0.2, 0.3});
    for (int s = 0; s < 30; ++s)
      theta =
          agnostic_sam_step(state, cfg, theta, tag_batch(0), tag_batch(1), fn)
              .first;
    return theta;
  };
  CHECK(bitwise_equal(run_trajectory(), run_trajectory()));
}

TEST_CASE("cosine schedule endpoints and midpoint") {
  CHECK(cosine_lr(0.4, 0, 100) == 0.4);
  CHECK(cosine_lr(0.4, 100, 100) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosine_lr(0.4, 50, 100) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(cosine_lr(0.4, 101, 100), std::invalid_argument);
}
