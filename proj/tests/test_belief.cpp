#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "owgp/belief.h"
#include "owgp/eval.h"
#include "owgp/gaussian.h"
#include "owgp/rng.h"
#include "test_util.h"

using namespace owgp;
using namespace owgp::testutil;

namespace {

ObservationNoiseModel test_noise(const DomainConfig& d) {
  return ObservationNoiseModel::defaults(static_cast<int>(d.types.size()));
}

}  // namespace

TEST_CASE("heavy relation matches the quadrature oracle") {
  BeliefState b = make_belief();
  ObjectBelief heavy = make_object("can", 0.9, {1.0, 0.0, 0.74, 0.0},
                                   {0.33, 0.8, 0.8}, *b.domain);
  heavy.anchor.name = "hv";
  heavy.weight_d = {std::log(500.0), 0.05};
  b.add_object(heavy);
  ObjectBelief light = heavy;
  light.anchor.name = "lt";
  light.weight_d = {std::log(100.0), 0.05};
  b.add_object(light);

  const double p_heavy = prob_ground_relation(b, "heavy", {"hv"});
  const double p_light = prob_ground_relation(b, "heavy", {"lt"});
  CHECK(p_heavy > 0.99);
  CHECK(p_light < 1e-6);
  CHECK(p_heavy ==
        doctest::Approx(lognormal_tail_quadrature(std::log(500.0), 0.05, 400.0))
            .epsilon(1e-9));
  CHECK(p_light ==
        doctest::Approx(lognormal_tail_quadrature(std::log(100.0), 0.05, 400.0))
            .epsilon(1e-6));

  // Prior weight places roughly a third of its mass above the threshold.
  const double p_prior = prob_ground_relation(b, "heavy", {"_o1_"});
  CHECK(p_prior == doctest::Approx(lognormal_tail_quadrature(
                       std::log(250.0), 1.0, 400.0)).epsilon(1e-9));
  CHECK(p_prior > 0.25);
  CHECK(p_prior < 0.4);
}

TEST_CASE("type relation reads the multinoulli times detection weight") {
  BeliefState b = make_belief();
  CHECK(prob_ground_relation(b, "can", {"_o2_"}) == doctest::Approx(0.80));
  CHECK(prob_ground_relation(b, "object", {"_o2_"}) == doctest::Approx(1.0));

  for (auto& [id, ob] : b.objects) {
    if (ob.anchor.name == "_o2_") ob.detection_weight = 0.5;
  }
  CHECK(prob_ground_relation(b, "can", {"_o2_"}) == doctest::Approx(0.40));
}

TEST_CASE("unknown relation, anchor and arity are rejected") {
  BeliefState b = make_belief();
  CHECK_THROWS_AS(prob_ground_relation(b, "purple", {"_o1_"}),
                  std::invalid_argument);
  CHECK_THROWS_AS(prob_ground_relation(b, "can", {"ghost"}),
                  std::invalid_argument);
  CHECK_THROWS_AS(prob_ground_relation(b, "can", {"_o1_", "_o2_"}),
                  std::invalid_argument);
  CHECK_THROWS_AS(prob_ground_relation(b, "on", {"_o1_"}),
                  std::invalid_argument);
}

TEST_CASE("color and spatial relations agree with Monte-Carlo") {
  BeliefState b = make_belief();
  // Widen the variances so the integrals are non-degenerate.
  for (auto& [id, ob] : b.objects) {
    ob.color_d.cov = Eigen::Vector3d(0.01, 0.04, 0.04).asDiagonal();
    ob.pose_d.cov = Eigen::Vector4d(0.04, 0.04, 0.0025, 0.01).asDiagonal();
  }
  const int n = 1000000;
  Rng rng(12345);

  SUBCASE("color box integral") {
    const ObjectBelief& ob = b.object_or_throw("_o3_");
    const HsvBox& box = b.domain->colors.at("blue");
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      // Sample the stored distribution: wrapped hue, truncated s/v.
      const double h = wrap_unit(ob.color_d.mean(0) +
                                 std::sqrt(ob.color_d.cov(0, 0)) * rng.normal());
      double sv[2];
      for (int k = 0; k < 2; ++k) {
        double x;
        do {
          x = ob.color_d.mean(k + 1) +
              std::sqrt(ob.color_d.cov(k + 1, k + 1)) * rng.normal();
        } while (x < 0.0 || x > 1.0);
        sv[k] = x;
      }
      if (box.contains({h, sv[0], sv[1]})) ++hits;
    }
    const double mc = static_cast<double>(hits) / n;
    const double p = prob_ground_relation(b, "blue", {"_o3_"});
    const double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / n);
    CHECK(std::abs(p - mc) < 3.0 * se + 1e-9);
  }

  SUBCASE("containment integral") {
    const ObjectBelief& ob = b.object_or_throw("_o1_");
    const Region* reg = b.region("table0");
    REQUIRE(reg != nullptr);
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d p;
      for (int k = 0; k < 3; ++k) {
        p(k) = ob.pose_d.mean(k) + std::sqrt(ob.pose_d.cov(k, k)) * rng.normal();
      }
      // Containment counts objects resting on the region floor.
      const bool in = reg->contains_xy(p.x(), p.y()) &&
                      p.z() >= reg->lo.z() - 0.1 && p.z() <= reg->hi.z();
      if (in) ++hits;
    }
    const double mc = static_cast<double>(hits) / n;
    const double p = prob_ground_relation(b, "in", {"_o1_", "table0"});
    const double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / n);
    CHECK(std::abs(p - mc) < 3.0 * se + 1e-9);
  }

  SUBCASE("weight tail frequency") {
    const ObjectBelief& ob = b.object_or_throw("_o2_");
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const double w =
          std::exp(ob.weight_d.mu + ob.weight_d.sigma * rng.normal());
      if (w >= 400.0) ++hits;
    }
    const double mc = static_cast<double>(hits) / n;
    const double p = prob_ground_relation(b, "heavy", {"_o2_"});
    const double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / n);
    CHECK(std::abs(p - mc) < 3.0 * se + 1e-9);
  }

  SUBCASE("type frequency") {
    const ObjectBelief& ob = b.object_or_throw("_o2_");
    std::vector<double> weights;
    std::vector<std::string> names;
    for (const auto& [t, p] : ob.type_d.probs) {
      names.push_back(t);
      weights.push_back(p);
    }
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const int k = rng.categorical(weights.data(), static_cast<int>(weights.size()));
      if (names[k] == "can") ++hits;
    }
    const double mc = static_cast<double>(hits) / n;
    const double p = prob_ground_relation(b, "can", {"_o2_"});
    const double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / n);
    CHECK(std::abs(p - mc) < 3.0 * se + 1e-9);
  }
}

TEST_CASE("held objects have zero spatial probability") {
  BeliefState b = make_belief();
  CHECK(prob_ground_relation(b, "in", {"_o1_", "table0"}) > 0.9);
  b.held = b.object_or_throw("_o1_").anchor.id;
  CHECK(prob_ground_relation(b, "in", {"_o1_", "table0"}) == 0.0);
}

TEST_CASE("cov_dominates") {
  const Eigen::Matrix2d a = Eigen::Vector2d(1.0, 1.0).asDiagonal();
  const Eigen::Matrix2d b2 = Eigen::Vector2d(2.0, 2.0).asDiagonal();
  const Eigen::Matrix2d c = Eigen::Vector2d(1.0, 3.0).asDiagonal();
  const Eigen::Matrix2d d = Eigen::Vector2d(2.0, 2.0).asDiagonal();

  CHECK(cov_dominates(a, a));  // reflexive
  CHECK(cov_dominates(a, b2));
  CHECK_FALSE(cov_dominates(b2, a));
  // Incomparable pair: verified against the Cholesky oracle.
  CHECK(cov_dominates(c, d) == psd_by_cholesky(d - c));
  CHECK(cov_dominates(d, c) == psd_by_cholesky(c - d));
  CHECK_FALSE(cov_dominates(c, d));
  CHECK_FALSE(cov_dominates(d, c));
  CHECK_THROWS_AS(cov_dominates(a, Eigen::Matrix3d::Identity()),
                  std::invalid_argument);
}

TEST_CASE("holds_cont_fluent implements the three-clause conjunction") {
  BeliefState b = make_belief();
  for (auto& [id, ob] : b.objects) {
    if (ob.anchor.name == "_o2_") {
      ob.color_d.cov = Eigen::Vector3d(0.005, 0.005, 0.005).asDiagonal();
      ob.detection_weight = 0.8;
    }
  }
  Eigen::VectorXd mu(3);
  mu << 0.33, 0.8, 0.8;
  Eigen::MatrixXd sigma = Eigen::Vector3d(0.01, 0.01, 0.01).asDiagonal();
  Eigen::VectorXd delta = Eigen::VectorXd::Constant(3, 0.1);

  CHECK(holds_cont_fluent(b, "_o2_", Quantity::Color, mu, sigma, delta, 0.9));
  // Mean clause violated in one component.
  Eigen::VectorXd far = mu;
  far(1) = 0.5;
  CHECK_FALSE(holds_cont_fluent(b, "_o2_", Quantity::Color, far, sigma, delta, 0.9));
  // Dominance fails when the bound is tighter than the belief.
  Eigen::MatrixXd tight = Eigen::Vector3d(0.001, 0.001, 0.001).asDiagonal();
  CHECK_FALSE(holds_cont_fluent(b, "_o2_", Quantity::Color, mu, tight, delta, 0.9));
  // p must be at least the mixture weight.
  CHECK_FALSE(holds_cont_fluent(b, "_o2_", Quantity::Color, mu, sigma, delta, 0.5));
}

TEST_CASE("update_type follows Bayes rule") {
  BeliefState b = make_belief();
  auto d = *b.domain;
  ObservationNoiseModel noise = test_noise(d);
  const int n = static_cast<int>(d.types.size());

  SUBCASE("identity confusion is a delta update") {
    noise.type_confusion = Eigen::MatrixXd::Identity(n, n);
    ObjectBelief half = make_object("can", 0.5, {1.0, 0.0, 0.74, 0.0},
                                    {0.3, 0.8, 0.8}, d);
    half.anchor.name = "h";
    half.type_d.probs = {{"box", 0.5}, {"can", 0.5}, {"soda", 0.0}};
    b.add_object(half);
    BeliefState out = update_type(b, "h", "can", noise);
    CHECK(out.object_or_throw("h").type_d.prob("can") == doctest::Approx(1.0));
    CHECK(out.object_or_throw("h").type_d.prob("box") == doctest::Approx(0.0));
  }

  SUBCASE("hand-computed posterior 9/11, 2/11") {
    // prior {can .5, box .5}; P(obs can|can)=.9, P(obs can|box)=.2.
    noise.type_confusion = Eigen::MatrixXd::Zero(n, n);
    const int i_box = d.type_index("box"), i_can = d.type_index("can"),
              i_soda = d.type_index("soda");
    noise.type_confusion(i_can, i_can) = 0.9;
    noise.type_confusion(i_can, i_box) = 0.1;
    noise.type_confusion(i_box, i_can) = 0.2;
    noise.type_confusion(i_box, i_box) = 0.8;
    noise.type_confusion(i_soda, i_soda) = 1.0;
    ObjectBelief half = make_object("can", 0.5, {1.0, 0.0, 0.74, 0.0},
                                    {0.3, 0.8, 0.8}, d);
    half.anchor.name = "h";
    half.type_d.probs = {{"box", 0.5}, {"can", 0.5}, {"soda", 0.0}};
    b.add_object(half);
    BeliefState out = update_type(b, "h", "can", noise);
    CHECK(out.object_or_throw("h").type_d.prob("can") ==
          doctest::Approx(9.0 / 11.0).epsilon(1e-12));
    CHECK(out.object_or_throw("h").type_d.prob("box") ==
          doctest::Approx(2.0 / 11.0).epsilon(1e-12));
  }

  SUBCASE("uniform rows leave the prior unchanged") {
    noise.type_confusion = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    BeliefState out = update_type(b, "_o2_", "box", noise);
    CHECK(out.object_or_throw("_o2_").type_d.prob("can") ==
          doctest::Approx(0.80).epsilon(1e-12));
  }

  SUBCASE("unknown observed type throws") {
    CHECK_THROWS_AS(update_type(b, "_o2_", "pyramid", noise),
                    std::invalid_argument);
  }
}

TEST_CASE("kalman pose update matches the closed-form oracle") {
  BeliefState b = make_belief();
  ObservationNoiseModel noise = test_noise(*b.domain);

  SUBCASE("unit prior, unit observation noise halves the variance") {
    for (auto& [id, ob] : b.objects) ob.pose_d.cov = Eigen::Matrix4d::Identity();
    noise.pose_obs_cov = Eigen::Matrix4d::Identity();
    Eigen::Vector4d obs = b.object_or_throw("_o1_").pose_d.mean;
    obs(0) += 1.0;
    BeliefState out = update_pose(b, "_o1_", obs, noise);
    const ObjectBelief& ob = out.object_or_throw("_o1_");
    CHECK(ob.pose_d.mean(0) ==
          doctest::Approx(b.object_or_throw("_o1_").pose_d.mean(0) + 0.5)
              .epsilon(1e-12));
    CHECK(ob.pose_d.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("uninformative measurement leaves the prior") {
    noise.pose_obs_cov = Eigen::Matrix4d::Identity() * 1e12;
    Eigen::Vector4d obs(99.0, 99.0, 99.0, 1.0);
    BeliefState out = update_pose(b, "_o1_", obs, noise);
    const ObjectBelief& prior = b.object_or_throw("_o1_");
    const ObjectBelief& post = out.object_or_throw("_o1_");
    CHECK((post.pose_d.mean - prior.pose_d.mean).norm() < 1e-6);
  }

  SUBCASE("certain prior ignores the observation") {
    for (auto& [id, ob] : b.objects) {
      ob.pose_d.cov = Eigen::Matrix4d::Identity() * 1e-12;
    }
    Eigen::Vector4d obs(5.0, 5.0, 5.0, 1.0);
    BeliefState out = update_pose(b, "_o1_", obs, noise);
    CHECK((out.object_or_throw("_o1_").pose_d.mean -
           b.object_or_throw("_o1_").pose_d.mean)
              .norm() < 1e-6);
  }

  SUBCASE("randomized diagonal updates match the scalar oracle per axis") {
    Rng rng(777);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::Vector4d pv, ov, obs;
      for (int i = 0; i < 4; ++i) {
        pv(i) = 0.01 + rng.uniform();
        ov(i) = 0.01 + rng.uniform();
        obs(i) = rng.normal() * 0.3;
      }
      for (auto& [id, ob] : b.objects) {
        if (ob.anchor.name == "_o1_") {
          ob.pose_d.mean.setZero();
          ob.pose_d.cov = pv.asDiagonal();
        }
      }
      noise.pose_obs_cov = ov.asDiagonal();
      BeliefState out = update_pose(b, "_o1_", obs, noise);
      const ObjectBelief& post = out.object_or_throw("_o1_");
      for (int i = 0; i < 4; ++i) {
        double m, v;
        scalar_kalman_oracle(0.0, pv(i), obs(i), ov(i), m, v);
        CHECK(post.pose_d.mean(i) == doctest::Approx(m).epsilon(1e-9));
        CHECK(post.pose_d.cov(i, i) == doctest::Approx(v).epsilon(1e-9));
      }
      // Posterior dominance is part of the update contract.
      CHECK(cov_dominates(post.pose_d.cov, Eigen::MatrixXd(pv.asDiagonal())));
    }
  }
}

TEST_CASE("color update treats hue circularly") {
  BeliefState b = make_belief();
  ObservationNoiseModel noise = test_noise(*b.domain);

  SUBCASE("equal variances fuse to the circular midpoint") {
    for (auto& [id, ob] : b.objects) {
      if (ob.anchor.name == "_o1_") {
        ob.color_d.mean = Eigen::Vector3d(0.95, 0.5, 0.5);
        ob.color_d.cov = Eigen::Vector3d(0.01, 0.01, 0.01).asDiagonal();
      }
    }
    noise.color_obs_cov = Eigen::Vector3d(0.01, 0.01, 0.01).asDiagonal();
    BeliefState out = update_color(b, "_o1_", {0.05, 0.5, 0.5}, noise);
    const double hue = out.object_or_throw("_o1_").color_d.mean(0);
    // Compare on the circle; 0.0 and 1.0 are the same hue.
    CHECK(std::abs(unit_circle_diff(hue, circular_midpoint(0.95, 0.05))) < 1e-9);
    CHECK(std::abs(unit_circle_diff(hue, 0.0)) < 1e-9);
  }

  SUBCASE("zero innovation shrinks covariance, keeps the mean") {
    const Eigen::Vector3d mean = b.object_or_throw("_o2_").color_d.mean;
    BeliefState out = update_color(b, "_o2_", mean, noise);
    const ObjectBelief& post = out.object_or_throw("_o2_");
    CHECK((post.color_d.mean - mean).norm() < 1e-12);
    CHECK(cov_dominates(post.color_d.cov, b.object_or_throw("_o2_").color_d.cov));
    CHECK(post.color_d.cov(0, 0) < b.object_or_throw("_o2_").color_d.cov(0, 0));
  }
}

TEST_CASE("weight update works in log space") {
  BeliefState b = make_belief();
  ObservationNoiseModel noise = test_noise(*b.domain);
  noise.weight_obs_sigma = 0.05;

  SUBCASE("broad prior collapses onto the observation") {
    for (auto& [id, ob] : b.objects) {
      if (ob.anchor.name == "_o2_") ob.weight_d = {std::log(250.0), 2.0};
    }
    BeliefState out = update_weight(b, "_o2_", 100.0, noise);
    const WeightDistribution& w = out.object_or_throw("_o2_").weight_d;
    CHECK(w.mu == doctest::Approx(std::log(100.0)).epsilon(0.002));
    CHECK(w.sigma == doctest::Approx(0.05).epsilon(0.002));
  }

  SUBCASE("500 g observation concentrates above the heavy threshold") {
    BeliefState out = update_weight(b, "_o2_", 500.0, noise);
    CHECK(prob_ground_relation(out, "heavy", {"_o2_"}) > 0.99);
  }

  SUBCASE("observation at the prior mean leaves the mean") {
    const double mu = b.object_or_throw("_o2_").weight_d.mu;
    BeliefState out = update_weight(b, "_o2_", std::exp(mu), noise);
    CHECK(out.object_or_throw("_o2_").weight_d.mu == doctest::Approx(mu));
  }

  SUBCASE("non-positive observations are rejected") {
    CHECK_THROWS_AS(update_weight(b, "_o2_", 0.0, noise), std::invalid_argument);
    CHECK_THROWS_AS(update_weight(b, "_o2_", -5.0, noise), std::invalid_argument);
  }
}

TEST_CASE("updates are pure: the input belief is untouched") {
  BeliefState b = make_belief();
  ObservationNoiseModel noise = test_noise(*b.domain);
  const std::string before = belief_fingerprint(b);
  (void)update_type(b, "_o2_", "can", noise);
  (void)update_pose(b, "_o2_", {1.4, 0.1, 0.74, 0.1}, noise);
  (void)update_color(b, "_o2_", {0.3, 0.7, 0.7}, noise);
  (void)update_weight(b, "_o2_", 120.0, noise);
  (void)associate_detection(
      b, Detection{"can", {5.0, 5.0, 0.74, 0.0}, {0.3, 0.8, 0.8}}, noise);
  CHECK(belief_fingerprint(b) == before);
}

TEST_CASE("type distribution stays normalized through updates") {
  BeliefState b = make_belief();
  ObservationNoiseModel noise = test_noise(*b.domain);
  BeliefState cur = b;
  for (int i = 0; i < 25; ++i) {
    const std::string t = b.domain->types[i % b.domain->types.size()];
    cur = update_type(cur, "_o2_", t, noise);
    double total = 0.0;
    for (const auto& [name, p] : cur.object_or_throw("_o2_").type_d.probs) {
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("associate_detection gates on Mahalanobis distance") {
  BeliefState b = make_belief();
  ObservationNoiseModel noise = test_noise(*b.domain);

  SUBCASE("detection at an existing mean associates") {
    Detection det{"can", b.object_or_throw("_o2_").pose_d.mean, {0.33, 0.8, 0.8}};
    AssociationResult res = associate_detection(b, det, noise);
    CHECK_FALSE(res.is_new);
    CHECK(res.anchor.name == "_o2_");
    CHECK(res.belief.objects.size() == b.objects.size());
  }

  SUBCASE("far detections create the next internal anchor") {
    Detection det{"can", {6.0, 6.0, 0.74, 0.0}, {0.33, 0.8, 0.8}};
    AssociationResult res = associate_detection(b, det, noise);
    CHECK(res.is_new);
    CHECK(res.anchor.name == "_o4_");
    CHECK(res.belief.objects.size() == b.objects.size() + 1);
    const ObjectBelief& nb = res.belief.object_or_throw("_o4_");
    CHECK(nb.type_d.prob("can") > 0.85);  // confusion-row posterior
    CHECK(nb.detection_weight == doctest::Approx(0.95));
    CHECK(nb.weight_d.mu == doctest::Approx(std::log(250.0)));
  }

  SUBCASE("association is deterministic and never loses objects") {
    Detection det{"can", {1.45, 0.02, 0.74, 0.0}, {0.33, 0.8, 0.8}};
    AssociationResult r1 = associate_detection(b, det, noise);
    AssociationResult r2 = associate_detection(b, det, noise);
    CHECK(r1.anchor.name == r2.anchor.name);
    CHECK(r1.is_new == r2.is_new);
    CHECK(belief_fingerprint(r1.belief) == belief_fingerprint(r2.belief));
    CHECK(r1.belief.objects.size() >= b.objects.size());
  }

  SUBCASE("held objects are not association candidates") {
    b.held = b.object_or_throw("_o2_").anchor.id;
    Detection det{"can", b.object_or_throw("_o2_").pose_d.mean, {0.33, 0.8, 0.8}};
    AssociationResult res = associate_detection(b, det, noise);
    // Same spot, but _o2_ is in hand; the detection must be someone else.
    CHECK(res.anchor.name != "_o2_");
  }
}

TEST_CASE("undiscovered region mass scales the configured prior") {
  BeliefState b = make_belief();
  auto domain = std::make_shared<DomainConfig>(*b.domain);
  domain->region_priors["desk"] = 0.1;
  domain->region_priors["table0"] = 0.3;
  b.domain = domain;

  CHECK(undiscovered_region_mass(b, "desk") == doctest::Approx(0.1));
  // table0 is mostly explored (confidence .9).
  CHECK(undiscovered_region_mass(b, "table0") == doctest::Approx(0.03));
  for (auto& [id, c] : b.region_confidence) c = 1.0;
  CHECK(undiscovered_region_mass(b, "desk") == doctest::Approx(0.0));
  CHECK_THROWS_AS(undiscovered_region_mass(b, "nowhere"), std::invalid_argument);
}

TEST_CASE("region confidence accumulation is order independent") {
  double c1 = 0.0;
  for (double gain : {0.3, 0.6, 0.2}) c1 = 1.0 - (1.0 - c1) * (1.0 - gain);
  double c2 = 0.0;
  for (double gain : {0.2, 0.3, 0.6}) c2 = 1.0 - (1.0 - c2) * (1.0 - gain);
  CHECK(c1 == doctest::Approx(c2).epsilon(1e-12));
  CHECK(c1 > 0.0);
  CHECK(c1 < 1.0);
}
