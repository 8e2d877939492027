#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "csar/bandit.hpp"
#include "csar/errors.hpp"
#include "csar/estimators.hpp"
#include "csar/rng.hpp"

using namespace csar;

namespace {

BanditInstance zero_instance(int n, int k) {
  BanditInstance inst{n, k, {}, Noise::zero};
  inst.means.resize(n);
  for (int i = 0; i < n; ++i) inst.means[i] = 0.05 * (n - i) - 0.3;  // arbitrary, distinct
  validate_instance(inst);
  return inst;
}

RegretLedger scratch_ledger(const BanditInstance& inst) { return make_ledger(inst); }

EstimationRequest make_req(std::vector<int> arms, int k, double eps, double delta) {
  EstimationRequest req;
  req.arms = std::move(arms);
  req.k = k;
  req.eps = eps;
  req.delta = delta;
  return req;
}

void check_exact(const EstimateReport& rep, const BanditInstance& inst,
                 const std::vector<int>& arms) {
  REQUIRE(rep.estimates.size() == arms.size());
  for (int a : arms) {
    REQUIRE(rep.estimates.count(a) == 1);
    CHECK_THAT(rep.estimates.at(a), Catch::Matchers::WithinAbs(inst.means[a], 1e-12));
  }
}

std::int64_t participation_total(const EstimateReport& rep) {
  std::int64_t s = 0;
  for (const auto& [arm, c] : rep.participation) s += c;
  return s;
}

}  // namespace

TEST_CASE("sample counts match hand-computed ceilings") {
  CHECK(sample_count(0.5, 0.1, 144, 2, 2) == 64);
  CHECK(sample_count(0.2, 0.1, 16, 2, 2) == 289);
  CHECK(sample_count(0.5, 0.1, 144, 4, 2) == 255);  // conditional factor 2k/k' = 4
  CHECK(sample_count(0.5, 0.1, 8, 4, 4) == 41);
  CHECK(sample_count(0.5, 0.1, 15, 4, 3) == 122);
}

TEST_CASE("sample count rejects out-of-range parameters") {
  struct Case {
    double eps, delta;
    int n, k, kp;
  };
  for (const Case& c : {Case{0.0, 0.1, 4, 2, 2}, Case{1.5, 0.1, 4, 2, 2}, Case{0.5, 0.0, 4, 2, 2},
                        Case{0.5, 1.0, 4, 2, 2}, Case{0.5, 0.1, 0, 2, 2}, Case{0.5, 0.1, 4, 2, 3},
                        Case{0.5, 0.1, 4, 2, 0}}) {
    try {
      sample_count(c.eps, c.delta, c.n, c.k, c.kp);
      FAIL("expected invalid_params");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::invalid_params);
    }
  }
}

TEST_CASE("unconditional estimator recovers exact means without noise") {
  // One full block and one padded block.
  BanditInstance inst = zero_instance(8, 2);
  std::vector<int> arms(8);
  std::iota(arms.begin(), arms.end(), 0);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req = make_req(arms, 2, 0.5, 0.1);
  EstimateReport rep = est1(req, inst, RngKey(1), led);
  check_exact(rep, inst, arms);
  CHECK(rep.blocks == 2);
  CHECK(rep.total_pulls == est1_pull_count(8, 2, rep.m));
  CHECK(rep.total_pulls == led.pulls);
}

TEST_CASE("padded blocks reuse earlier arms and keep only primary estimates") {
  BanditInstance inst = zero_instance(6, 2);
  std::vector<int> arms = {0, 1, 2, 3, 4, 5};  // order 4: second block holds {4,5} + 2 pads
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req = make_req(arms, 2, 0.5, 0.1);
  EstimateReport rep = est1(req, inst, RngKey(3), led);
  check_exact(rep, inst, arms);
  CHECK(rep.blocks == 2);
  CHECK(rep.total_pulls == est1_pull_count(6, 2, rep.m));
  // Pads pull more often than their own estimate needed; participation shows it.
  CHECK(participation_total(rep) == rep.total_pulls * 2);
}

TEST_CASE("group size three runs on the order-12 design exactly") {
  BanditInstance inst = zero_instance(12, 3);
  std::vector<int> arms(12);
  std::iota(arms.begin(), arms.end(), 0);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req = make_req(arms, 3, 0.5, 0.1);
  EstimateReport rep = est1(req, inst, RngKey(4), led);
  check_exact(rep, inst, arms);
  CHECK(rep.blocks == 1);
  CHECK(rep.total_pulls == est1_pull_count(12, 3, rep.m));
}

TEST_CASE("fixed replication count overrides the derived one") {
  BanditInstance inst = zero_instance(8, 2);
  std::vector<int> arms(8);
  std::iota(arms.begin(), arms.end(), 0);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req = make_req(arms, 2, 0.5, 0.1);
  req.fixed_m = 7;
  EstimateReport rep = est1(req, inst, RngKey(1), led);
  CHECK(rep.m == 7);
  CHECK(rep.total_pulls == est1_pull_count(8, 2, 7));
}

TEST_CASE("padding fails loudly when no distinct arms remain") {
  BanditInstance inst = zero_instance(8, 2);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req = make_req({0, 1, 2}, 2, 0.5, 0.1);
  try {
    est1(req, inst, RngKey(1), led);
    FAIL("expected padding_exhausted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::padding_exhausted);
  }
  req.padding_pool = {5};
  EstimateReport rep = est1(req, inst, RngKey(1), led);
  check_exact(rep, inst, {0, 1, 2});
  CHECK(rep.estimates.count(5) == 0);
}

TEST_CASE("request validation catches malformed inputs") {
  BanditInstance inst = zero_instance(8, 2);
  RegretLedger led = scratch_ledger(inst);

  EstimationRequest wrong_k = make_req({0, 1, 2, 3}, 3, 0.5, 0.1);
  try {
    est1(wrong_k, inst, RngKey(1), led);
    FAIL("expected invalid_params");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_params);
  }

  EstimationRequest bad_arm = make_req({0, 99}, 2, 0.5, 0.1);
  try {
    est1(bad_arm, inst, RngKey(1), led);
    FAIL("expected invalid_arm");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_arm);
  }

  EstimationRequest overlap = make_req({0, 1, 2, 3}, 2, 0.5, 0.1);
  overlap.padding_pool = {3, 4};
  try {
    est1(overlap, inst, RngKey(1), led);
    FAIL("expected invalid_params");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_params);
  }

  EstimationRequest with_acc = make_req({0, 1, 2, 3}, 2, 0.5, 0.1);
  with_acc.accepted = {4};
  try {
    est1(with_acc, inst, RngKey(1), led);
    FAIL("expected invalid_params");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_params);
  }
}

TEST_CASE("conditional estimator with empty accepted set is the unconditional one") {
  BanditInstance inst{8, 2, {0.9, 0.8, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0}, Noise::gaussian};
  std::vector<int> arms(8);
  std::iota(arms.begin(), arms.end(), 0);
  EstimationRequest req = make_req(arms, 2, 0.5, 0.1);
  RegretLedger led1 = scratch_ledger(inst);
  RegretLedger led2 = scratch_ledger(inst);
  EstimateReport r1 = est1(req, inst, RngKey(77), led1);
  EstimateReport r2 = est2(req, inst, RngKey(77), led2);
  CHECK(r1.estimates == r2.estimates);  // same key, same stream, bit-identical
  CHECK(r1.total_pulls == r2.total_pulls);
}

TEST_CASE("conditional estimator is exact without noise, including the sum-row correction") {
  // k' = 2: one accepted arm rides along in every pulled subset.
  BanditInstance inst = zero_instance(12, 3);
  EstimationRequest req;
  req.k = 3;
  req.eps = 0.5;
  req.delta = 0.1;
  req.accepted = {0};
  req.top_set = {0, 1, 2, 3, 4, 5};
  for (int a = 1; a < 12; ++a) req.arms.push_back(a);
  RegretLedger led = scratch_ledger(inst);
  EstimateReport rep = est2(req, inst, RngKey(9), led);
  std::vector<int> all(12);
  std::iota(all.begin(), all.end(), 0);
  check_exact(rep, inst, all);  // survivors from the outer pass, arm 0 from the refresh

  // k' = 3 with two column groups per side: the sum-row correction picks up a
  // factor beyond the plain group count; without noise any slip shows up here.
  BanditInstance inst2 = zero_instance(16, 4);
  EstimationRequest req2;
  req2.k = 4;
  req2.eps = 0.5;
  req2.delta = 0.1;
  req2.accepted = {0};
  req2.top_set = {0, 1, 2, 3, 4, 5, 6, 7};
  for (int a = 1; a < 16; ++a) req2.arms.push_back(a);
  RegretLedger led2 = scratch_ledger(inst2);
  EstimateReport rep2 = est2(req2, inst2, RngKey(10), led2);
  std::vector<int> all2(16);
  std::iota(all2.begin(), all2.end(), 0);
  check_exact(rep2, inst2, all2);
  CHECK(rep2.total_pulls == est2_pull_count(15, 8, 4, 3, 0.5, 0.1));
  CHECK(rep2.total_pulls == led2.pulls);
}

TEST_CASE("two accepted arms embed together") {
  BanditInstance inst = zero_instance(12, 4);
  EstimationRequest req;
  req.k = 4;
  req.eps = 0.5;
  req.delta = 0.1;
  req.accepted = {2, 5};
  req.top_set = {0, 1, 2, 3, 5, 6, 7, 8};
  for (int a = 0; a < 12; ++a)
    if (a != 2 && a != 5) req.arms.push_back(a);
  RegretLedger led = scratch_ledger(inst);
  EstimateReport rep = est2(req, inst, RngKey(21), led);
  std::vector<int> all(12);
  std::iota(all.begin(), all.end(), 0);
  check_exact(rep, inst, all);
}

TEST_CASE("conditional estimator validates its sets") {
  BanditInstance inst = zero_instance(12, 3);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest base;
  base.k = 3;
  base.eps = 0.5;
  base.delta = 0.1;
  base.accepted = {0};
  base.top_set = {0, 1, 2, 3, 4, 5};
  for (int a = 1; a < 12; ++a) base.arms.push_back(a);

  auto expect = [&](EstimationRequest r, Errc code) {
    try {
      est2(r, inst, RngKey(1), led);
      FAIL("expected error " << errc_name(code));
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };

  EstimationRequest overlap = base;
  overlap.arms.push_back(0);  // accepted arm among survivors
  expect(overlap, Errc::invalid_params);

  EstimationRequest acc_outside = base;
  acc_outside.top_set = {1, 2, 3, 4, 5, 6};  // accepted arm missing from the top set
  expect(acc_outside, Errc::invalid_params);

  EstimationRequest stray_top = base;
  stray_top.arms.assign({1, 2, 3, 4});
  stray_top.top_set = {0, 1, 2, 9};  // 9 neither surviving nor accepted
  expect(stray_top, Errc::invalid_params);

  EstimationRequest all_acc = base;
  all_acc.accepted = {0, 1, 2};
  all_acc.arms.assign({3, 4, 5, 6});
  all_acc.top_set = {0, 1, 2, 3, 4, 5};
  expect(all_acc, Errc::all_accepted);

  EstimationRequest too_many = base;
  too_many.accepted = {0, 1, 2, 3};
  too_many.arms.assign({4, 5, 6, 7});
  too_many.top_set = {0, 1, 2, 3, 4, 5, 6, 7};
  expect(too_many, Errc::invalid_params);
}

TEST_CASE("accepted arms never serve as padding") {
  // Single survivor, one accepted arm, and only the accepted arm offered as
  // padding: the block cannot be completed.
  BanditInstance inst = zero_instance(6, 2);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req;
  req.k = 2;
  req.eps = 0.5;
  req.delta = 0.1;
  req.accepted = {0};
  req.arms = {1};
  req.top_set = {0, 1};
  req.padding_pool = {0};
  try {
    est2(req, inst, RngKey(1), led);
    FAIL("expected padding_exhausted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::padding_exhausted);
  }
  // A real pool unblocks it and the result is exact.
  req.padding_pool = {3, 4};
  EstimateReport rep = est2(req, inst, RngKey(1), led);
  check_exact(rep, inst, {0, 1});
}

TEST_CASE("pull accounting matches the closed forms") {
  CHECK(est1_pull_count(8, 2, 289) == 2 * 4 * 2 * 289);
  CHECK(est1_pull_count(12, 3, 10) == 1 * 12 * 2 * 2 * 10);
  // top pass 8 arms at m=41, outer 15 arms on the order-12 design at m=122
  CHECK(est2_pull_count(15, 8, 4, 3, 0.5, 0.1) == 16 * 41 + 2 * 48 * 122);

  BanditInstance inst = zero_instance(16, 2);
  std::vector<int> arms(16);
  std::iota(arms.begin(), arms.end(), 0);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req = make_req(arms, 2, 0.2, 0.1);
  EstimateReport rep = est1(req, inst, RngKey(2), led);
  CHECK(rep.m == 289);
  CHECK(rep.total_pulls == est1_pull_count(16, 2, 289));
}

TEST_CASE("every pull touches exactly k arms") {
  BanditInstance inst = zero_instance(12, 3);
  std::vector<int> arms(12);
  std::iota(arms.begin(), arms.end(), 0);
  RegretLedger led = scratch_ledger(inst);
  EstimationRequest req = make_req(arms, 3, 0.5, 0.1);
  req.fixed_m = 5;
  EstimateReport rep = est1(req, inst, RngKey(6), led);
  CHECK(participation_total(rep) == rep.total_pulls * 3);

  EstimationRequest creq;
  creq.k = 3;
  creq.eps = 0.5;
  creq.delta = 0.1;
  creq.fixed_m = 5;
  creq.accepted = {0};
  creq.top_set = {0, 1, 2, 3, 4, 5};
  for (int a = 1; a < 12; ++a) creq.arms.push_back(a);
  RegretLedger led2 = scratch_ledger(inst);
  EstimateReport rep2 = est2(creq, inst, RngKey(6), led2);
  CHECK(participation_total(rep2) == rep2.total_pulls * 3);
}

TEST_CASE("leave-one-out baseline is exact without noise, including padding") {
  BanditInstance inst = zero_instance(6, 2);
  std::vector<int> arms = {0, 1, 2, 3, 4, 5};
  RegretLedger led = scratch_ledger(inst);
  EstimateReport rep = est_loo(arms, 2, 4, inst, RngKey(8), led);
  check_exact(rep, inst, arms);
  CHECK(rep.blocks == 2);
  CHECK(rep.total_pulls == 2 * 3 * 4);  // blocks * (k+1) subsets * m

  BanditInstance inst7 = zero_instance(7, 2);
  std::vector<int> arms7 = {0, 1, 2, 3, 4, 5, 6};
  RegretLedger led7 = scratch_ledger(inst7);
  EstimateReport rep7 = est_loo(arms7, 2, 4, inst7, RngKey(8), led7);
  check_exact(rep7, inst7, arms7);
  CHECK(rep7.blocks == 3);
}

TEST_CASE("random balanced designs estimate exactly without noise") {
  BanditInstance inst = zero_instance(8, 2);
  std::vector<int> arms = {0, 1, 2, 3, 4, 5, 6, 7};
  RegretLedger led = scratch_ledger(inst);
  EstimateReport rep = est_random_matrix(arms, 2, 3, inst, RngKey(12), led);
  check_exact(rep, inst, arms);
  CHECK(rep.blocks == 2);
}

TEST_CASE("random sign rows are balanced and the solve row is a sum row") {
  std::mt19937_64 eng(5);
  DenseMatrix signs = random_sign_matrix(3, eng);
  REQUIRE(signs.rows == 6);
  for (int r = 0; r < 6; ++r) {
    int plus = 0;
    for (int c = 0; c < 6; ++c) plus += signs(r, c) > 0 ? 1 : 0;
    CHECK(plus == 3);
  }
  DenseMatrix eff = effective_design(signs);
  for (int c = 0; c < 6; ++c) CHECK(eff(0, c) == 1.0);
}

TEST_CASE("unconditional estimates are unbiased with the predicted spread") {
  // Per-coordinate error variance is exactly 1/m: each recovered coordinate
  // averages order-many rows whose measurement variance is order/m.
  BanditInstance inst{8, 2, {0.9, 0.7, 0.55, 0.4, 0.3, 0.2, 0.1, 0.0}, Noise::gaussian};
  std::vector<int> arms(8);
  std::iota(arms.begin(), arms.end(), 0);
  const std::int64_t m = 64;
  const int reps = 400;
  std::vector<std::vector<double>> errs(8);
  RngKey root(2024);
  for (int r = 0; r < reps; ++r) {
    RegretLedger led = scratch_ledger(inst);
    EstimationRequest req = make_req(arms, 2, 0.5, 0.1);
    req.fixed_m = m;
    EstimateReport rep = est1(req, inst, root.child(r), led);
    for (int a = 0; a < 8; ++a) errs[a].push_back(rep.estimates.at(a) - inst.means[a]);
  }
  double pooled_var = 0.0;
  for (int a = 0; a < 8; ++a) {
    double mean = 0.0, var = 0.0;
    for (double e : errs[a]) mean += e;
    mean /= reps;
    for (double e : errs[a]) var += (e - mean) * (e - mean);
    var /= reps - 1;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 4.0 * std::sqrt(1.0 / (m * reps))));
    pooled_var += var;
  }
  pooled_var /= 8.0;
  CHECK(pooled_var > 0.80 / m);
  CHECK(pooled_var < 1.25 / m);
}

TEST_CASE("conditional estimates carry the analytic variance") {
  // Survivor variance (k/k')/m + |A|/(k'^2 m_T); with one accepted arm, k=3,
  // and m = m_T = 16 that is 1.5/16 + 1/64 = 0.109375. The accepted arm keeps
  // the refresh variance 1/m_T.
  BanditInstance inst{12, 3, {}, Noise::gaussian};
  inst.means.resize(12);
  for (int i = 0; i < 12; ++i) inst.means[i] = 1.0 - 0.07 * i;
  validate_instance(inst);

  EstimationRequest req;
  req.k = 3;
  req.eps = 0.5;
  req.delta = 0.1;
  req.fixed_m = 16;
  req.accepted = {0};
  req.top_set = {0, 1, 2, 3, 4, 5};
  for (int a = 1; a < 12; ++a) req.arms.push_back(a);

  const int reps = 600;
  std::vector<std::vector<double>> errs(12);
  RngKey root(515);
  for (int r = 0; r < reps; ++r) {
    RegretLedger led = scratch_ledger(inst);
    EstimateReport rep = est2(req, inst, root.child(r), led);
    for (int a = 0; a < 12; ++a) errs[a].push_back(rep.estimates.at(a) - inst.means[a]);
  }
  const double surv_var = 1.5 / 16.0 + 1.0 / 64.0;
  const double acc_var = 1.0 / 16.0;
  double pooled = 0.0;
  for (int a = 0; a < 12; ++a) {
    double mean = 0.0, var = 0.0;
    for (double e : errs[a]) mean += e;
    mean /= reps;
    for (double e : errs[a]) var += (e - mean) * (e - mean);
    var /= reps - 1;
    double expect = a == 0 ? acc_var : surv_var;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 4.0 * std::sqrt(expect / reps)));
    if (a == 0) {
      CHECK(var > 0.70 * acc_var);
      CHECK(var < 1.35 * acc_var);
    } else {
      pooled += var;
    }
  }
  pooled /= 11.0;
  CHECK(pooled > 0.75 * surv_var);
  CHECK(pooled < 1.30 * surv_var);
}

TEST_CASE("leave-one-out estimates carry their larger variance") {
  // Var = (k^2 - k + 1) / (k m): the subtracted subset mean dominates.
  BanditInstance inst{6, 2, {0.5, 0.4, 0.3, 0.2, 0.1, 0.0}, Noise::gaussian};
  std::vector<int> arms = {0, 1, 2, 3, 4, 5};
  const std::int64_t m = 32;
  const int reps = 400;
  const double expect = 3.0 / (2.0 * m);
  std::vector<std::vector<double>> errs(6);
  RngKey root(808);
  for (int r = 0; r < reps; ++r) {
    RegretLedger led = scratch_ledger(inst);
    EstimateReport rep = est_loo(arms, 2, m, inst, root.child(r), led);
    for (int a = 0; a < 6; ++a) errs[a].push_back(rep.estimates.at(a) - inst.means[a]);
  }
  double pooled = 0.0;
  for (int a = 0; a < 6; ++a) {
    double mean = 0.0, var = 0.0;
    for (double e : errs[a]) mean += e;
    mean /= reps;
    for (double e : errs[a]) var += (e - mean) * (e - mean);
    var /= reps - 1;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 4.0 * std::sqrt(expect / reps)));
    pooled += var;
  }
  pooled /= 6.0;
  CHECK(pooled > 0.75 * expect);
  CHECK(pooled < 1.30 * expect);
}

TEST_CASE("estimator streams depend only on the key") {
  BanditInstance inst{8, 2, {0.9, 0.7, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0}, Noise::gaussian};
  std::vector<int> arms(8);
  std::iota(arms.begin(), arms.end(), 0);
  EstimationRequest req = make_req(arms, 2, 0.5, 0.1);
  RegretLedger l1 = scratch_ledger(inst), l2 = scratch_ledger(inst), l3 = scratch_ledger(inst);
  EstimateReport a = est1(req, inst, RngKey(42).child(1), l1);
  EstimateReport b = est1(req, inst, RngKey(42).child(1), l2);
  EstimateReport c = est1(req, inst, RngKey(42).child(2), l3);
  CHECK(a.estimates == b.estimates);
  CHECK(a.estimates != c.estimates);
}
