#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "ccrn/algorithms.hpp"
#include "ccrn/errors.hpp"
#include "test_util.hpp"

using namespace ccrn;

namespace {

SimConfig config(const ErasureModel& m, std::size_t k1, std::size_t k2, std::uint64_t seed = 1) {
  SimConfig c;
  c.model = m;
  c.k1 = k1;
  c.k2 = k2;
  c.seed = seed;
  c.check_invariants = true;
  return c;
}

const ErasureModel kHalf = ErasureModel::independent(0.5, 0.5, 0.5, 0.5, 0.5);

// Trace lines without the step label (the two algorithms number their steps differently).
std::vector<nlohmann::json> actions(const std::string& trace) {
  std::vector<nlohmann::json> out;
  std::istringstream in(trace);
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j.erase("step");
    j.erase("queues_after");
    out.push_back(j);
  }
  return out;
}

}  // namespace

TEST_CASE("MixParams validation") {
  const MixParams ok{0.5, 0.5, 1.0};
  CHECK_NOTHROW(ok.validate());
  const MixParams negative{-0.1, 0, 0}, over{0.6, 0.5, 0}, bad_u{0, 0, 1.5}, big{0.7, 0.7, 0};
  CHECK_THROWS_AS(negative.validate(), DomainError);
  CHECK_THROWS_AS(over.validate(), DomainError);
  CHECK_THROWS_AS(bad_u.validate(), DomainError);
  CHECK_THROWS_AS(Algorithm2Policy{big}, DomainError);
  CHECK_THROWS_AS(make_policy("alg3"), ConfigError);
  CHECK(make_policy("alg1")->name() == "alg1");
  CHECK(make_policy("alg2")->name() == "alg2");
}

TEST_CASE("Algorithm 2 with g = s = 0 replays Algorithm 1 slot for slot") {
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    auto m = test::random_independent_model(rng, 0.8);
    try { check_region_preconditions(m); } catch (const PreconditionError&) { continue; }
    std::ostringstream t1, t2;
    SimConfig c1 = config(m, 150, 150, 1000 + t), c2 = c1;
    c1.trace = &t1;
    c2.trace = &t2;
    Algorithm1Policy a1;
    Algorithm2Policy a2({0.0, 0.0, 0.7});
    const SimResult r1 = run_loop(c1, a1);
    const SimResult r2 = run_loop(c2, a2);
    CHECK(r1.total_slots == r2.total_slots);
    CHECK(actions(t1.str()) == actions(t2.str()));
    CHECK(r2.phase("2") == 0);
    CHECK(r2.phase("5") == 0);
  }
}

TEST_CASE("Algorithm 2 scripted: coded send heard by 4 only, node 1 finishes it (2bii)") {
  // k1 = k2 = 1, s = 1: the primary packet heard only by node 2 is selected for coding.
  ScriptedErasureSource script({
      Reception{{2}},     // step 1: w1 reaches node 2 only -> S queues
      Reception{{3}},     // step 4: w2 reaches node 3 only -> Q2_3n4
      Reception{{4}},     // step 5: w1^w2 reaches node 4 only -> A1_2n34
      Reception{{2, 4}},  // step 6: node 1 resends w1, node 4 hears -> node 4 decodes w2, w1 to Q1_2_n34
      Reception{{3}},     // step 8: node 2 sends w1 uncoded, node 3 hears
  });
  Algorithm2Policy alg({0.0, 1.0, 1.0});
  const SimResult r = run_loop(config(kHalf, 1, 1), alg, &script);
  CHECK(r.total_slots == 5);
  CHECK(r.all_decoded());
  CHECK(r.phase("5") == 1);
  CHECK(r.phase("6") == 1);
  CHECK(r.phase("8") == 1);
  CHECK(r.snapshot("before:7", Queue::Q1_2_n34) == 1);
  CHECK(r.snapshot("before:7", Queue::Q1_4_2n3) == 1);
  // Node 4 recovered its packet through node 1's retransmission of the primary constituent.
  CHECK(r.recovered_in_step[1].at("6") == 1);
  CHECK(r.recovered_by_xor[1] == 1);
}

TEST_CASE("Algorithm 2 scripted: coded send heard by 3 only, then both, Step 7 finishes") {
  ScriptedErasureSource script({
      Reception{{2}},        // step 1 -> S
      Reception{{3}},        // step 4 -> Q2_3n4
      Reception{{4}},        // step 5 -> A1_2n34
      Reception{{3}},        // step 6: node 3 hears w1 -> A1_234
      Reception{{2, 3}},     // step 7: node 4 misses
      Reception{{2, 3, 4}},  // step 7: node 4 hears w1 -> decodes w2
  });
  Algorithm2Policy alg({0.0, 1.0, 1.0});
  const SimResult r = run_loop(config(kHalf, 1, 1), alg, &script);
  CHECK(r.total_slots == 6);
  CHECK(r.all_decoded());
  CHECK(r.phase("7") == 2);
  CHECK(r.recovered_in_step[1].at("7") == 1);
}

TEST_CASE("Algorithm 2 scripted: Step 7 thinning with u = 0 returns the secondary packet") {
  ScriptedErasureSource script({
      Reception{{2}},     // step 1 -> S
      Reception{{3}},     // step 4 -> Q2_3n4
      Reception{{3, 4}},  // step 5: both hear w1^w2; node 3 decodes w1 -> A1_234
      Reception{{4}},     // step 8: w2 returned to Q2_3n4, sent uncoded to node 4
  });
  Algorithm2Policy alg({0.0, 1.0, 0.0});
  const SimResult r = run_loop(config(kHalf, 1, 1), alg, &script);
  CHECK(r.total_slots == 4);
  CHECK(r.all_decoded());
  CHECK(r.events.at("step7.returned") == 1);
  CHECK(r.phase("7") == 0);
  CHECK(r.phase("8") == 1);
}

TEST_CASE("Algorithm 2 scripted: node 1 relays a G packet (Step 2)") {
  ScriptedErasureSource script({
      Reception{{2}},  // step 1 -> G (g = 1)
      Reception{{}},   // step 2: lost
      Reception{{4}},  // step 2: node 4 hears -> Q1_2_n34
      Reception{{3}},  // step 8: node 2 sends it uncoded, node 3 hears
  });
  Algorithm2Policy alg({1.0, 0.0, 0.0});
  const SimResult r = run_loop(config(kHalf, 1, 0), alg, &script);
  CHECK(r.total_slots == 4);
  CHECK(r.all_decoded());
  CHECK(r.phase("2") == 2);
}

TEST_CASE("Algorithm 2 demotes S packets when no coding partner is left") {
  // No secondary packets at all: every S packet must go out uncoded in Step 5.
  ScriptedErasureSource script({Reception{{2}}, Reception{{2}}, Reception{{4}}, Reception{{3}}, Reception{{3}}});
  Algorithm2Policy alg({0.0, 1.0, 0.5});
  const SimResult r = run_loop(config(kHalf, 2, 0), alg, &script);
  CHECK(r.all_decoded());
  CHECK(r.events.at("step5.uncoded_slots") == 2);
  CHECK(r.total_slots == 5);

  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    Algorithm2Policy random_alg({0.1, 0.9, rng.uniform()});
    const SimResult rr = run_loop(config(ErasureModel::independent(0.3, 0.8, 0.5, 0.3, 0.6), 100, 3, t), random_alg);
    CHECK(rr.all_decoded());
  }
}

TEST_CASE("Step 1b marking: node-4 overhearing before node 2 sends the packet to the XOR queue") {
  ScriptedErasureSource script({
      Reception{{4}},  // step 1: only node 4 hears -> marked
      Reception{{2}},  // step 1: node 2 hears a marked packet -> Q1_2_n34 (Step 1d)
      Reception{{3}},  // step 4 uncoded to node 3
  });
  Algorithm1Policy alg;
  const SimResult r = run_loop(config(kHalf, 1, 0), alg, &script);
  CHECK(r.total_slots == 3);
  CHECK(r.all_decoded());
  CHECK(r.phase("2") == 0);
  CHECK(r.counter("tau1[4]") == 1);
}

TEST_CASE("check_reachable for Algorithm 2 parameters") {
  // Node 1 never reaches node 4: u > 0 with s > 0 could wait forever in Step 7.
  ErasureModel::Node1Pmf p{};
  p[4 + 2] = 0.5;  // z2, z3
  p[4] = 0.5;      // z2 only
  const auto m = ErasureModel::joint(p, {0, 0, 0, 1});
  Algorithm2Policy bad({0.0, 0.5, 0.5});
  CHECK_THROWS_AS(run_loop(config(m, 5, 5), bad), ConfigError);
  Algorithm2Policy fine({0.0, 0.5, 0.0});
  CHECK_NOTHROW(run_loop(config(m, 5, 5), fine));
}

TEST_CASE("randomized decoding correctness with invariant checks") {
  Rng rng(2718);
  int runs = 0;
  while (runs < 120) {
    auto m = rng.uniform() < 0.5 ? test::random_independent_model(rng, 0.85) : test::random_joint_model(rng);
    try {
      check_region_preconditions(m);
    } catch (const PreconditionError&) {
      continue;
    }
    const MixParams p{0.4 * rng.uniform(), 0.5 * rng.uniform(), rng.uniform()};
    const auto k1 = static_cast<std::size_t>(rng.uniform() * 80), k2 = static_cast<std::size_t>(rng.uniform() * 80) + 1;
    auto policy = make_policy(runs % 2 ? "alg2" : "alg1", p);
    const SimResult r = run_loop(config(m, k1, k2, runs), *policy);
    CHECK(r.completed);
    CHECK(r.all_decoded());
    ++runs;
  }
}
