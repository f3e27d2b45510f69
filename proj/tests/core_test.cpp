// Copyright 2026 The userside authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "support/synthetic.hpp"
#include "userside/core.hpp"
#include "userside/rng.hpp"

using namespace userside;

namespace {

// Two groups M=0, W=1 with a big enough universe for any test list.
AttributeTable men_women(int men, int women) {
  std::vector<int> groups;
  for (int i = 0; i < men; ++i) groups.push_back(0);
  for (int i = 0; i < women; ++i) groups.push_back(1);
  return AttributeTable(std::move(groups), {"M", "W"});
}

}  // namespace

TEST_CASE("rank discount anchors", "[core]") {
  CHECK(rank_discount(1) == Catch::Approx(1.0));
  CHECK(rank_discount(3) == Catch::Approx(0.5));
}

TEST_CASE("deficit fixtures", "[core]") {
  GroupLedger ledger(2);
  CHECK(ledger.deficit(3, 0) == 3);   // counts {M:0, W:0}, exclude M
  for (int i = 0; i < 6; ++i) ledger.add(0);
  CHECK(ledger.deficit(1) == 1);      // counts {M:6, W:0}, only W deficient

  GroupLedger balanced(2);
  balanced.add(0);
  balanced.add(0);
  balanced.add(1);
  balanced.add(1);
  CHECK(balanced.deficit(2) == 0);
}

TEST_CASE("deficit is monotone under count increments", "[core]") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int groups = 2 + static_cast<int>(rng.next_below(4));
    const int tau = static_cast<int>(rng.next_below(5));
    GroupLedger ledger(groups);
    for (int step = 0; step < 12; ++step) {
      const int before = ledger.deficit(tau);
      ledger.add(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(groups))));
      CHECK(ledger.deficit(tau) <= before);
    }
  }
}

TEST_CASE("can_add fixtures", "[core]") {
  const FairnessParams zero_tau(6, 0);
  CHECK(can_add(GroupLedger(2), 0, 0, zero_tau));

  // Five men already listed, one slot left, tau=1 over {M, W}.
  const FairnessParams params(6, 1);
  GroupLedger five_men(2);
  for (int i = 0; i < 5; ++i) five_men.add(0);
  CHECK_FALSE(can_add(five_men, 5, 0, params));  // a sixth man starves W
  CHECK(can_add(five_men, 5, 1, params));        // a woman completes the quota
}

TEST_CASE("accepting the rejected sixth man would break the quota", "[core]") {
  // Exhaustive justification of the fixture above: the hypothetical all-men
  // list has least_ratio 0 < tau/K = 1/6, while the accepted completion
  // attains exactly 1/6.
  const AttributeTable attrs = men_women(10, 10);
  const RecList all_men{0, 1, 2, 3, 4, 5};
  CHECK(least_ratio(all_men, attrs) == Ratio{0, 6});
  const RecList one_woman{0, 1, 2, 3, 4, 10};
  CHECK(least_ratio(one_woman, attrs) == Ratio{1, 6});
}

TEST_CASE("can_add construction invariant", "[core]") {
  // Any list grown through can_add keeps sum_a max(0, tau - c[a]) within
  // the remaining capacity, which is what makes the greedy sound.
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int groups = 2 + static_cast<int>(rng.next_below(3));
    const int k = groups + static_cast<int>(rng.next_below(10));
    const int tau = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k / groups) + 1));
    const FairnessParams params(k, tau);
    GroupLedger ledger(groups);
    int len = 0;
    while (len < k) {
      // Propose random candidates until one passes; every group has items.
      const int g = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(groups)));
      if (!can_add(ledger, len, g, params)) continue;
      ledger.add(g);
      ++len;
      CHECK(ledger.deficit(tau) <= k - len);
    }
    // A full list under the invariant meets every quota.
    CHECK(ledger.deficit(tau) == 0);
  }
}

TEST_CASE("least_ratio fixtures", "[core]") {
  const AttributeTable attrs = men_women(8, 8);
  const ItemId w = 8;  // first woman
  CHECK(least_ratio({0, 1, 2, 3, w, 4}, attrs) == Ratio{1, 6});
  CHECK(least_ratio({w, static_cast<ItemId>(w + 1), static_cast<ItemId>(w + 2)}, attrs) ==
        Ratio{0, 3});
  CHECK(least_ratio({0, w, 1, static_cast<ItemId>(w + 1)}, attrs) == Ratio{1, 2});
  CHECK_THROWS_AS(least_ratio({}, attrs), ConstraintError);
}

TEST_CASE("list_entropy fixtures", "[core]") {
  const AttributeTable attrs = men_women(8, 8);
  const ItemId w = 8;
  CHECK(list_entropy({0, 1, 2, 3, w, 4}, attrs) == Catch::Approx(0.650).margin(0.001));
  CHECK(list_entropy({0, 1, 2}, attrs) == 0.0);
  CHECK(list_entropy({0, w, 1, static_cast<ItemId>(w + 1)}, attrs) == Catch::Approx(1.0));
  CHECK_THROWS_AS(list_entropy({}, attrs), ConstraintError);
}

TEST_CASE("fairness metrics are permutation invariant", "[core]") {
  Rng rng(23);
  const AttributeTable attrs = testsup::round_robin_attrs(40, 3, 5);
  for (int trial = 0; trial < 100; ++trial) {
    RecList list;
    std::set<ItemId> chosen;
    while (list.size() < 8) {
      const ItemId item = static_cast<ItemId>(rng.next_below(40));
      if (chosen.insert(item).second) list.push_back(item);
    }
    RecList shuffled = list;
    rng.shuffle(shuffled);
    CHECK(least_ratio(list, attrs) == least_ratio(shuffled, attrs));
    CHECK(list_entropy(list, attrs) == Catch::Approx(list_entropy(shuffled, attrs)));
  }
}

TEST_CASE("FairnessParams validation", "[core]") {
  const AttributeTable attrs = men_women(8, 3);
  CHECK_NOTHROW(FairnessParams(10, 3).validate(attrs));
  // tau * |groups| exceeding K is unsatisfiable.
  CHECK_THROWS_AS(FairnessParams(10, 6).validate(attrs), ConstraintError);
  // A group smaller than tau is unsatisfiable too.
  CHECK_THROWS_AS(FairnessParams(10, 4).validate(attrs), ConstraintError);
  CHECK_THROWS_AS(FairnessParams(0, 0), ConstraintError);
  CHECK_THROWS_AS(FairnessParams(5, -1), ConstraintError);
}

TEST_CASE("fair_greedy_select matches the independent reference", "[core]") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const ItemId n = 15 + static_cast<ItemId>(rng.next_below(30));
    const int groups = 2 + static_cast<int>(rng.next_below(3));
    const AttributeTable attrs = testsup::round_robin_attrs(n, groups, rng.next_u64());
    const int k = 6;
    const int tau = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k / groups) + 1));
    const FairnessParams params(k, tau);

    std::vector<ItemId> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::set<ItemId> banned;
    for (int b = 0; b < 3; ++b) banned.insert(static_cast<ItemId>(rng.next_below(n)));

    const RecList got = fair_greedy_select(
        std::span<const ItemId>(order), attrs, params,
        [&banned](ItemId j) { return banned.count(j) > 0; });
    const RecList want = testsup::greedy_reference(order, attrs, k, tau, banned);
    CHECK(got == want);
  }
}

TEST_CASE("full fair_greedy_select lists satisfy the tau quota exactly", "[core]") {
  Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const ItemId n = 20 + static_cast<ItemId>(rng.next_below(40));
    const int groups = 2 + static_cast<int>(rng.next_below(2));
    const AttributeTable attrs = testsup::round_robin_attrs(n, groups, rng.next_u64());
    const int k = 10;
    const int tau = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k / groups) + 1));
    const FairnessParams params(k, tau);
    params.validate(attrs);

    std::vector<ItemId> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const RecList list =
        fair_greedy_select(std::span<const ItemId>(order), attrs, params, [](ItemId) { return false; });
    REQUIRE(static_cast<int>(list.size()) == k);
    CHECK(least_ratio(list, attrs).at_least(tau, k));
  }
}

TEST_CASE("Ratio comparisons are exact", "[core]") {
  CHECK(Ratio{1, 6}.at_least(1, 6));
  CHECK_FALSE(Ratio{1, 6}.at_least(1, 5));
  CHECK(Ratio{2, 4} == Ratio{1, 2});
  CHECK(Ratio{1, 3}.value() == Catch::Approx(1.0 / 3.0));
}
