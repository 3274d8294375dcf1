#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "compound/basis.hpp"
#include "compound/coefficient_map.hpp"
#include "compound/multiindex.hpp"
#include "compound/rng.hpp"

using namespace compound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Midpoint-rule quadrature of fn over [0,1]^d with n points per axis.
template <typename F>
double quadrature(int d, int n, F&& fn) {
  double sum = 0.0;
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  while (true) {
    for (int c = 0; c < d; ++c) x[c] = (idx[c] + 0.5) / n;
    sum += fn(x);
    int pos = d - 1;
    while (pos >= 0 && idx[pos] == n - 1) idx[pos--] = 0;
    if (pos < 0) break;
    ++idx[pos];
  }
  return sum / std::pow(static_cast<double>(n), d);
}

}  // namespace

TEST_CASE("multi-index accessors") {
  MultiIndex j(std::vector<int>{2, 0, -3});
  CHECK(j.dim() == 3);
  CHECK(j.linf() == 3);
  CHECK(j.support() == std::vector<int>{1, 3});
  CHECK(j.support_within({1, 3}));
  CHECK_FALSE(j.support_within({1, 2}));
  CHECK(MultiIndex::zero(3).is_zero());
  CHECK(MultiIndex::zero(3).linf() == 0);
  CHECK_FALSE(j.is_zero());
}

TEST_CASE("index enumeration matches the counting identity") {
  SECTION("restricted to one coordinate") {
    auto list = enumerate_indices(IndexBox(2, 1, std::vector<int>{1}));
    REQUIRE(list.size() == 3);
    CHECK(list[0] == MultiIndex(std::vector<int>{-1, 0}));
    CHECK(list[1] == MultiIndex(std::vector<int>{0, 0}));
    CHECK(list[2] == MultiIndex(std::vector<int>{1, 0}));
  }
  SECTION("empty support forces the zero index") {
    auto list = enumerate_indices(IndexBox(3, 5, std::vector<int>{}));
    REQUIRE(list.size() == 1);
    CHECK(list[0].is_zero());
  }
  SECTION("full box") {
    CHECK(enumerate_indices(IndexBox(2, 1)).size() == 9);
  }
  SECTION("count law over small supports and cutoffs") {
    const int d = 3;
    std::vector<std::vector<int>> subsets = {{},  {1},    {2},    {3},   {1, 2},
                                             {1, 3}, {2, 3}, {1, 2, 3}};
    for (const auto& v : subsets)
      for (int n = 0; n <= 4; ++n) {
        auto list = enumerate_indices(IndexBox(d, n, v));
        CHECK(list.size() ==
              static_cast<std::size_t>(std::pow(2.0 * n + 1.0, static_cast<double>(v.size()))));
        CHECK(std::is_sorted(list.begin(), list.end()));
        CHECK(std::adjacent_find(list.begin(), list.end()) == list.end());
        CHECK(std::binary_search(list.begin(), list.end(), MultiIndex::zero(d)));
      }
  }
  SECTION("restriction outside the dimension is rejected") {
    CHECK_THROWS_AS(IndexBox(2, 1, std::vector<int>{3}), ParameterError);
  }
}

TEST_CASE("basis evaluation") {
  CHECK_THAT(eval_basis(MultiIndex::zero(3), std::vector<double>{0.3, 0.9, 0.1}),
             WithinAbs(1.0, 1e-15));
  CHECK_THAT(eval_basis(MultiIndex(std::vector<int>{1, 0}), std::vector<double>{0.0, 0.0}),
             WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK_THAT(eval_basis(MultiIndex(std::vector<int>{1, 1}), std::vector<double>{0.25, 0.0}),
             WithinAbs(0.0, 1e-12));
}

TEST_CASE("function synthesis") {
  CoefficientMap constant(2);
  constant.set(MultiIndex::zero(2), 2.5);
  CHECK_THAT(eval_function(constant, std::vector<double>{0.77, 0.13}), WithinAbs(2.5, 1e-15));

  CoefficientMap empty(2);
  CHECK_THAT(eval_function(empty, std::vector<double>{0.5, 0.5}), WithinAbs(0.0, 1e-15));

  CoefficientMap two(2);
  two.set(MultiIndex(std::vector<int>{1, 0}), 1.0);
  two.set(MultiIndex(std::vector<int>{-1, 0}), 1.0);
  CHECK_THAT(eval_function(two, std::vector<double>{0.125, 0.42}), WithinAbs(2.0, 1e-12));
}

TEST_CASE("orthonormality under midpoint quadrature") {
  SECTION("all pairs in one dimension") {
    for (int k = -3; k <= 3; ++k)
      for (int l = -3; l <= 3; ++l) {
        MultiIndex a(std::vector<int>{k}), b(std::vector<int>{l});
        double q = quadrature(1, 256, [&](const std::vector<double>& x) {
          return eval_basis(a, x) * eval_basis(b, x);
        });
        CHECK_THAT(q, WithinAbs(k == l ? 1.0 : 0.0, 1e-3));
      }
  }
  SECTION("random pairs in two dimensions") {
    Rng rng(2024);
    for (int rep = 0; rep < 25; ++rep) {
      auto draw = [&] {
        return MultiIndex(std::vector<int>{static_cast<int>(rng.below(7)) - 3,
                                           static_cast<int>(rng.below(7)) - 3});
      };
      MultiIndex a = draw(), b = draw();
      double q = quadrature(2, 256, [&](const std::vector<double>& x) {
        return eval_basis(a, x) * eval_basis(b, x);
      });
      CHECK_THAT(q, WithinAbs(a == b ? 1.0 : 0.0, 1e-3));
    }
  }
}

TEST_CASE("Parseval consistency on a random coefficient map") {
  Rng rng(7);
  CoefficientMap f(2);
  auto box = enumerate_indices(IndexBox(2, 3));
  while (f.values.size() < 20) {
    const MultiIndex& j = box[rng.below(box.size())];
    f.set(j, rng.normal());
  }
  double exact = f.l2_sq();
  double quad = quadrature(2, 256, [&](const std::vector<double>& x) {
    double v = eval_function(f, x);
    return v * v;
  });
  CHECK_THAT(quad, WithinRel(exact, 1e-3));
}
