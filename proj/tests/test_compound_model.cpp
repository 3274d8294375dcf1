#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "compound/basis.hpp"
#include "compound/compound_model.hpp"
#include "compound/rng.hpp"

using namespace compound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("structure validation") {
  SECTION("valid disjoint pattern") {
    Structure st = make_structure(4, 2, {{1, 2}, {3}}, FamilyRule::disjoint);
    CHECK(st.m() == 2);
    CHECK(st.stratum() == 2);
    CHECK(st.supports == std::vector<std::vector<int>>{{1, 2}, {3}});
  }
  SECTION("support larger than s") {
    CHECK_THROWS_AS(make_structure(4, 1, {{1, 2}}, FamilyRule::disjoint), ParameterError);
  }
  SECTION("disjointness enforced") {
    CHECK_THROWS_AS(make_structure(4, 2, {{1, 2}, {2, 3}}, FamilyRule::disjoint), ParameterError);
    CHECK_NOTHROW(make_structure(4, 2, {{1, 2}, {2, 3}}, FamilyRule::overlap_at_most_one));
  }
  SECTION("overlap-at-most-one rejects a chain of overlaps") {
    CHECK_THROWS_AS(
        make_structure(5, 2, {{1, 2}, {2, 3}, {3, 4}}, FamilyRule::overlap_at_most_one),
        ParameterError);
    CHECK_NOTHROW(make_structure(5, 2, {{1, 2}, {2, 3}, {3, 4}}, FamilyRule::unrestricted));
  }
  SECTION("duplicate support") {
    CHECK_THROWS_AS(make_structure(4, 2, {{1, 2}, {1, 2}}, FamilyRule::unrestricted),
                    ParameterError);
  }
  SECTION("coordinate out of range") {
    CHECK_THROWS_AS(make_structure(3, 1, {{4}}, FamilyRule::disjoint), ParameterError);
  }
  SECTION("empty structure is the constant pattern") {
    Structure st = Structure::empty(3);
    CHECK(st.m() == 0);
    CHECK(st.stratum() == 0);
  }
}

TEST_CASE("structure serialization round-trip") {
  Structure st = make_structure(5, 2, {{1, 3}, {2}, {4, 5}}, FamilyRule::disjoint);
  Structure back = parse_structure(serialize_structure(st), 5, 2, FamilyRule::disjoint);
  CHECK(back.supports == st.supports);
  CHECK(parse_structure("", 5, 2, FamilyRule::disjoint).m() == 0);
}

TEST_CASE("sampled atoms sit on the smoothness sphere") {
  Rng rng(11);
  SECTION("empty support yields the zero atom") {
    SobolevBall ball(std::vector<int>{}, 2.0, 1.0);
    CHECK(sample_sobolev_atom(3, ball, 4, rng).size() == 0);
  }
  SECTION("normalization and support discipline") {
    SobolevBall ball(std::vector<int>{2}, 1.5, 0.7);
    CoefficientMap atom = sample_sobolev_atom(3, ball, 5, rng, 1.0);
    CHECK_THAT(atom.sobolev_form(1.5), WithinRel(0.7, 1e-12));
    CHECK(ball.contains(atom));
    for (const auto& [j, v] : atom.values) {
      CHECK_FALSE(j.is_zero());
      CHECK(j.support_within({2}));
    }
  }
  SECTION("interior radius") {
    SobolevBall ball(std::vector<int>{1, 2}, 2.0, 1.0);
    CoefficientMap atom = sample_sobolev_atom(2, ball, 3, rng, 0.25);
    CHECK_THAT(atom.sobolev_form(2.0), WithinRel(0.25, 1e-12));
  }
  SECTION("same seed, same atom") {
    SobolevBall ball(std::vector<int>{1}, 1.0, 1.0);
    Rng a(99), b(99);
    CoefficientMap fa = sample_sobolev_atom(2, ball, 6, a);
    CoefficientMap fb = sample_sobolev_atom(2, ball, 6, b);
    CHECK(fa.values == fb.values);
  }
  SECTION("sign flip preserves the smoothness form") {
    SobolevBall ball(std::vector<int>{1}, 1.0, 1.0);
    CoefficientMap atom = sample_sobolev_atom(2, ball, 4, rng);
    CoefficientMap flipped = atom;
    flipped.scale(-1.0);
    CHECK_THAT(flipped.sobolev_form(1.0), WithinRel(atom.sobolev_form(1.0), 1e-15));
  }
  SECTION("rho outside (0,1] is rejected") {
    SobolevBall ball(std::vector<int>{1}, 1.0, 1.0);
    CHECK_THROWS_AS(sample_sobolev_atom(2, ball, 3, rng, 0.0), ParameterError);
    CHECK_THROWS_AS(sample_sobolev_atom(2, ball, 3, rng, 1.5), ParameterError);
  }
}

TEST_CASE("composition flattens to the coefficient map") {
  SECTION("hand example") {
    Structure st = make_structure(2, 1, {{1}}, FamilyRule::disjoint);
    CoefficientMap atom(2);
    atom.set(MultiIndex(std::vector<int>{1, 0}), 0.3);
    CompoundFunction f = compose(1.0, st, {atom});
    CoefficientMap flat = f.flatten();
    REQUIRE(flat.size() == 2);
    CHECK(flat.get(MultiIndex::zero(2)) == 1.0);
    CHECK(flat.get(MultiIndex(std::vector<int>{1, 0})) == 0.3);
  }
  SECTION("atom off its support is rejected") {
    Structure st = make_structure(2, 1, {{1}}, FamilyRule::disjoint);
    CoefficientMap bad(2);
    bad.set(MultiIndex(std::vector<int>{0, 1}), 0.5);
    CHECK_THROWS_AS(compose(0.0, st, {bad}), ParameterError);
  }
  SECTION("atom with a zero-index coefficient is rejected") {
    Structure st = make_structure(2, 1, {{1}}, FamilyRule::disjoint);
    CoefficientMap bad(2);
    bad.set(MultiIndex::zero(2), 0.5);
    CHECK_THROWS_AS(compose(0.0, st, {bad}), ParameterError);
  }
  SECTION("atom count must match the pattern") {
    Structure st = make_structure(2, 1, {{1}}, FamilyRule::disjoint);
    CHECK_THROWS_AS(compose(0.0, st, {}), ParameterError);
  }
  SECTION("pointwise additivity of the composition") {
    Structure st = make_structure(4, 2, {{1, 2}, {3, 4}}, FamilyRule::disjoint);
    Rng rng(5);
    std::vector<CoefficientMap> atoms;
    for (int l = 0; l < 2; ++l)
      atoms.push_back(sample_sobolev_atom(4, SobolevBall(st.supports[l], 2.0, 1.0), 2, rng));
    CompoundFunction f = compose(0.7, st, atoms);
    CoefficientMap flat = f.flatten();
    Rng xr(17);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> x(4);
      for (double& c : x) c = xr.uniform();
      double total = eval_function(flat, x);
      double parts = 0.7 + eval_function(atoms[0], x) + eval_function(atoms[1], x);
      CHECK_THAT(total, WithinRel(parts, 1e-12));
    }
  }
  SECTION("overlapping atoms add coefficientwise") {
    Structure st = make_structure(2, 2, {{1}, {1, 2}}, FamilyRule::overlap_at_most_one);
    CoefficientMap a(2), b(2);
    a.set(MultiIndex(std::vector<int>{1, 0}), 0.4);
    b.set(MultiIndex(std::vector<int>{1, 0}), -0.1);
    b.set(MultiIndex(std::vector<int>{1, 1}), 0.2);
    CoefficientMap flat = compose(0.0, st, {a, b}).flatten();
    CHECK_THAT(flat.get(MultiIndex(std::vector<int>{1, 0})), WithinAbs(0.3, 1e-15));
    CHECK_THAT(flat.get(MultiIndex(std::vector<int>{1, 1})), WithinAbs(0.2, 1e-15));
  }
}

TEST_CASE("component norms split out of the flattened form for disjoint supports") {
  Structure st = make_structure(5, 2, {{1, 2}, {4}}, FamilyRule::disjoint);
  Rng rng(23);
  std::vector<CoefficientMap> atoms;
  for (int l = 0; l < 2; ++l)
    atoms.push_back(sample_sobolev_atom(5, SobolevBall(st.supports[l], 1.0, 1.0), 3, rng));
  CoefficientMap flat = compose(0.0, st, atoms).flatten();
  for (int l = 0; l < 2; ++l) {
    double restricted = 0.0;
    for (const auto& [j, v] : flat.values)
      if (!j.is_zero() && j.support_within(st.supports[l])) restricted += v * v;
    CHECK_THAT(restricted, WithinRel(atoms[l].l2_sq(), 1e-12));
  }
}

TEST_CASE("norm compatibility ratio") {
  SECTION("single component is exactly 1") {
    Structure st = make_structure(2, 1, {{1}}, FamilyRule::disjoint);
    Rng rng(3);
    auto atom = sample_sobolev_atom(2, SobolevBall({1}, 1.0, 1.0), 3, rng);
    CHECK_THAT(verify_norm_compatibility(compose(0.0, st, {atom})), WithinRel(1.0, 1e-12));
  }
  SECTION("disjoint components give exactly 1") {
    Structure st = make_structure(4, 2, {{1, 2}, {3, 4}}, FamilyRule::disjoint);
    Rng rng(31);
    std::vector<CoefficientMap> atoms;
    for (int l = 0; l < 2; ++l)
      atoms.push_back(sample_sobolev_atom(4, SobolevBall(st.supports[l], 1.0, 1.0), 2, rng));
    CHECK_THAT(verify_norm_compatibility(compose(0.0, st, atoms)), WithinRel(1.0, 1e-12));
  }
  SECTION("fully duplicated components give 2") {
    Structure st = make_structure(2, 2, {{1}, {1, 2}}, FamilyRule::overlap_at_most_one);
    CoefficientMap a(2), b(2);
    a.set(MultiIndex(std::vector<int>{1, 0}), 0.5);
    b.set(MultiIndex(std::vector<int>{1, 0}), 0.5);
    CHECK_THAT(verify_norm_compatibility(compose(0.0, st, {a, b})), WithinRel(2.0, 1e-12));
  }
  SECTION("all-zero atoms are rejected") {
    Structure st = make_structure(2, 1, {{1}}, FamilyRule::disjoint);
    CHECK_THROWS_AS(verify_norm_compatibility(compose(0.0, st, {CoefficientMap(2)})),
                    ParameterError);
  }
}

TEST_CASE("realized compatibility stays under the family constant") {
  // Random overlap-at-most-one patterns with random smooth atoms: the
  // realized ratio must respect the guaranteed constant 3/2.
  CHECK(family_constant(FamilyRule::disjoint) == 1.0);
  CHECK(family_constant(FamilyRule::overlap_at_most_one) == 1.5);
  CHECK_THROWS_AS(family_constant(FamilyRule::unrestricted), ParameterError);

  Rng rng(20240815);
  int tested = 0;
  while (tested < 100) {
    int d = 3 + static_cast<int>(rng.below(4));  // 3..6
    int s = 1 + static_cast<int>(rng.below(2));  // 1..2
    int m = 2 + static_cast<int>(rng.below(2));  // 2..3
    std::vector<std::vector<int>> supports;
    for (int l = 0; l < m; ++l) {
      int size = 1 + static_cast<int>(rng.below(s));
      std::vector<int> v;
      while (static_cast<int>(v.size()) < size) {
        int c = 1 + static_cast<int>(rng.below(d));
        if (std::find(v.begin(), v.end(), c) == v.end()) v.push_back(c);
      }
      std::sort(v.begin(), v.end());
      supports.push_back(std::move(v));
    }
    std::sort(supports.begin(), supports.end());
    supports.erase(std::unique(supports.begin(), supports.end()), supports.end());
    if (static_cast<int>(supports.size()) < 2) continue;
    if (!family_rule_ok(FamilyRule::overlap_at_most_one, supports)) continue;

    Structure st = make_structure(d, s, supports, FamilyRule::overlap_at_most_one);
    std::vector<CoefficientMap> atoms;
    bool degenerate = false;
    for (const auto& v : st.supports) {
      atoms.push_back(sample_sobolev_atom(d, SobolevBall(v, 2.0, 1.0), 3, rng));
      if (atoms.back().size() == 0) degenerate = true;
    }
    if (degenerate) continue;
    double ratio = verify_norm_compatibility(compose(0.0, st, atoms));
    CHECK(ratio <= family_constant(FamilyRule::overlap_at_most_one));
    ++tested;
  }
}

TEST_CASE("low-frequency tensor atoms") {
  SECTION("admissible index counts") {
    CHECK(tensor_admissible_indices(2, TensorClass({1, 2}, {0, 1})).size() == 3);
    CHECK(tensor_admissible_indices(2, TensorClass({1}, {-1, 0, 1})).size() == 2);
    // Without level 0 every free coordinate is forced off support: no index.
    CHECK(tensor_admissible_indices(2, TensorClass({1}, {1})).empty());
  }
  SECTION("validated construction") {
    TensorClass cls({1, 2}, {0, 1});
    CoefficientMap good(2);
    good.set(MultiIndex(std::vector<int>{1, 1}), 0.2);
    CHECK(make_tensor_atom(2, cls, good).size() == 1);

    CoefficientMap bad_level(2);
    bad_level.set(MultiIndex(std::vector<int>{2, 0}), 0.2);
    CHECK_THROWS_AS(make_tensor_atom(2, cls, bad_level), ParameterError);

    CoefficientMap bad_support(2);
    bad_support.set(MultiIndex(std::vector<int>{0, 1}), 0.2);
    CHECK_THROWS_AS(make_tensor_atom(2, TensorClass({1}, {0, 1}), bad_support), ParameterError);
  }
  SECTION("max level") {
    CHECK(TensorClass({1}, {-2, 0, 1}).max_level() == 2);
  }
}
