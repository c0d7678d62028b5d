#include <doctest.h>

#include "clab/group.hpp"
#include "clab/rng.hpp"

#include "oracles.hpp"

#include <algorithm>

using namespace clab;
using namespace clab::testing;

TEST_CASE("free reduction") {
    auto f2 = GroupBackend::free_group(2);
    CHECK(f2.multiply(f2.parse("a"), f2.parse("A")) == f2.identity());
    CHECK(f2.render(f2.multiply(f2.parse("ab"), f2.parse("Ba"))) == "aa");
    CHECK(f2.parse("abBA") == f2.identity());
}

TEST_CASE("order-2 relator reduction") {
    auto z222 = GroupBackend::free_product_of_cyclics({2, 2, 2});
    CHECK(z222.multiply(z222.parse("a"), z222.parse("a")) == z222.identity());
    CHECK(z222.render(z222.parse("aba")) == "aba");
    CHECK(word_length(z222.parse("aba")) == 3);
    // Inverse letters normalize to the involution itself.
    CHECK(z222.parse("A") == z222.parse("a"));
}

TEST_CASE("cyclic factors of higher order use geodesic exponents") {
    auto z5 = GroupBackend::free_product_of_cyclics({5, 5});
    CHECK(z5.render(z5.parse("aa")) == "aa");
    CHECK(z5.render(z5.parse("aaa")) == "AA"); // a^3 = a^-2
    CHECK(z5.parse("aaaaa") == z5.identity());
    CHECK(word_length(z5.parse("aaab")) == 3);

    auto z4 = GroupBackend::free_product_of_cyclics({4, 4});
    // a^2 is self-inverse; canonical sign is positive.
    CHECK(z4.render(z4.inverse(z4.parse("aa"))) == "aa");
    CHECK(z4.render(z4.parse("AA")) == "aa");
}

TEST_CASE("word lengths") {
    auto f2 = GroupBackend::free_group(2);
    CHECK(word_length(f2.identity()) == 0);
    CHECK(word_length(f2.parse("abA")) == 3);
    CHECK(f2.distance(f2.identity(), f2.parse("abA")) == 3);
}

TEST_CASE("normalization is idempotent") {
    auto backends = {GroupBackend::free_group(2),
                     GroupBackend::free_product_of_cyclics({2, 2, 2}),
                     GroupBackend::free_product_of_cyclics({3, 4}),
                     GroupBackend::integer_line()};
    for (const auto& b : backends) {
        CounterRng rng = CounterRng::stream(11, "idem" + b.name(), 0);
        for (int i = 0; i < 500; ++i) {
            GroupElement g = random_word(b, rng, 20);
            CHECK(b.normalize(g.letters) == g);
        }
    }
}

TEST_CASE("inverse law and left invariance") {
    auto backends = {GroupBackend::free_group(2),
                     GroupBackend::free_product_of_cyclics({2, 2, 2}),
                     GroupBackend::free_product_of_cyclics({3, 5}),
                     GroupBackend::integer_line()};
    for (const auto& b : backends) {
        CounterRng rng = CounterRng::stream(12, "inv" + b.name(), 0);
        for (int i = 0; i < 2500; ++i) {
            GroupElement g = random_word(b, rng, 16);
            GroupElement x = random_word(b, rng, 16);
            GroupElement y = random_word(b, rng, 16);
            CHECK(b.multiply(g, b.inverse(g)) == b.identity());
            CHECK(b.multiply(b.inverse(g), g) == b.identity());
            CHECK(b.distance(b.multiply(g, x), b.multiply(g, y)) == b.distance(x, y));
            GroupElement w = random_word(b, rng, 16);
            CHECK(b.gromov_product_doubled(b.multiply(g, x), b.multiply(g, y),
                                           b.multiply(g, w)) ==
                  b.gromov_product_doubled(x, y, w));
        }
    }
}

TEST_CASE("left quotient agrees with inverse-and-multiply") {
    auto backends = {GroupBackend::free_group(3),
                     GroupBackend::free_product_of_cyclics({2, 2, 2}),
                     GroupBackend::free_product_of_cyclics({3, 4})};
    for (const auto& b : backends) {
        CounterRng rng = CounterRng::stream(13, "quot" + b.name(), 0);
        for (int i = 0; i < 2000; ++i) {
            GroupElement x = random_word(b, rng, 18);
            GroupElement y = random_word(b, rng, 18);
            CHECK(b.left_quotient(x, y) == b.multiply(b.inverse(x), y));
        }
    }
}

TEST_CASE("word metric axioms on sampled triples") {
    auto backends = {GroupBackend::free_group(2),
                     GroupBackend::free_product_of_cyclics({3, 3}),
                     GroupBackend::free_product_of_cyclics({2, 4})};
    for (const auto& b : backends) {
        CounterRng rng = CounterRng::stream(14, "metric" + b.name(), 0);
        for (int i = 0; i < 1500; ++i) {
            GroupElement x = random_word(b, rng, 14);
            GroupElement y = random_word(b, rng, 14);
            GroupElement z = random_word(b, rng, 14);
            CHECK(b.distance(x, y) == b.distance(y, x));
            CHECK(b.distance(x, z) <= b.distance(x, y) + b.distance(y, z));
            CHECK((b.distance(x, y) == 0) == (x == y));
        }
    }
}

TEST_CASE("gromov product basics") {
    auto f2 = GroupBackend::free_group(2);
    GroupElement id = f2.identity();

    // (x, id)_id = 0 for any x.
    CounterRng rng = CounterRng::stream(15, "gromov", 0);
    for (int i = 0; i < 100; ++i) {
        GroupElement x = random_word(f2, rng, 10);
        CHECK(f2.gromov_product_doubled(x, id, id) == 0);
        // (x, x)_w = d(w, x).
        GroupElement w = random_word(f2, rng, 10);
        CHECK(f2.gromov_product_doubled(x, x, w) == 2 * f2.distance(w, x));
    }

    // Worked case: x = aa, y = ab, w = id gives product 1.
    CHECK(f2.distance(f2.parse("aa"), f2.parse("ab")) == 2);
    CHECK(f2.gromov_product(f2.parse("aa"), f2.parse("ab"), id) == doctest::Approx(1.0));
}

TEST_CASE("gromov product bounds") {
    auto backends = {GroupBackend::free_group(2),
                     GroupBackend::free_product_of_cyclics({3, 3, 2})};
    for (const auto& b : backends) {
        CounterRng rng = CounterRng::stream(16, "gbounds" + b.name(), 0);
        for (int i = 0; i < 1500; ++i) {
            GroupElement x = random_word(b, rng, 12);
            GroupElement y = random_word(b, rng, 12);
            GroupElement w = random_word(b, rng, 12);
            std::int64_t doubled = b.gromov_product_doubled(x, y, w);
            CHECK(doubled >= 0);
            CHECK(doubled <= 2 * std::min(b.distance(w, x), b.distance(w, y)));
        }
    }
}

TEST_CASE("on trees the gromov product is the distance to the geodesic") {
    auto backends = {GroupBackend::free_group(2),
                     GroupBackend::free_product_of_cyclics({2, 2, 2})};
    for (const auto& b : backends) {
        CounterRng rng = CounterRng::stream(17, "tree" + b.name(), 0);
        for (int i = 0; i < 3000; ++i) {
            GroupElement x = random_word(b, rng, 12);
            GroupElement y = random_word(b, rng, 12);
            GroupElement w = random_word(b, rng, 12);
            std::int64_t oracle = tree_distance_to_geodesic(x, y, w);
            CHECK(b.gromov_product_doubled(x, y, w) == 2 * oracle);
        }
    }
}

TEST_CASE("render and parse round-trip") {
    auto f2 = GroupBackend::free_group(2);
    CHECK(f2.render(f2.identity()) == "id");
    CHECK(f2.parse("id") == f2.identity());
    CounterRng rng = CounterRng::stream(18, "render", 0);
    for (int i = 0; i < 300; ++i) {
        GroupElement g = random_word(f2, rng, 15);
        CHECK(f2.parse(f2.render(g)) == g);
    }
    CHECK_THROWS_AS(f2.parse("a!b"), std::invalid_argument);
    CHECK_THROWS_AS(f2.parse("axe"), std::invalid_argument); // 'x' out of range
}

TEST_CASE("malformed elements are rejected") {
    auto f2 = GroupBackend::free_group(2);
    GroupElement bad;
    bad.letters.push_back(Gen{7, +1});
    CHECK_THROWS_AS(f2.multiply(bad, f2.identity()), std::invalid_argument);
}

TEST_CASE("backend classification") {
    CHECK(GroupBackend::free_group(2).is_tree());
    CHECK(GroupBackend::free_group(2).nonamenable());
    CHECK(GroupBackend::free_product_of_cyclics({2, 2, 2}).is_tree());
    CHECK(GroupBackend::free_product_of_cyclics({2, 2, 2}).nonamenable());
    CHECK_FALSE(GroupBackend::free_product_of_cyclics({3, 3}).is_tree());
    CHECK(GroupBackend::free_product_of_cyclics({3, 3}).nonamenable());
    CHECK_FALSE(GroupBackend::free_product_of_cyclics({2, 2}).nonamenable());
    CHECK(GroupBackend::integer_line().is_tree());
    CHECK_FALSE(GroupBackend::integer_line().nonamenable());
    CHECK(GroupBackend::free_group(2).standard_generators().size() == 4);
    CHECK(GroupBackend::free_product_of_cyclics({2, 2, 2}).standard_generators().size() == 3);
}
