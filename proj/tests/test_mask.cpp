#include <doctest.h>

#include <cmath>

#include "forge/mask.hpp"
#include "forge/rng.hpp"

using namespace forge;

namespace {

ParameterStore vec_store(std::vector<double> values, std::vector<double> frozen = {}) {
    ParameterStore s;
    s.add("w", Tensor{{values.size()}, std::move(values), {}}, true);
    if (!frozen.empty()) s.add("emb", Tensor{{frozen.size()}, std::move(frozen), {}}, false);
    return s;
}

std::vector<int> mask_bits(const PruningMask& m) {
    std::vector<int> out;
    for (std::size_t e = 0; e < m.num_entries(); ++e)
        for (std::size_t i = 0; i < m.bits(e).nbits; ++i) out.push_back(m.bits(e).test(i) ? 1 : 0);
    return out;
}

PruningMask mask_from_bits(const ParameterStore& s, std::vector<int> bits, const std::string& owner) {
    PruningMask m = PruningMask::all_ones(s, owner);
    std::size_t k = 0;
    for (std::size_t e = 0; e < m.num_entries(); ++e)
        for (std::size_t i = 0; i < m.bits(e).nbits; ++i, ++k)
            if (!bits[k]) m.bits(e).clear(i);
    return m;
}

}  // namespace

TEST_CASE("global magnitude prune removes the smallest magnitudes among survivors") {
    auto s = vec_store({0.5, -0.1, 0.3, -0.9});
    auto m = PruningMask::all_ones(s, "t");
    auto m1 = global_magnitude_prune(s, m, 0.5);
    CHECK(mask_bits(m1) == std::vector<int>{1, 0, 0, 1});
    // second round prunes p of the survivors (0.5 here)
    auto m2 = global_magnitude_prune(s, m1, 0.5);
    CHECK(mask_bits(m2) == std::vector<int>{0, 0, 0, 1});
}

TEST_CASE("magnitude ties are pruned in flat-index order") {
    auto s = vec_store({0.2, -0.2, 0.2, 0.2});
    auto m = global_magnitude_prune(s, PruningMask::all_ones(s, "t"), 0.5);
    CHECK(mask_bits(m) == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("prune argument validation") {
    auto s = vec_store({1.0, 2.0});
    auto m = PruningMask::all_ones(s, "t");
    CHECK_THROWS_AS(global_magnitude_prune(s, m, 0.0), ConfigError);
    CHECK_THROWS_AS(global_magnitude_prune(s, m, 1.0), ConfigError);
    auto none_left = mask_from_bits(s, {0, 0}, "t");
    CHECK_THROWS_AS(global_magnitude_prune(s, none_left, 0.5), ShapeError);
}

TEST_CASE("expected sparsity follows 1-(1-p)^Q") {
    CHECK(expected_sparsity(0.2, 2) == doctest::Approx(0.36).epsilon(1e-12));
    CHECK(expected_sparsity(0.2, 5) == doctest::Approx(0.67232).epsilon(1e-12));
    CHECK(expected_sparsity(0.3, 0) == 0.0);
}

TEST_CASE("floor recurrence stays within Q of the closed form") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 100 + rng.next_below(100000);
        const double p = 0.05 + 0.9 * rng.next_double();
        const int q = int(rng.next_below(8));
        const double closed = double(n) * std::pow(1.0 - p, q);
        const double recur = double(floor_recurrence_survivors(n, p, q));
        CHECK(std::fabs(recur - closed) <= double(q) + 1e-9);
    }
}

TEST_CASE("iterated pruning matches the floor recurrence and stays monotone") {
    Rng rng(5);
    std::vector<double> vals(997);
    for (double& v : vals) v = rng.next_gaussian();
    auto s = vec_store(vals);
    auto m = PruningMask::all_ones(s, "t");
    const double p = 0.2;
    for (int round = 1; round <= 5; ++round) {
        auto next = global_magnitude_prune(s, m, p);
        CHECK(next.surviving() == floor_recurrence_survivors(vals.size(), p, round));
        // monotone: no bit returns to 1
        for (std::size_t e = 0; e < m.num_entries(); ++e)
            for (std::size_t w = 0; w < m.bits(e).words.size(); ++w)
                CHECK((next.bits(e).words[w] & ~m.bits(e).words[w]) == 0);
        m = next;
    }
}

TEST_CASE("apply_mask zeroes prunable scalars and passes the rest through") {
    auto s = vec_store({2.0, -3.0}, {7.0});
    auto all = PruningMask::all_ones(s, "t");
    CHECK(apply_mask(s, all).same_values(s));

    auto m = mask_from_bits(s, {0, 1}, "t");
    auto eff = apply_mask(s, m);
    CHECK(eff.tensor("w").values == std::vector<double>{0.0, -3.0});
    CHECK(eff.tensor("emb").values == std::vector<double>{7.0});
    CHECK(s.tensor("w").values == std::vector<double>{2.0, -3.0});  // input untouched

    auto none = mask_from_bits(s, {0, 0}, "t");
    auto zeroed = apply_mask(s, none);
    CHECK(zeroed.tensor("w").values == std::vector<double>{0.0, 0.0});
    CHECK(zeroed.tensor("emb").values == std::vector<double>{7.0});

    // idempotent
    CHECK(apply_mask(eff, m).same_values(eff));
}

TEST_CASE("mask_gradients zeroes masked coordinates only") {
    auto s = vec_store({1.0, 1.0});
    auto m = mask_from_bits(s, {0, 1}, "t");
    Gradients g = Gradients::zeros_like(s);
    g.by_entry[0] = {5.0, 7.0};
    mask_gradients(g, s, m);
    CHECK(g.by_entry[0] == std::vector<double>{0.0, 7.0});
    mask_gradients(g, s, m);  // idempotent
    CHECK(g.by_entry[0] == std::vector<double>{0.0, 7.0});
}

TEST_CASE("overlap is the jaccard ratio, with a hand-checked case") {
    auto s = vec_store({1, 2, 3, 4});
    auto mi = mask_from_bits(s, {1, 1, 0, 0}, "i");
    auto mj = mask_from_bits(s, {0, 1, 1, 0}, "j");
    CHECK(overlap(mi, mj) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(overlap(mi, mi) == 1.0);
    auto mk = mask_from_bits(s, {0, 0, 1, 1}, "k");
    CHECK(overlap(mi, mk) == 0.0);
    auto empty_a = mask_from_bits(s, {0, 0, 0, 0}, "a");
    auto empty_b = mask_from_bits(s, {0, 0, 0, 0}, "b");
    CHECK_THROWS_AS(overlap(empty_a, empty_b), ShapeError);
}

TEST_CASE("overlap matrix over random masks is symmetric with unit diagonal") {
    Rng rng(31);
    std::vector<double> vals(200);
    for (double& v : vals) v = rng.next_gaussian();
    auto s = vec_store(vals);
    MaskSet set;
    for (int t = 0; t < 4; ++t) {
        std::vector<int> bits(vals.size());
        for (auto& b : bits) b = rng.next_double() < 0.6 ? 1 : 0;
        bits[0] = 1;
        set.masks.push_back(mask_from_bits(s, bits, "t" + std::to_string(t)));
    }
    for (std::size_t i = 0; i < set.masks.size(); ++i)
        for (std::size_t j = 0; j < set.masks.size(); ++j) {
            const double v = overlap(set.masks[i], set.masks[j]);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v == overlap(set.masks[j], set.masks[i]));
            if (i == j) CHECK(v == 1.0);
        }
}

TEST_CASE("param percent accounting") {
    // 100 prunable scalars, no non-prunable entries
    std::vector<double> vals(100, 1.0);
    auto s = vec_store(vals);

    std::vector<int> bits64(100, 0);
    for (int i = 0; i < 64; ++i) bits64[size_t(i)] = 1;
    auto m = mask_from_bits(s, bits64, "a");
    CHECK(param_percent_one(s, m) == doctest::Approx(64.0).epsilon(1e-12));

    // three pairwise-disjoint masks, 10% each
    MaskSet disjoint;
    for (int t = 0; t < 3; ++t) {
        std::vector<int> bits(100, 0);
        for (int i = 0; i < 10; ++i) bits[size_t(t * 10 + i)] = 1;
        disjoint.masks.push_back(mask_from_bits(s, bits, "t" + std::to_string(t)));
    }
    CHECK(param_percent(s, disjoint, ParamPercentMode::AllMultiTask) == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(param_percent(s, disjoint, ParamPercentMode::AllSingleTask) == doctest::Approx(30.0).epsilon(1e-12));

    // single-task accounting is the sum of the per-task "one" values
    MaskSet same;
    std::vector<int> bits641(1000, 0);
    ParameterStore s1000 = vec_store(std::vector<double>(1000, 1.0));
    for (int i = 0; i < 641; ++i) bits641[size_t(i)] = 1;
    for (int t = 0; t < 3; ++t) same.masks.push_back(mask_from_bits(s1000, bits641, "t" + std::to_string(t)));
    CHECK(param_percent(s1000, same, ParamPercentMode::AllSingleTask) == doctest::Approx(192.3).epsilon(1e-12));
    CHECK(param_percent(s1000, same, ParamPercentMode::AllMultiTask) <= 100.0);
}

TEST_CASE("multitask all never exceeds min(100, sum of ones)") {
    Rng rng(77);
    auto s = vec_store(std::vector<double>(300, 1.0));
    MaskSet set;
    double sum_one = 0.0;
    for (int t = 0; t < 3; ++t) {
        std::vector<int> bits(300);
        for (auto& b : bits) b = rng.next_double() < 0.5 ? 1 : 0;
        set.masks.push_back(mask_from_bits(s, bits, "t" + std::to_string(t)));
        sum_one += param_percent_one(s, set.masks.back());
    }
    const double all = param_percent(s, set, ParamPercentMode::AllMultiTask);
    CHECK(all <= std::min(100.0, sum_one) + 1e-9);
}

TEST_CASE("unknown param-percent mode string is rejected") {
    CHECK_THROWS_AS(param_percent_mode_from_string("bogus"), ConfigError);
    CHECK(param_percent_mode_from_string("one") == ParamPercentMode::One);
    CHECK(param_percent_mode_from_string("all-multitask") == ParamPercentMode::AllMultiTask);
    CHECK(param_percent_mode_from_string("all-singletask") == ParamPercentMode::AllSingleTask);
}
