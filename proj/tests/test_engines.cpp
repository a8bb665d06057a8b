#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "linkcert/certificate.hpp"
#include "linkcert/chain.hpp"
#include "linkcert/engines.hpp"
#include "linkcert/geometry.hpp"
#include "linkcert/rng.hpp"

using namespace linkcert;

namespace {

RationalPoint pt(long x, long y, long z) {
    RationalPoint p;
    p.emplace_back(x);
    p.emplace_back(y);
    p.emplace_back(z);
    return p;
}

bool disjoint_spans(const SphereWitness& a, const SphereWitness& b) {
    auto va = a.chain.vertex_set();
    for (VertexId v : b.chain.vertex_set())
        if (va.count(v)) return false;
    return true;
}

/// Exhaustive GF(2) search oracle: the best achievable combined row weight.
std::size_t brute_best_weight(const Gf2Matrix& M) {
    const std::size_t B = M.dim();
    std::size_t best = 0;
    for (std::uint32_t mask = 1; mask < (1u << B); ++mask) {
        std::vector<std::uint64_t> acc(M.words(), 0);
        for (std::size_t i = 0; i < B; ++i)
            if (mask & (1u << i)) M.xor_row_into(i, acc);
        best = std::max(best, Gf2Matrix::weight(acc));
    }
    return best;
}

} // namespace

TEST_CASE("vertex budgets match their closed forms") {
    REQUIRE(block_vertex_count(1, 1) == 6);
    REQUIRE(block_vertex_count(1, 2) == 21);
    REQUIRE(block_vertex_count(2, 1) == 8);
    REQUIRE(block_vertex_count(3, 1) == 10);

    REQUIRE(stacked_id_count(1, 1) == 3);
    REQUIRE(stacked_id_count(1, 2) == 4);
    REQUIRE(stacked_id_count(2, 5) == 6);

    REQUIRE(chain_vertex_bound(1, 3) == 12);
    REQUIRE(chain_vertex_bound(2, 3) == 16);
    REQUIRE(necklace_vertex_bound(1, 3) == 18);

    REQUIRE(keyring_vertex_bound(1, 1) == 28);
    REQUIRE(keyring_vertex_bound(1, 2) == 112);
    REQUIRE(keyring_vertex_bound(1, 3) == 252);

    REQUIRE(amplify_vertex_bound(1, 2) == 257);
    REQUIRE(modp_vertex_bound(1, 2) == 255);
    REQUIRE(modq_vertex_bound(1, 2) == 352);
    REQUIRE(modq_vertex_bound(1, 1) == 28);
    REQUIRE(lemma_vertex_bound(1, 2) == 42);

    REQUIRE(ceil_div_ll(7, 3) == 3);
    REQUIRE(ceil_div_ll(6, 3) == 2);
    REQUIRE(ceil_div_ll(0, 5) == 0);
    REQUIRE_THROWS_AS(ceil_div_ll(1, 0), PreconditionError);

    REQUIRE(ipow_ll(3, 4) == 81);
    REQUIRE(ipow_ll(5, 0) == 1);
    REQUIRE(mod_ll(-3, 5) == 2);
    REQUIRE(mod_ll(13, 5) == 3);
}

TEST_CASE("embedding size guards fire before any construction starts") {
    RationalEmbedding e = random_embedding(1, 5, 16, SplitRng(1));
    REQUIRE_NOTHROW(require_embedding_size(e, 5, "test"));
    REQUIRE_THROWS_AS(require_embedding_size(e, 6, "test"), SizeBoundError);

    RationalEmbedding gappy;
    gappy.n = 1;
    gappy.box = 16;
    gappy.points[0] = pt(0, 0, 0);
    gappy.points[1] = pt(1, 0, 0);
    gappy.points[3] = pt(2, 0, 0);
    REQUIRE_THROWS_AS(require_embedding_size(gappy, 3, "test"), PreconditionError);

    REQUIRE(id_range(4, 3) == std::vector<VertexId>{4, 5, 6});
}

TEST_CASE("primality is decided by trial division") {
    for (long long p : {2, 3, 5, 7, 11, 13, 101}) REQUIRE(is_prime_ll(p));
    for (long long c : {-7, 0, 1, 4, 9, 15, 91}) REQUIRE_FALSE(is_prime_ll(c));
}

TEST_CASE("GF(2) row-subset search reaches every achievable weight") {
    Gf2Matrix m(3);
    m.set(0, 0, 1);
    m.set(0, 2, 1);
    m.set(1, 2, 1);
    REQUIRE(m.get(0, 0) == 1);
    REQUIRE(m.get(0, 1) == 0);
    std::vector<std::uint64_t> acc(m.words(), 0);
    m.xor_row_into(0, acc);
    m.xor_row_into(1, acc);
    REQUIRE(Gf2Matrix::weight(acc) == 1); // columns 2 cancel, column 0 stays

    SplitRng rng(17);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t B = 6;
        Gf2Matrix M(B);
        SplitRng r = rng.child(seed);
        for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < B; ++j) M.set(i, j, static_cast<int>(r.uniform(0, 1)));
        std::size_t best = brute_best_weight(M);
        for (std::size_t target = 1; target <= B; ++target) {
            std::string layer;
            auto subset = find_heavy_row_subset(M, target, rng.child("s").child(seed), &layer);
            if (target <= best) {
                REQUIRE(subset.has_value());
                std::vector<std::uint64_t> sum(M.words(), 0);
                for (std::size_t i : *subset) M.xor_row_into(i, sum);
                REQUIRE(Gf2Matrix::weight(sum) >= target);
                REQUIRE_FALSE(layer.empty());
            } else {
                REQUIRE_FALSE(subset.has_value());
            }
        }
    }
}

TEST_CASE("subsequence sums reach every residue of a prime modulus") {
    SplitRng rng(23);
    for (long long p : {2LL, 3LL, 5LL, 7LL}) {
        for (int trial = 0; trial < 10; ++trial) {
            SplitRng r = rng.child(static_cast<std::uint64_t>(p * 100 + trial));
            std::vector<long long> seq;
            while (static_cast<long long>(seq.size()) < p + 1) {
                long long v = r.uniform(-50, 50);
                if (mod_ll(v, p) != 0) seq.push_back(v);
            }
            REQUIRE(subsequence_residues(seq, p).size() == static_cast<std::size_t>(p));
            for (long long s = 0; s < p; ++s) {
                auto idx = subsequence_sum_mod_p(seq, p, s);
                if (s == 0) REQUIRE(idx.empty());
                long long sum = 0;
                std::size_t prev = 0;
                for (std::size_t k = 0; k < idx.size(); ++k) {
                    REQUIRE(idx[k] < seq.size());
                    if (k > 0) REQUIRE(idx[k] > prev);
                    prev = idx[k];
                    sum += seq[idx[k]];
                }
                REQUIRE(mod_ll(sum, p) == s);
            }
        }
    }

    SECTION("a constant sequence of p-2 terms misses exactly one residue") {
        for (long long p : {3LL, 5LL, 7LL, 11LL, 13LL}) {
            std::vector<long long> seq(static_cast<std::size_t>(p - 2), 1);
            REQUIRE(subsequence_residues(seq, p).size() == static_cast<std::size_t>(p - 1));
        }
    }

    SECTION("ill-posed requests are refused") {
        REQUIRE_THROWS_AS(subsequence_sum_mod_p({1, 2, 3}, 4, 1), PreconditionError);
        REQUIRE_THROWS_AS(subsequence_sum_mod_p({1}, 5, 1), PreconditionError);
        REQUIRE_THROWS_AS(subsequence_sum_mod_p({1, 10, 3, 4}, 5, 1), PreconditionError);
    }
}

TEST_CASE("every small one-dimensional block yields an oddly linked corner pair") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        SplitRng rng(seed);
        RationalEmbedding e = random_embedding(1, 6, 4096, rng.child("embed"));
        BlockComplex blocks(6, 1, 1, id_range(0, 6));
        BaseLinkResult bl = find_base_link(e, blocks, rng.child("build"));

        REQUIRE(bl.table.size() == 10);
        REQUIRE(bl.partition_index < bl.table.size());
        REQUIRE(bl.lk % 2 != 0);
        REQUIRE(bl.lk2 == 1);
        REQUIRE(bl.table[bl.partition_index].lk == bl.lk);
        REQUIRE(disjoint_spans(bl.first.sphere, bl.second.sphere));
        REQUIRE(check_sphere(bl.first.sphere.chain).ok);
        REQUIRE(check_sphere(bl.second.sphere.chain).ok);

        long long again = linking_number(e, bl.first.sphere.chain, bl.second.sphere.chain,
                                         SplitRng(seed).child("recheck"));
        REQUIRE(again == bl.lk);
    }
}

TEST_CASE("the parity merge move links both far components") {
    SplitRng rng(5);
    RationalEmbedding e = random_embedding(1, 12, 4096, rng.child("embed"));
    BaseLinkResult b0 = find_base_link(e, BlockComplex(6, 1, 1, id_range(0, 6)), rng.child(0));
    BaseLinkResult b1 = find_base_link(e, BlockComplex(6, 1, 1, id_range(6, 6)), rng.child(1));

    SphereWitness merged = four_to_three_mod2(e, b0.first.sphere, b0.second.sphere,
                                              b1.first.sphere, b1.second.sphere, rng.child("m"));

    SplitRng check(909);
    REQUIRE(linking_mod2(e, merged.chain, b0.first.sphere.chain, check.child(0)) == 1);
    REQUIRE(linking_mod2(e, merged.chain, b1.second.sphere.chain, check.child(1)) == 1);
    REQUIRE(check_sphere(merged.chain).ok);

    auto allowed = b0.second.sphere.chain.vertex_set();
    for (VertexId v : b1.first.sphere.chain.vertex_set()) allowed.insert(v);
    for (VertexId v : merged.chain.vertex_set()) REQUIRE(allowed.count(v) == 1);
}

TEST_CASE("the parity merge refuses unlinked input pairs") {
    RationalEmbedding e;
    e.n = 1;
    e.box = 8;
    // an unlinked pair (far apart) and an interlocked pair
    e.points[0] = pt(1, 0, 0);
    e.points[1] = pt(-1, 1, 0);
    e.points[2] = pt(-1, -1, 0);
    e.points[3] = pt(100, 100, 100);
    e.points[4] = pt(102, 100, 100);
    e.points[5] = pt(101, 102, 101);
    e.points[6] = pt(201, 0, 0);
    e.points[7] = pt(199, 1, 0);
    e.points[8] = pt(199, -1, 0);
    e.points[9] = pt(200, 0, 1);
    e.points[10] = pt(200, 0, -1);
    e.points[11] = pt(205, 0, 3);

    auto triangle = [](VertexId a, VertexId b, VertexId c) {
        SphereWitness w;
        w.chain = IntegerChain(1);
        w.chain.add_sorted({a, b}, 1);
        w.chain.add_sorted({b, c}, 1);
        w.chain.add_sorted({a, c}, -1);
        w.certify("triangle");
        return w;
    };
    SphereWitness y1 = triangle(0, 1, 2), x1 = triangle(3, 4, 5);
    SphereWitness x2 = triangle(6, 7, 8), y2 = triangle(9, 10, 11);
    REQUIRE(linking_mod2(e, x2.chain, y2.chain, SplitRng(1)) == 1);
    REQUIRE_THROWS_AS(four_to_three_mod2(e, y1, x1, x2, y2, SplitRng(2)), PreconditionError);
}

TEST_CASE("chains of three spheres link consecutively") {
    SplitRng rng(11);
    RationalEmbedding e = random_embedding(1, 12, 4096, rng.child("embed"));
    MultiLinkResult res = build_chain_link(e, 1, 3, rng.child("build"));
    REQUIRE(res.components.size() == 3);

    SplitRng check(777);
    for (std::size_t i = 0; i + 1 < 3; ++i)
        REQUIRE(linking_mod2(e, res.components[i].chain, res.components[i + 1].chain,
                             check.child(i)) == 1);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(check_sphere(res.components[i].chain).ok);
        for (std::size_t j = i + 1; j < 3; ++j)
            REQUIRE(disjoint_spans(res.components[i], res.components[j]));
    }

    RationalEmbedding tiny = random_embedding(1, 11, 4096, SplitRng(1));
    REQUIRE_THROWS_AS(build_chain_link(tiny, 1, 3, SplitRng(1)), SizeBoundError);
    REQUIRE_THROWS_AS(build_chain_link(e, 1, 1, SplitRng(1)), PreconditionError);
}

TEST_CASE("necklaces close the chain into a cycle of odd links") {
    SplitRng rng(13);
    RationalEmbedding e = random_embedding(1, 18, 4096, rng.child("embed"));
    MultiLinkResult res = build_necklace(e, 1, 3, rng.child("build"));
    REQUIRE(res.components.size() == 3);

    SplitRng check(778);
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t j = (i + 1) % 3;
        REQUIRE(linking_mod2(e, res.components[i].chain, res.components[j].chain,
                             check.child(i)) == 1);
        REQUIRE(check_sphere(res.components[i].chain).ok);
        REQUIRE(disjoint_spans(res.components[i], res.components[(i + 1) % 3]));
    }

    REQUIRE_THROWS_AS(build_necklace(e, 1, 2, SplitRng(1)), PreconditionError);
}

TEST_CASE("a keyring ring links at least half of its keys oddly") {
    SplitRng rng(19);
    RationalEmbedding e = random_embedding(1, 28, 4096, rng.child("embed"));
    KeyringResult res = build_keyring_core(e, 1, 2, 1, rng.child("build"));

    REQUIRE(check_sphere(res.ring.chain).ok);
    REQUIRE(res.keys.size() >= 1);
    REQUIRE(res.keys.size() == res.key_indices.size());

    SplitRng check(555);
    for (std::size_t i = 0; i < res.keys.size(); ++i) {
        REQUIRE(linking_mod2(e, res.ring.chain, res.keys[i].sphere.chain, check.child(i)) == 1);
        REQUIRE(disjoint_spans(res.ring, res.keys[i].sphere));
        REQUIRE(check_sphere(res.keys[i].sphere.chain).ok);
    }

    REQUIRE_THROWS_AS(build_keyring_core(e, 1, 3, 1, SplitRng(1)), PreconditionError);
}

TEST_CASE("amplification reaches the requested linking magnitude") {
    SplitRng rng(29);
    RationalEmbedding e = random_embedding(1, static_cast<std::size_t>(amplify_vertex_bound(1, 1)),
                                           4096, rng.child("embed"));
    TwoComponentResult res = amplify_linking(e, 1, 1, rng.child("build"));
    REQUIRE(res.value >= 1);
    REQUIRE(check_sphere(res.ring.chain).ok);
    REQUIRE(check_sphere(res.sphere.chain).ok);
    REQUIRE(disjoint_spans(res.ring, res.sphere));
    long long again = linking_number(e, res.ring.chain, res.sphere.chain, SplitRng(42));
    REQUIRE(again == res.value);
}

TEST_CASE("certificate drivers are deterministic across reruns and worker counts") {
    RunSpec spec;
    spec.n = 1;
    spec.seed = 31;
    spec.box = 4096;

    LinkCertificate a = drive_base_link(spec);
    LinkCertificate b = drive_base_link(spec);
    REQUIRE(a.to_json().dump() == b.to_json().dump());

    RunSpec wide = spec;
    wide.jobs = 4;
    LinkCertificate c = drive_base_link(wide);
    REQUIRE(a.to_json().dump() == c.to_json().dump());

    VerifyReport rep = verify_certificate(a);
    REQUIRE(rep.ok);
}

TEST_CASE("a three-link chain certificate replays end to end") {
    RunSpec spec;
    spec.n = 1;
    spec.N = chain_vertex_bound(1, 3);
    spec.seed = 37;
    LinkCertificate cert = drive_chain(spec, 3);
    REQUIRE(cert.theorem == "chain");
    REQUIRE(cert.components.size() == 3);
    REQUIRE(cert.claims.size() == 2);
    for (const auto& claim : cert.claims) {
        REQUIRE(claim.type == "lk2");
        REQUIRE(claim.value == 1);
    }
    VerifyReport rep = verify_certificate(cert);
    REQUIRE(rep.ok);
    for (const auto& row : rep.claims) REQUIRE(row.ok);
}

TEST_CASE("integral merge certificates carry values above their floor") {
    RunSpec spec;
    spec.n = 1;
    spec.N = lemma_vertex_bound(1, 2);
    spec.box = 4096;

    SECTION("three components, two integral links") {
        spec.seed = 3;
        LinkCertificate cert = drive_lemma_4to3(spec, 2);
        REQUIRE(cert.components.size() == 3);
        REQUIRE(cert.claims.size() == 2);
        long long p = cert.params.at("p").get<long long>();
        REQUIRE(p >= 1);
        REQUIRE(cert.claims[0].value >= 1);
        REQUIRE(cert.claims[1].value >= p);
        REQUIRE(verify_certificate(cert).ok);
    }

    SECTION("two components, one summed integral link") {
        spec.seed = 3;
        LinkCertificate cert = drive_lemma_3to2(spec, 2);
        REQUIRE(cert.components.size() == 2);
        REQUIRE(cert.claims.size() == 1);
        long long p = cert.params.at("p").get<long long>();
        REQUIRE(cert.claims[0].value >= p + 1);
        REQUIRE(verify_certificate(cert).ok);
    }
}
