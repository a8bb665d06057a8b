#ifndef LINKCERT_ENGINES_HPP
#define LINKCERT_ENGINES_HPP

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "linkcert/certificate.hpp"
#include "linkcert/chain.hpp"
#include "linkcert/errors.hpp"
#include "linkcert/geometry.hpp"
#include "linkcert/parallel.hpp"
#include "linkcert/rng.hpp"
#include "linkcert/surgery.hpp"
#include "linkcert/triangulation.hpp"

namespace linkcert {

// ---------------------------------------------------------------------------
// Vertex-count bounds. Each construction consumes a fixed prefix of the
// embedding's vertex ids; these formulas say how many ids it needs.
// ---------------------------------------------------------------------------

inline long long ceil_div_ll(long long a, long long b) {
    require(b >= 1 && a >= 0, "ceil_div_ll: nonnegative over positive required");
    return (a + b - 1) / b;
}

inline long long ipow_ll(long long base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

inline long long mod_ll(long long a, long long m) { return ((a % m) + m) % m; }

/// Vertices of one side-ell block on 2n+4 corners.
inline long long block_vertex_count(int n, int ell) {
    return static_cast<long long>(vertex_count_formula(n, ell).get_si());
}

/// Ids consumed by sphere_with_k_simplices(n, k, .): n + ceil(k/n) + 1.
inline long long stacked_id_count(int n, long long k) {
    return n + ceil_div_ll(k, static_cast<long long>(n)) + 1;
}

inline long long chain_vertex_bound(int n, long long r) { return (2LL * n + 4) * (r - 1); }
inline long long necklace_vertex_bound(int n, long long r) { return (2LL * n + 4) * r; }
inline long long keyring_core_vertex_bound(int n, long long m, int ell) {
    return m * m * block_vertex_count(n, ell) + stacked_id_count(n, m * m - 2);
}
inline long long keyring_vertex_bound(int n, long long r) {
    return keyring_core_vertex_bound(n, 2 * r, 1);
}
inline long long amplify_vertex_bound(int n, long long lambda) {
    return keyring_vertex_bound(n, 2 * lambda - 1) + stacked_id_count(n, 2 * lambda - 1);
}
inline long long modp_vertex_bound(int n, long long p) {
    return keyring_vertex_bound(n, 2 * p - 1) + stacked_id_count(n, 2 * p - 3);
}
inline long long modq_vertex_bound(int n, long long q) {
    return keyring_core_vertex_bound(n, 2 * q, static_cast<int>(q));
}
/// Two disjoint side-ell blocks, as used by the surgery lemmas.
inline long long lemma_vertex_bound(int n, int ell) { return 2 * block_vertex_count(n, ell); }

/// The construction will address vertex ids [0, needed); fail loudly if the
/// embedding cannot supply them.
inline void require_embedding_size(const RationalEmbedding& e, long long needed,
                                   const std::string& what) {
    if (static_cast<long long>(e.points.size()) < needed)
        throw SizeBoundError(what + ": needs at least " + std::to_string(needed) +
                             " embedded vertices, have " + std::to_string(e.points.size()));
    for (long long v = 0; v < needed; ++v)
        if (!e.points.count(static_cast<VertexId>(v)))
            throw PreconditionError(what + ": embedding must cover vertex ids 0.." +
                                    std::to_string(needed - 1));
}

inline std::vector<VertexId> id_range(long long first, long long count) {
    std::vector<VertexId> ids(static_cast<std::size_t>(count));
    std::iota(ids.begin(), ids.end(), static_cast<VertexId>(first));
    return ids;
}

// ---------------------------------------------------------------------------
// Base link: scan all corner partitions of one block for an odd pair.
// ---------------------------------------------------------------------------

struct PartitionLink {
    std::vector<int> left, right;
    long long lk = 0;
    int lk2 = 0;
};

struct BaseLinkResult {
    BlockComplex::CornerSphere first, second;
    std::size_t partition_index = 0;
    long long lk = 0;
    int lk2 = 0;
    std::vector<PartitionLink> table;
    json transcript = json::array();
};

/// Evaluate the linking number of the two corner spheres of every partition
/// of the block's corners and return the first partition whose pair links
/// oddly. The parity argument guarantees one exists in every embedding, so
/// absence is a falsification.
inline BaseLinkResult find_base_link(const RationalEmbedding& e, const BlockComplex& blocks,
                                     SplitRng rng, unsigned jobs = 0) {
    auto partitions = blocks.corner_partitions();
    auto table = parallel_map<PartitionLink>(partitions.size(), jobs, [&](std::size_t i) {
        PartitionLink row;
        row.left = partitions[i].first;
        row.right = partitions[i].second;
        auto sl = blocks.sphere_for_corners(row.left);
        auto sr = blocks.sphere_for_corners(row.right);
        row.lk = linking_number(e, sl.sphere.chain, sr.sphere.chain,
                                rng.child("partition").child(static_cast<std::uint64_t>(i)));
        row.lk2 = static_cast<int>(mod_ll(row.lk, 2));
        return row;
    });

    BaseLinkResult out;
    out.table = table;
    json rows = json::array();
    for (const auto& row : table)
        rows.push_back(json{{"left", row.left}, {"right", row.right}, {"lk", row.lk}});
    out.transcript.push_back(json{{"step", "base_link_table"}, {"rows", rows}});

    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].lk2 == 1) {
            out.partition_index = i;
            out.lk = table[i].lk;
            out.lk2 = 1;
            out.first = blocks.sphere_for_corners(table[i].left);
            out.second = blocks.sphere_for_corners(table[i].right);
            out.transcript.push_back(json{{"step", "base_link_pick"},
                                          {"partition", i},
                                          {"left", table[i].left},
                                          {"right", table[i].right},
                                          {"lk", table[i].lk}});
            return out;
        }
    }
    throw FalsificationAlert("find_base_link: no corner partition with odd linking number");
}

// ---------------------------------------------------------------------------
// Parity four-to-three move.
// ---------------------------------------------------------------------------

/// Given parities lk2(X1,Y1) = lk2(X2,Y2) = 1 over six pairwise disjoint
/// components, produce one sphere X supported on X1 ∪ X2's vertices with
/// lk2(X,Y1) = lk2(X,Y2) = 1. The move either returns an input unchanged
/// (when it already links the far component) or pushes X1 onto X2 across a
/// single shared-shape cell and picks the right member of the resulting
/// decomposition, using the identity X1 + X2 + P0 + P1 = 0.
inline SphereWitness four_to_three_mod2(const RationalEmbedding& e, const SphereWitness& y1,
                                        const SphereWitness& x1, const SphereWitness& x2,
                                        const SphereWitness& y2, SplitRng rng) {
    if (linking_mod2(e, x1.chain, y1.chain, rng.child("pre").child(0)) != 1 ||
        linking_mod2(e, x2.chain, y2.chain, rng.child("pre").child(1)) != 1)
        throw PreconditionError("four_to_three_mod2: input pairs must link oddly");

    int s = linking_mod2(e, x1.chain, y2.chain, rng.child("cross").child(0));
    if (s == 1) {
        SphereWitness x = x1;
        x.log(json{{"step", "four_to_three_mod2"}, {"case", "X1 already links Y2"}});
        return x;
    }
    int t = linking_mod2(e, x2.chain, y1.chain, rng.child("cross").child(1));
    if (t == 1) {
        SphereWitness x = x2;
        x.log(json{{"step", "four_to_three_mod2"}, {"case", "X2 already links Y1"}});
        return x;
    }

    // push X1 onto X2 across one cell of each
    const auto& [c1, e1] = *x1.chain.terms().begin();
    const auto& [c2, e2] = *x2.chain.terms().begin();
    VertexMap phi = reversing_cell_iso(c1, e1, c2, e2);
    PrismFamily fam = prism_spheres(x1, {c1}, x2, phi);
    const SphereWitness& p1 = fam.prisms[0];
    const SphereWitness& p0 = fam.complement;

    int a1 = linking_mod2(e, p1.chain, y1.chain, rng.child("probe").child(0));
    int b1 = linking_mod2(e, p1.chain, y2.chain, rng.child("probe").child(1));
    int a0 = linking_mod2(e, p0.chain, y1.chain, rng.child("probe").child(2));
    int b0 = linking_mod2(e, p0.chain, y2.chain, rng.child("probe").child(3));
    // X1 + X2 + P0 + P1 = 0 and the cross parities vanish, so each column
    // of probes must sum to the corresponding input parity.
    if ((a0 + a1) % 2 != 1 || (b0 + b1) % 2 != 1)
        throw FalsificationAlert("four_to_three_mod2: probe parities violate the decomposition");

    SphereWitness x;
    std::string picked;
    if (a1 == 1 && b1 == 1) {
        x = p1;
        picked = "P1";
    } else if (a1 == 0 && b1 == 0) {
        x = p0;
        picked = "P0";
    } else if (a1 == 0 && b1 == 1) {
        x = connect_sum(x1, p1);
        picked = "X1#P1";
    } else {
        x = connect_sum(x1, p0);
        picked = "X1#P0";
    }

    if (linking_mod2(e, x.chain, y1.chain, rng.child("post").child(0)) != 1 ||
        linking_mod2(e, x.chain, y2.chain, rng.child("post").child(1)) != 1)
        throw FalsificationAlert("four_to_three_mod2: result does not link both far components");
    {
        auto v1 = x1.chain.vertex_set();
        auto v2 = x2.chain.vertex_set();
        for (VertexId v : x.chain.vertex_set())
            if (!v1.count(v) && !v2.count(v))
                throw FalsificationAlert("four_to_three_mod2: result leaves the X1 ∪ X2 vertex span");
    }
    x.log(json{{"step", "four_to_three_mod2"},
               {"case", picked},
               {"probes", json{{"a1", a1}, {"b1", b1}, {"a0", a0}, {"b0", b0}}}});
    return x;
}

// ---------------------------------------------------------------------------
// Chains and necklaces of odd-linked spheres.
// ---------------------------------------------------------------------------

struct MultiLinkResult {
    std::vector<SphereWitness> components;
    json transcript = json::array();
};

/// r spheres L_1..L_r, consecutive pairs linking oddly, on (2n+4)(r-1)
/// vertices: one block per consecutive pair, merged left to right with the
/// parity four-to-three move.
inline MultiLinkResult build_chain_link(const RationalEmbedding& e, int n, long long r,
                                        SplitRng rng, unsigned jobs = 0) {
    require(r >= 2, "build_chain_link: need r >= 2");
    const long long V = 2LL * n + 4;
    require_embedding_size(e, chain_vertex_bound(n, r), "build_chain_link");

    MultiLinkResult out;
    std::vector<SphereWitness> L;
    std::vector<BaseLinkResult> base;
    for (long long k = 0; k + 1 <= r - 1; ++k) {
        BlockComplex blocks(2 * n + 4, n, 1, id_range(k * V, V));
        base.push_back(find_base_link(e, blocks, rng.child("block").child(static_cast<std::uint64_t>(k)),
                                      jobs));
        out.transcript.push_back(json{{"step", "chain_block"},
                                      {"block", k},
                                      {"partition", base.back().partition_index},
                                      {"lk", base.back().lk}});
    }
    L.push_back(base[0].first.sphere);
    L.push_back(base[0].second.sphere);
    for (long long k = 1; k <= r - 2; ++k) {
        auto ku = static_cast<std::size_t>(k);
        SphereWitness merged =
            four_to_three_mod2(e, L[ku - 1], L[ku], base[ku].first.sphere, base[ku].second.sphere,
                               rng.child("merge").child(static_cast<std::uint64_t>(k)));
        out.transcript.push_back(json{{"step", "chain_merge"}, {"position", k}});
        L[ku] = std::move(merged);
        L.push_back(base[ku].second.sphere);
    }
    out.components = std::move(L);
    return out;
}

/// r spheres with cyclically consecutive odd linking, r >= 3: build an
/// (r+1)-chain on r blocks, then close it with one more four-to-three move
/// between the two ends.
inline MultiLinkResult build_necklace(const RationalEmbedding& e, int n, long long r, SplitRng rng,
                                      unsigned jobs = 0) {
    require(r >= 3, "build_necklace: need r >= 3");
    require_embedding_size(e, necklace_vertex_bound(n, r), "build_necklace");

    MultiLinkResult chain = build_chain_link(e, n, r + 1, rng.child("chain"), jobs);
    auto& C = chain.components; // C[0..r]
    auto ru = static_cast<std::size_t>(r);
    SphereWitness closing =
        four_to_three_mod2(e, C[ru - 1], C[ru], C[0], C[1], rng.child("close"));

    MultiLinkResult out;
    out.transcript = std::move(chain.transcript);
    out.transcript.push_back(json{{"step", "necklace_close"}});
    for (std::size_t i = 1; i <= ru - 1; ++i) out.components.push_back(std::move(C[i]));
    out.components.push_back(std::move(closing));
    return out;
}

// ---------------------------------------------------------------------------
// Keyrings: one ring sphere linking many disjoint key spheres.
// ---------------------------------------------------------------------------

/// Dense GF(2) matrix; row i collects the parities lk2(J_i, X_j).
class Gf2Matrix {
public:
    explicit Gf2Matrix(std::size_t dim)
        : dim_(dim), words_((dim + 63) / 64), bits_(dim * words_, 0) {}

    std::size_t dim() const { return dim_; }
    std::size_t words() const { return words_; }

    void set(std::size_t i, std::size_t j, int v) {
        std::uint64_t mask = 1ULL << (j % 64);
        if (v)
            bits_[i * words_ + j / 64] |= mask;
        else
            bits_[i * words_ + j / 64] &= ~mask;
    }
    int get(std::size_t i, std::size_t j) const {
        return (bits_[i * words_ + j / 64] >> (j % 64)) & 1ULL ? 1 : 0;
    }
    void xor_row_into(std::size_t i, std::vector<std::uint64_t>& acc) const {
        for (std::size_t w = 0; w < words_; ++w) acc[w] ^= bits_[i * words_ + w];
    }
    static std::size_t weight(const std::vector<std::uint64_t>& acc) {
        std::size_t s = 0;
        for (std::uint64_t w : acc) s += static_cast<std::size_t>(std::popcount(w));
        return s;
    }

private:
    std::size_t dim_, words_;
    std::vector<std::uint64_t> bits_;
};

/// Layered search for a set of rows whose GF(2) sum has weight >= target:
/// single rows, greedy accumulation, seeded random subsets, then exhaustive
/// subsets of size <= 6 under a global combination budget. The caller
/// verifies the outcome; this routine only proposes.
inline std::optional<std::vector<std::size_t>> find_heavy_row_subset(const Gf2Matrix& M,
                                                                     std::size_t target,
                                                                     SplitRng rng,
                                                                     std::string* layer = nullptr) {
    const std::size_t B = M.dim();
    std::vector<std::uint64_t> acc(M.words(), 0);

    auto weight_of = [&](const std::vector<std::size_t>& subset) {
        std::fill(acc.begin(), acc.end(), 0);
        for (std::size_t i : subset) M.xor_row_into(i, acc);
        return Gf2Matrix::weight(acc);
    };

    for (std::size_t i = 0; i < B; ++i)
        if (weight_of({i}) >= target) {
            if (layer) *layer = "single-row";
            return std::vector<std::size_t>{i};
        }

    {
        std::vector<std::size_t> picked;
        std::vector<bool> used(B, false);
        std::vector<std::uint64_t> cur(M.words(), 0), trial(M.words(), 0);
        std::size_t curw = 0;
        for (std::size_t step = 0; step < B; ++step) {
            std::size_t best = B;
            std::size_t bestw = curw;
            for (std::size_t i = 0; i < B; ++i) {
                if (used[i]) continue;
                trial = cur;
                M.xor_row_into(i, trial);
                std::size_t w = Gf2Matrix::weight(trial);
                if (w > bestw) {
                    bestw = w;
                    best = i;
                }
            }
            if (best == B) break;
            used[best] = true;
            picked.push_back(best);
            M.xor_row_into(best, cur);
            curw = bestw;
            if (curw >= target) {
                std::sort(picked.begin(), picked.end());
                if (layer) *layer = "greedy";
                return picked;
            }
        }
    }

    for (std::uint64_t attempt = 0; attempt < 512; ++attempt) {
        SplitRng r = rng.child("random").child(attempt);
        std::vector<std::size_t> subset;
        for (std::size_t i = 0; i < B; ++i)
            if (r.child(static_cast<std::uint64_t>(i)).uniform(0, 1) == 1) subset.push_back(i);
        if (!subset.empty() && weight_of(subset) >= target) {
            if (layer) *layer = "random";
            return subset;
        }
    }

    long long budget = 200000;
    for (std::size_t size = 1; size <= std::min<std::size_t>(6, B); ++size) {
        std::vector<std::size_t> idx(size);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            if (--budget < 0) return std::nullopt;
            if (weight_of(idx) >= target) {
                if (layer) *layer = "exhaustive";
                return idx;
            }
            // advance to the next combination
            std::size_t k = size;
            while (k > 0 && idx[k - 1] == B - size + (k - 1)) --k;
            if (k == 0) break;
            ++idx[k - 1];
            for (std::size_t j = k; j < size; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return std::nullopt;
}

struct KeyringResult {
    SphereWitness ring;
    std::vector<BlockComplex::CornerSphere> keys; ///< the keys the ring links, ascending index
    std::vector<std::size_t> key_indices;         ///< their block indices
    json transcript = json::array();
};

/// Core keyring construction over m^2 blocks of side ell: per-block base
/// links (J_i, X_i), a stacked hub joined to every J_i by a prism tube, and
/// if the resulting sphere links fewer than m/2 of the X_j, a GF(2)
/// row-subset correction by connected sums with chosen J_i. Guarantees at
/// least m/2 keys.
inline KeyringResult build_keyring_core(const RationalEmbedding& e, int n, long long m, int ell,
                                        SplitRng rng, unsigned jobs = 0) {
    require(m >= 2 && m % 2 == 0, "build_keyring_core: m must be even and >= 2");
    const long long B = m * m;
    const long long Vb = block_vertex_count(n, ell);
    require_embedding_size(e, keyring_core_vertex_bound(n, m, ell), "build_keyring");

    struct BlockOut {
        SphereWitness J;
        BlockComplex::CornerSphere X;
        std::size_t partition;
    };
    auto blocks_out = parallel_map<BlockOut>(static_cast<std::size_t>(B), jobs, [&](std::size_t i) {
        BlockComplex blocks(2 * n + 4, n, ell, id_range(static_cast<long long>(i) * Vb, Vb));
        BaseLinkResult bl =
            find_base_link(e, blocks, rng.child("block").child(static_cast<std::uint64_t>(i)), 1);
        return BlockOut{std::move(bl.first.sphere), std::move(bl.second), bl.partition_index};
    });

    KeyringResult out;
    {
        json parts = json::array();
        for (const auto& b : blocks_out) parts.push_back(b.partition);
        out.transcript.push_back(
            json{{"step", "keyring_blocks"}, {"count", B}, {"partitions", parts}});
    }

    SphereWitness hub = sphere_with_k_simplices(n, static_cast<int>(B - 2),
                                                id_range(B * Vb, stacked_id_count(n, B - 2)));
    std::vector<const SphereWitness*> bases;
    bases.reserve(static_cast<std::size_t>(B));
    for (const auto& b : blocks_out) bases.push_back(&b.J);
    ConnectingSphere conn = connecting_sphere(hub, bases);

    auto t = parallel_map<int>(static_cast<std::size_t>(B), jobs, [&](std::size_t j) {
        return linking_mod2(e, conn.sphere.chain, blocks_out[j].X.sphere.chain,
                            rng.child("t").child(static_cast<std::uint64_t>(j)));
    });
    long long tones = std::count(t.begin(), t.end(), 1);
    out.transcript.push_back(json{{"step", "keyring_connector"}, {"parities", t}});

    std::vector<int> final_parity;
    if (tones >= m / 2) {
        out.ring = conn.sphere;
        final_parity = t;
        out.transcript.push_back(json{{"step", "keyring_mode"}, {"mode", "connector"}});
    } else {
        // full parity matrix over (handle, key) pairs
        Gf2Matrix M(static_cast<std::size_t>(B));
        auto entries =
            parallel_map<int>(static_cast<std::size_t>(B * B), jobs, [&](std::size_t k) {
                std::size_t i = k / static_cast<std::size_t>(B);
                std::size_t j = k % static_cast<std::size_t>(B);
                return linking_mod2(e, blocks_out[i].J.chain, blocks_out[j].X.sphere.chain,
                                    rng.child("M").child(static_cast<std::uint64_t>(k)));
            });
        for (std::size_t k = 0; k < entries.size(); ++k)
            M.set(k / static_cast<std::size_t>(B), k % static_cast<std::size_t>(B), entries[k]);
        for (std::size_t i = 0; i < M.dim(); ++i)
            if (M.get(i, i) != 1)
                throw FalsificationAlert("build_keyring: parity matrix diagonal entry is zero");

        std::string layer;
        auto subset = find_heavy_row_subset(M, static_cast<std::size_t>(m), rng.child("search"),
                                            &layer);
        if (!subset)
            throw DegeneracyError("build_keyring: row-subset search budget exhausted");

        SphereWitness Z = conn.sphere;
        for (std::size_t i : *subset) Z = connect_sum(Z, blocks_out[i].J);

        auto u = parallel_map<int>(static_cast<std::size_t>(B), jobs, [&](std::size_t j) {
            return linking_mod2(e, Z.chain, blocks_out[j].X.sphere.chain,
                                rng.child("u").child(static_cast<std::uint64_t>(j)));
        });
        // bilinearity oracle: the corrected parities must equal t + column sums
        for (std::size_t j = 0; j < u.size(); ++j) {
            int expect = t[j];
            for (std::size_t i : *subset) expect ^= M.get(i, j);
            if (u[j] != expect)
                throw FalsificationAlert("build_keyring: corrected parity disagrees with the matrix");
        }
        out.ring = std::move(Z);
        final_parity = u;
        out.transcript.push_back(json{{"step", "keyring_mode"},
                                      {"mode", "row-subset"},
                                      {"layer", layer},
                                      {"subset", *subset},
                                      {"parities", u}});
    }

    for (std::size_t j = 0; j < final_parity.size(); ++j)
        if (final_parity[j] == 1) {
            out.key_indices.push_back(j);
            out.keys.push_back(blocks_out[j].X);
        }
    if (static_cast<long long>(out.keys.size()) < m / 2)
        throw FalsificationAlert("build_keyring: fewer than m/2 keys link the ring");
    out.transcript.push_back(json{{"step", "keyring_keys"}, {"indices", out.key_indices}});
    return out;
}

// ---------------------------------------------------------------------------
// Integral amplification and modular targeting.
// ---------------------------------------------------------------------------

struct TwoComponentResult {
    SphereWitness ring;   ///< the fixed component R
    SphereWitness sphere; ///< the constructed component S
    long long value = 0;  ///< lk(R, S), recomputed
    json transcript = json::array();
};

namespace detail_engines {

/// Orient the first `count` keys of a keyring so that lk(ring, key) > 0 and
/// return the positive values. Odd parity guarantees nonzero.
inline std::vector<long long> orient_keys(const RationalEmbedding& e, const SphereWitness& ring,
                                          std::vector<BlockComplex::CornerSphere>& keys,
                                          std::size_t count, SplitRng rng, json& transcript) {
    require(keys.size() >= count, "orient_keys: not enough keys");
    keys.resize(count);
    std::vector<long long> values;
    json flips = json::array();
    for (std::size_t i = 0; i < count; ++i) {
        long long v = linking_number(e, ring.chain, keys[i].sphere.chain,
                                     rng.child("orient").child(static_cast<std::uint64_t>(i)));
        if (v == 0)
            throw FalsificationAlert("orient_keys: key with odd parity has zero linking number");
        if (v < 0) {
            flip_orientation(keys[i].sphere);
            v = -v;
            flips.push_back(i);
        }
        values.push_back(v);
    }
    transcript.push_back(json{{"step", "orient_keys"}, {"flipped", flips}, {"values", values}});
    return values;
}

} // namespace detail_engines

/// A pair (R, S) with |lk(R, S)| >= lambda: keyring with 2λ−1 keys oriented
/// positively, then partial connected sums S_0 ⊂ S_1 ⊂ … whose linking
/// values with R strictly increase; among 2λ distinct integers one has
/// magnitude >= λ.
inline TwoComponentResult amplify_linking(const RationalEmbedding& e, int n, long long lambda,
                                          SplitRng rng, unsigned jobs = 0) {
    require(lambda >= 1, "amplify_linking: need lambda >= 1");
    require_embedding_size(e, amplify_vertex_bound(n, lambda), "amplify_linking");
    const long long kcount = 2 * lambda - 1;

    KeyringResult kr = build_keyring_core(e, n, 2 * kcount, 1, rng.child("keyring"), jobs);
    TwoComponentResult out;
    out.ring = kr.ring;
    out.transcript = std::move(kr.transcript);

    auto values = detail_engines::orient_keys(e, out.ring, kr.keys,
                                              static_cast<std::size_t>(kcount), rng.child("keys"),
                                              out.transcript);
    if (lambda == 1) {
        out.sphere = kr.keys[0].sphere;
        out.value = values[0];
        out.transcript.push_back(json{{"step", "amplify"}, {"case", "single key"}, {"value", out.value}});
        return out;
    }

    SphereWitness aux = sphere_with_k_simplices(
        n, static_cast<int>(kcount),
        id_range(keyring_vertex_bound(n, kcount), stacked_id_count(n, kcount)));
    std::vector<const SphereWitness*> bases;
    for (const auto& k : kr.keys) bases.push_back(&k.sphere);
    ConnectingSphere conn = connecting_sphere(aux, bases);

    SphereWitness S = conn.sphere;
    long long v = linking_number(e, out.ring.chain, S.chain, rng.child("partial").child(0));
    std::vector<long long> seq{v};
    std::size_t used = 0;
    while (std::llabs(v) < lambda && used < static_cast<std::size_t>(kcount)) {
        S = connect_sum(S, kr.keys[used].sphere);
        long long v2 = linking_number(e, out.ring.chain, S.chain,
                                      rng.child("partial").child(static_cast<std::uint64_t>(used + 1)));
        if (v2 <= v)
            throw FalsificationAlert("amplify_linking: partial sums are not strictly increasing");
        if (v2 - v != values[used])
            throw FalsificationAlert("amplify_linking: partial sum increment mismatch");
        v = v2;
        seq.push_back(v);
        ++used;
    }
    out.transcript.push_back(json{{"step", "amplify_partial_sums"}, {"values", seq}});
    if (std::llabs(v) < lambda)
        throw FalsificationAlert(
            "amplify_linking: no partial sum reached the target magnitude despite 2λ distinct values");
    out.sphere = std::move(S);
    out.value = v;
    return out;
}

inline bool is_prime_ll(long long p) {
    if (p < 2) return false;
    for (long long d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

/// All residues realizable as subsequence sums of seq modulo p (0 included
/// via the empty subsequence).
inline std::set<long long> subsequence_residues(const std::vector<long long>& seq, long long p) {
    std::set<long long> reach{0};
    for (long long x : seq) {
        std::set<long long> snapshot = reach;
        for (long long r : snapshot) reach.insert(mod_ll(r + x, p));
    }
    return reach;
}

/// Indices of a subsequence whose sum is ≡ s (mod p), for a sequence of at
/// least p-1 terms none divisible by the prime p. Each new term extends the
/// set of reachable residues by at least one until all p are reachable, so
/// a witness always exists; the DP keeps the first witness per residue.
inline std::vector<std::size_t> subsequence_sum_mod_p(const std::vector<long long>& seq,
                                                      long long p, long long s) {
    require(is_prime_ll(p), "subsequence_sum_mod_p: modulus must be prime");
    require(static_cast<long long>(seq.size()) >= p - 1,
            "subsequence_sum_mod_p: need at least p-1 terms");
    for (long long x : seq)
        require(mod_ll(x, p) != 0, "subsequence_sum_mod_p: no term may be divisible by p");
    s = mod_ll(s, p);
    if (s == 0) return {};

    std::vector<std::optional<std::vector<std::size_t>>> witness(static_cast<std::size_t>(p));
    witness[0] = std::vector<std::size_t>{};
    for (std::size_t idx = 0; idx < seq.size(); ++idx) {
        std::vector<std::pair<std::size_t, std::vector<std::size_t>>> additions;
        for (long long r = 0; r < p; ++r) {
            auto& w = witness[static_cast<std::size_t>(r)];
            if (!w) continue;
            auto nr = static_cast<std::size_t>(mod_ll(r + seq[idx], p));
            if (!witness[nr]) {
                auto ext = *w;
                ext.push_back(idx);
                additions.emplace_back(nr, std::move(ext));
            }
        }
        for (auto& [nr, ext] : additions)
            if (!witness[nr]) witness[nr] = std::move(ext);
        if (witness[static_cast<std::size_t>(s)]) return *witness[static_cast<std::size_t>(s)];
    }
    throw FalsificationAlert(
        "subsequence_sum_mod_p: residue unreachable despite the length guarantee");
}

/// A pair (R, S) with lk(R, S) a nonzero multiple of the prime p: keyring
/// with 2p−1 positively oriented keys, early exit when a single key already
/// has lk divisible by p, otherwise two candidate connected sums S1 ⊂ S2
/// whose values differ by a positive amount, both ≡ 0 (mod p), so at least
/// one is nonzero.
inline TwoComponentResult build_modp_link(const RationalEmbedding& e, int n, long long p,
                                          SplitRng rng, unsigned jobs = 0) {
    if (!is_prime_ll(p))
        throw PreconditionError("build_modp_link: p must be a prime >= 2");
    require_embedding_size(e, modp_vertex_bound(n, p), "build_modp_link");
    const long long kcount = 2 * p - 1;

    KeyringResult kr = build_keyring_core(e, n, 2 * kcount, 1, rng.child("keyring"), jobs);
    TwoComponentResult out;
    out.ring = kr.ring;
    out.transcript = std::move(kr.transcript);
    auto values = detail_engines::orient_keys(e, out.ring, kr.keys,
                                              static_cast<std::size_t>(kcount), rng.child("keys"),
                                              out.transcript);

    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] % p == 0) {
            out.sphere = kr.keys[i].sphere;
            out.value = values[i];
            out.transcript.push_back(
                json{{"step", "modp"}, {"case", "single key"}, {"key", i}, {"value", out.value}});
            return out;
        }

    SphereWitness aux = sphere_with_k_simplices(
        n, static_cast<int>(2 * p - 3),
        id_range(keyring_vertex_bound(n, kcount), stacked_id_count(n, 2 * p - 3)));
    std::vector<const SphereWitness*> bases;
    for (const auto& k : kr.keys) bases.push_back(&k.sphere);
    ConnectingSphere conn = connecting_sphere(aux, bases);

    SphereWitness S1 = conn.sphere;
    long long s0 = linking_number(e, out.ring.chain, S1.chain, rng.child("s0"));

    std::vector<long long> first_part(values.begin(), values.begin() + (p - 1));
    auto A = subsequence_sum_mod_p(first_part, p, mod_ll(-s0, p));
    long long expect1 = s0;
    for (std::size_t idx : A) {
        S1 = connect_sum(S1, kr.keys[idx].sphere);
        expect1 += values[idx];
    }
    long long val1 = linking_number(e, out.ring.chain, S1.chain, rng.child("val1"));
    if (val1 != expect1)
        throw FalsificationAlert("build_modp_link: first candidate value disagrees with its parts");
    if (mod_ll(val1, p) != 0)
        throw FalsificationAlert("build_modp_link: first candidate not divisible by p");
    out.transcript.push_back(json{{"step", "modp_candidates"},
                                  {"s0", s0},
                                  {"A", A},
                                  {"val1", val1}});
    if (val1 != 0) {
        out.sphere = std::move(S1);
        out.value = val1;
        return out;
    }

    std::vector<long long> second_part(values.begin() + p, values.end()); // p-1 terms
    auto Braw = subsequence_sum_mod_p(second_part, p, mod_ll(-values[static_cast<std::size_t>(p - 1)], p));
    std::vector<std::size_t> C{static_cast<std::size_t>(p - 1)};
    for (std::size_t idx : Braw) C.push_back(static_cast<std::size_t>(p) + idx);
    std::sort(C.begin(), C.end());

    SphereWitness S2 = S1;
    long long expect2 = val1;
    for (std::size_t idx : C) {
        S2 = connect_sum(S2, kr.keys[idx].sphere);
        expect2 += values[idx];
    }
    long long val2 = linking_number(e, out.ring.chain, S2.chain, rng.child("val2"));
    if (val2 != expect2)
        throw FalsificationAlert("build_modp_link: second candidate value disagrees with its parts");
    if (mod_ll(val2, p) != 0)
        throw FalsificationAlert("build_modp_link: second candidate not divisible by p");
    if (val2 <= val1)
        throw FalsificationAlert("build_modp_link: candidates must strictly increase");
    if (val2 == 0)
        throw FalsificationAlert("build_modp_link: both candidates vanished");
    out.transcript.back()["C"] = C;
    out.transcript.back()["val2"] = val2;
    out.sphere = std::move(S2);
    out.value = val2;
    return out;
}

/// A pair (R, S) with lk(R, S) a nonzero multiple of q >= 1 (q arbitrary):
/// keyring over side-q blocks, prefix-sum pigeonhole to select keys a..b
/// whose values sum to 0 mod q, then a chain of prism tubes — each chosen by
/// an inner pigeonhole so its own linking value is ≡ 0 (mod q) — joining
/// them into one sphere. A tube with nonzero value is itself a valid
/// answer (early exit).
inline TwoComponentResult build_modq_link(const RationalEmbedding& e, int n, long long q,
                                          SplitRng rng, unsigned jobs = 0) {
    require(q >= 1, "build_modq_link: need q >= 1");
    require_embedding_size(e, modq_vertex_bound(n, q), "build_modq_link");
    const int qi = static_cast<int>(q);

    KeyringResult kr = build_keyring_core(e, n, 2 * q, qi, rng.child("keyring"), jobs);
    TwoComponentResult out;
    out.ring = kr.ring;
    out.transcript = std::move(kr.transcript);
    auto values = detail_engines::orient_keys(e, out.ring, kr.keys, static_cast<std::size_t>(q),
                                              rng.child("keys"), out.transcript);

    if (q == 1) {
        out.sphere = kr.keys[0].sphere;
        out.value = values[0];
        out.transcript.push_back(json{{"step", "modq"}, {"case", "q = 1"}, {"value", out.value}});
        return out;
    }

    // prefix sums mod q: q+1 values in q classes collide
    std::vector<long long> prefix(static_cast<std::size_t>(q) + 1, 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(q); ++i)
        prefix[i + 1] = prefix[i] + values[i];
    long long a = -1, b = -1;
    for (long long bi = 1; bi <= q && a < 0; ++bi)
        for (long long ai = 0; ai < bi; ++ai)
            if (mod_ll(prefix[static_cast<std::size_t>(ai)], q) ==
                mod_ll(prefix[static_cast<std::size_t>(bi)], q)) {
                a = ai + 1; // keys a..b, 1-based
                b = bi;
                break;
            }
    if (a < 0) throw FalsificationAlert("build_modq_link: prefix-sum pigeonhole found no collision");
    out.transcript.push_back(json{{"step", "modq_prefix"},
                                  {"prefix_sums", prefix},
                                  {"a", a},
                                  {"b", b}});

    auto ka = static_cast<std::size_t>(a - 1);
    auto kb = static_cast<std::size_t>(b - 1);
    if (ka == kb) {
        out.sphere = kr.keys[ka].sphere;
        out.value = values[ka];
        if (mod_ll(out.value, q) != 0)
            throw FalsificationAlert("build_modq_link: single selected key not divisible by q");
        out.transcript.push_back(json{{"step", "modq"}, {"case", "single key"}, {"key", ka}});
        return out;
    }

    int in_face = -1;
    SphereWitness S = kr.keys[ka].sphere;
    long long expected = values[ka];
    for (std::size_t i = ka; i < kb; ++i) {
        // pick an outgoing face of key i (distinct from the face its incoming
        // tube used) and an orientation-reversing pairing with a face of key i+1
        int out_face = -1, next_in = -1;
        VertexMap phi;
        for (int f1 = 0; f1 < n + 2 && out_face < 0; ++f1) {
            if (f1 == in_face) continue;
            for (int f2 = 0; f2 < n + 2; ++f2) {
                auto cand = find_face_iso(kr.keys[i].sphere.chain, kr.keys[i].faces[static_cast<std::size_t>(f1)],
                                          kr.keys[i + 1].sphere.chain,
                                          kr.keys[i + 1].faces[static_cast<std::size_t>(f2)], -1);
                if (cand) {
                    out_face = f1;
                    next_in = f2;
                    phi = std::move(*cand);
                    break;
                }
            }
        }
        if (out_face < 0)
            throw PreconditionError("build_modq_link: no orientation-reversing face pairing available");

        const DividedDisc& face = kr.keys[i].faces[static_cast<std::size_t>(out_face)];
        OrderedDisc od = linear_disc(face, qi, rng.child("trace").child(static_cast<std::uint64_t>(i)));
        std::vector<VertexTuple> run_cells;
        for (int k = 0; k < qi; ++k)
            run_cells.push_back(face.cell_tuple(od.cells[static_cast<std::size_t>(k)]));

        PrismFamily fam = prism_spheres(kr.keys[i].sphere, run_cells, kr.keys[i + 1].sphere, phi);
        auto bvals = parallel_map<long long>(static_cast<std::size_t>(q), jobs, [&](std::size_t j) {
            return linking_number(
                e, out.ring.chain, fam.prisms[j].chain,
                rng.child("tube").child(static_cast<std::uint64_t>(i)).child(static_cast<std::uint64_t>(j)));
        });

        // inner pigeonhole over tube prefix sums
        std::vector<long long> tp(static_cast<std::size_t>(q) + 1, 0);
        for (std::size_t j = 0; j < static_cast<std::size_t>(q); ++j) tp[j + 1] = tp[j] + bvals[j];
        long long c = -1, d = -1;
        for (long long di = 1; di <= q && c < 0; ++di)
            for (long long ci = 0; ci < di; ++ci)
                if (mod_ll(tp[static_cast<std::size_t>(ci)], q) ==
                    mod_ll(tp[static_cast<std::size_t>(di)], q)) {
                    c = ci;
                    d = di;
                    break;
                }
        if (c < 0)
            throw FalsificationAlert("build_modq_link: tube pigeonhole found no collision");
        SphereWitness Q = fam.prism_run(static_cast<std::size_t>(c + 1), static_cast<std::size_t>(d));
        long long expect_u = tp[static_cast<std::size_t>(d)] - tp[static_cast<std::size_t>(c)];
        long long u = linking_number(e, out.ring.chain, Q.chain,
                                     rng.child("tubesum").child(static_cast<std::uint64_t>(i)));
        if (u != expect_u)
            throw FalsificationAlert("build_modq_link: tube value disagrees with its prism parts");
        if (mod_ll(u, q) != 0)
            throw FalsificationAlert("build_modq_link: tube value not divisible by q");
        out.transcript.push_back(json{{"step", "modq_join"},
                                      {"keys", json::array({i, i + 1})},
                                      {"out_face", out_face},
                                      {"in_face", next_in},
                                      {"run", od.cells},
                                      {"prism_values", bvals},
                                      {"cut", json::array({c, d})},
                                      {"tube_value", u}});
        if (u != 0) {
            out.sphere = std::move(Q);
            out.value = u;
            out.transcript.push_back(json{{"step", "modq"}, {"case", "tube early exit"}});
            return out;
        }
        S = connect_sum(S, Q);
        S = connect_sum(S, kr.keys[i + 1].sphere);
        expected += values[i + 1];
        in_face = next_in;
    }

    long long val = linking_number(e, out.ring.chain, S.chain, rng.child("final"));
    if (val != expected)
        throw FalsificationAlert("build_modq_link: joined value disagrees with its key parts");
    if (mod_ll(val, q) != 0)
        throw FalsificationAlert("build_modq_link: joined value not divisible by q");
    if (val <= 0)
        throw FalsificationAlert("build_modq_link: joined value must be positive");
    out.transcript.push_back(json{{"step", "modq"}, {"case", "joined"}, {"value", val}});
    out.sphere = std::move(S);
    out.value = val;
    return out;
}

// ---------------------------------------------------------------------------
// Integral surgery lemmas.
// ---------------------------------------------------------------------------

/// A sphere together with one designated divided face inside it, the site
/// where prism surgery may cut or glue.
struct FacedSphere {
    SphereWitness sphere;
    DividedDisc face;
};

namespace detail_engines {

/// The residual divided simplex left inside `target`'s face after the
/// surgery kept index q: the full face when q = 0 (the complement prism was
/// used), otherwise the face shrunk away from the deleted cell phi(disc
/// cell q). Returns nullopt when the face is too small to shrink (side 1).
/// Every cell of the returned disc is verified to lie in `result`.
inline std::optional<DividedDisc> leftover_face(const IntegerChain& result, const FacedSphere& target,
                                                std::size_t q,
                                                const std::vector<VertexTuple>& disc_cells,
                                                const VertexMap& phi, json& entry) {
    if (q == 0) {
        for (std::size_t c = 0; c < target.face.cell_count(); ++c)
            if (result.coefficient(target.face.cell_tuple(static_cast<int>(c))) == 0)
                throw FalsificationAlert("leftover_face: full residual face not contained in result");
        entry["residual_side"] = target.face.ell;
        return target.face;
    }
    VertexTuple image;
    for (VertexId v : disc_cells[q - 1]) image.push_back(phi.at(v));
    std::sort(image.begin(), image.end());
    int deleted = -1;
    for (std::size_t c = 0; c < target.face.cell_count(); ++c)
        if (target.face.cell_tuple(static_cast<int>(c)) == image) {
            deleted = static_cast<int>(c);
            break;
        }
    if (deleted < 0)
        throw FalsificationAlert("leftover_face: image cell missing from the target face");
    if (target.face.ell == 1) {
        entry["residual_side"] = 0;
        return std::nullopt;
    }
    ShrunkSimplex shrunk = shrink_after_delete(*target.face.lattice, deleted);
    DividedDisc child;
    child.n = target.face.n;
    child.ell = target.face.ell - shrunk.offset;
    child.lattice = shrunk.child;
    child.vert_ids.reserve(shrunk.parent_vertex.size());
    for (int pv : shrunk.parent_vertex)
        child.vert_ids.push_back(target.face.vert_ids[static_cast<std::size_t>(pv)]);
    for (std::size_t c = 0; c < child.cell_count(); ++c)
        if (result.coefficient(child.cell_tuple(static_cast<int>(c))) == 0)
            throw FalsificationAlert("leftover_face: residual cell not contained in result");
    entry["residual_side"] = child.ell;
    return child;
}

} // namespace detail_engines

struct IntegralTriple {
    SphereWitness L;
    std::optional<DividedDisc> L_face;
    FacedSphere Z, W;
    std::string z_source, w_source; ///< which input Z and W came from
    long long lk_LZ = 0, lk_LW = 0;
    long long p = 0; ///< the normalized value lk(X2, Y2)
    json transcript = json::array();
};

/// From two positively linked pairs (X1, Y1) and (X2, Y2) with lk(X2,Y2) = p,
/// produce disjoint (L, Z, W) with lk(L,Z) >= 1 and lk(L,W) >= p, L supported
/// on X1 ∪ X2 and carrying a residual divided simplex of side
/// floor(n*ell/(n+1)). Shortcut branches return inputs when a cross pair
/// already links; the main branch pushes X1 onto X2 across their faces and
/// picks a prism index with nonnegative contribution.
inline IntegralTriple four_to_three_integral(const RationalEmbedding& e, FacedSphere x1,
                                             FacedSphere y1, FacedSphere x2, FacedSphere y2,
                                             SplitRng rng, unsigned jobs = 0) {
    const int n = x1.sphere.dim();
    require(x1.face.ell == y1.face.ell && x1.face.ell == x2.face.ell && x1.face.ell == y2.face.ell,
            "four_to_three_integral: all faces must have the same side length");
    const int ell = x1.face.ell;

    long long v11 = linking_number(e, x1.sphere.chain, y1.sphere.chain, rng.child("pre").child(0));
    if (v11 == 0) throw PreconditionError("four_to_three_integral: lk(X1, Y1) must be nonzero");
    if (v11 < 0) {
        flip_orientation(y1.sphere);
        v11 = -v11;
    }
    long long v22 = linking_number(e, x2.sphere.chain, y2.sphere.chain, rng.child("pre").child(1));
    if (v22 == 0) throw PreconditionError("four_to_three_integral: lk(X2, Y2) must be nonzero");
    if (v22 < 0) {
        flip_orientation(y2.sphere);
        v22 = -v22;
    }
    const long long p = v22;
    if (ipow_ll(ell, n) < p)
        throw SizeBoundError("four_to_three_integral: face has " + std::to_string(ipow_ll(ell, n)) +
                             " cells but needs at least p = " + std::to_string(p));

    IntegralTriple out;
    out.p = p;
    out.transcript.push_back(json{{"step", "four_to_three_pre"}, {"v11", v11}, {"p", p}});

    long long s1 = linking_number(e, x2.sphere.chain, y1.sphere.chain, rng.child("cross").child(0));
    if (s1 != 0) {
        out.L = x2.sphere;
        out.L_face = x2.face;
        if (s1 < 0) flip_orientation(y1.sphere);
        out.Z = std::move(y1);
        out.z_source = "Y1";
        out.W = std::move(y2);
        out.w_source = "Y2";
        out.lk_LZ = linking_number(e, out.L.chain, out.Z.sphere.chain, rng.child("final").child(0));
        out.lk_LW = linking_number(e, out.L.chain, out.W.sphere.chain, rng.child("final").child(1));
        if (out.lk_LZ != std::llabs(s1) || out.lk_LW != p)
            throw FalsificationAlert("four_to_three_integral: shortcut values changed on replay");
        out.transcript.push_back(json{{"step", "four_to_three_case"},
                                      {"case", "X2 already links Y1"},
                                      {"lk_LZ", out.lk_LZ},
                                      {"lk_LW", out.lk_LW}});
        return out;
    }
    long long s2 = linking_number(e, x1.sphere.chain, y2.sphere.chain, rng.child("cross").child(1));
    if (s2 != 0) {
        out.L = y2.sphere;
        out.L_face = y2.face;
        long long zval = linking_number(e, out.L.chain, x1.sphere.chain, rng.child("probe").child(0));
        if (zval == 0)
            throw FalsificationAlert("four_to_three_integral: reversed cross value vanished");
        if (zval < 0) flip_orientation(x1.sphere);
        out.Z = std::move(x1);
        out.z_source = "X1";
        long long wval = linking_number(e, out.L.chain, x2.sphere.chain, rng.child("probe").child(1));
        if (std::llabs(wval) != p)
            throw FalsificationAlert("four_to_three_integral: |lk(Y2, X2)| disagrees with |lk(X2, Y2)|");
        if (wval < 0) flip_orientation(x2.sphere);
        out.W = std::move(x2);
        out.w_source = "X2";
        out.lk_LZ = linking_number(e, out.L.chain, out.Z.sphere.chain, rng.child("final").child(0));
        out.lk_LW = linking_number(e, out.L.chain, out.W.sphere.chain, rng.child("final").child(1));
        if (out.lk_LZ < 1 || out.lk_LW != p)
            throw FalsificationAlert("four_to_three_integral: shortcut values changed on replay");
        out.transcript.push_back(json{{"step", "four_to_three_case"},
                                      {"case", "X1 already links Y2"},
                                      {"lk_LZ", out.lk_LZ},
                                      {"lk_LW", out.lk_LW}});
        return out;
    }

    // main branch: push X1 onto X2 across the designated faces
    auto phi = find_face_iso(x1.sphere.chain, x1.face, x2.sphere.chain, x2.face, -1);
    if (!phi) {
        if (find_face_iso(x1.sphere.chain, x1.face, x2.sphere.chain, x2.face, +1)) {
            // reverse X1 (and Y1 with it, preserving lk(X1, Y1)) to flip the
            // pairing character
            flip_orientation(x1.sphere);
            flip_orientation(y1.sphere);
            phi = find_face_iso(x1.sphere.chain, x1.face, x2.sphere.chain, x2.face, -1);
            if (!phi)
                throw FalsificationAlert(
                    "four_to_three_integral: character did not flip with the host orientation");
            out.transcript.push_back(json{{"step", "four_to_three_flip"}, {"flipped", "X1 and Y1"}});
        } else {
            throw PreconditionError(
                "four_to_three_integral: no orientation-reversing face pairing available");
        }
    }

    std::vector<VertexTuple> disc_cells;
    for (std::size_t c = 0; c < x1.face.cell_count(); ++c)
        disc_cells.push_back(x1.face.cell_tuple(static_cast<int>(c)));
    PrismFamily fam = prism_spheres(x1.sphere, disc_cells, x2.sphere, *phi);
    const std::size_t m = fam.prisms.size();

    auto w = parallel_map<long long>(m + 1, jobs, [&](std::size_t i) {
        const IntegerChain& part = i == 0 ? fam.complement.chain : fam.prisms[i - 1].chain;
        return linking_number(e, part, y2.sphere.chain,
                              rng.child("w").child(static_cast<std::uint64_t>(i)));
    });
    long long wsum = 0;
    for (long long wi : w) wsum += wi;
    if (wsum != -p)
        throw FalsificationAlert("four_to_three_integral: prism values do not sum to -p");
    std::size_t qidx = m + 1;
    for (std::size_t i = 0; i <= m; ++i)
        if (w[i] >= 0) {
            qidx = i;
            break;
        }
    if (qidx > m)
        throw FalsificationAlert("four_to_three_integral: no prism with nonnegative value");
    const SphereWitness& Pq = qidx == 0 ? fam.complement : fam.prisms[qidx - 1];

    long long t = linking_number(e, Pq.chain, y1.sphere.chain, rng.child("t"));
    long long expect_lz;
    if (t != 0) {
        out.L = connect_sum(Pq, x2.sphere);
        if (t < 0) flip_orientation(y1.sphere);
        expect_lz = std::llabs(t);
    } else {
        out.L = connect_sum(connect_sum(x1.sphere, Pq), x2.sphere);
        expect_lz = v11;
    }
    out.Z = std::move(y1);
    out.z_source = "Y1";
    out.W = std::move(y2);
    out.w_source = "Y2";

    json face_entry{{"step", "four_to_three_residual"}};
    out.L_face = detail_engines::leftover_face(out.L.chain, x2, qidx, disc_cells, *phi, face_entry);
    out.transcript.push_back(json{{"step", "four_to_three_case"},
                                  {"case", t != 0 ? "Pq#X2" : "X1#Pq#X2"},
                                  {"q", qidx},
                                  {"prism_values", w},
                                  {"t", t}});
    out.transcript.push_back(face_entry);

    out.lk_LZ = linking_number(e, out.L.chain, out.Z.sphere.chain, rng.child("final").child(0));
    out.lk_LW = linking_number(e, out.L.chain, out.W.sphere.chain, rng.child("final").child(1));
    if (out.lk_LZ != expect_lz || out.lk_LW != w[qidx] + p)
        throw FalsificationAlert("four_to_three_integral: final values disagree with the bookkeeping");
    if (out.lk_LZ < 1 || out.lk_LW < p)
        throw FalsificationAlert("four_to_three_integral: final values below the guarantee");
    {
        auto v1 = x1.sphere.chain.vertex_set();
        auto v2 = x2.sphere.chain.vertex_set();
        for (VertexId v : out.L.chain.vertex_set())
            if (!v1.count(v) && !v2.count(v))
                throw FalsificationAlert("four_to_three_integral: L leaves the X1 ∪ X2 vertex span");
    }
    return out;
}

struct IntegralPair {
    SphereWitness J;
    std::optional<DividedDisc> J_face;
    long long lk_LJ = 0;
    json transcript = json::array();
};

/// Merge Z and W — both positively linked with L — into a single sphere J
/// with lk(L, J) >= lk(L,Z) + lk(L,W), by pushing Z onto W across the given
/// orientation-reversing face isomorphism and keeping a prism index with
/// nonnegative contribution.
inline IntegralPair three_to_two_integral(const RationalEmbedding& e, const SphereWitness& L,
                                          const FacedSphere& z, const FacedSphere& w,
                                          const VertexMap& phi_map, SplitRng rng,
                                          unsigned jobs = 0) {
    const int n = L.dim();
    require(z.face.ell == w.face.ell, "three_to_two_integral: faces must have the same side");
    const int ell = z.face.ell;

    long long p1 = linking_number(e, L.chain, z.sphere.chain, rng.child("pre").child(0));
    if (p1 <= 0) throw PreconditionError("three_to_two_integral: lk(L, Z) must be positive");
    long long p2 = linking_number(e, L.chain, w.sphere.chain, rng.child("pre").child(1));
    if (p2 <= 0) throw PreconditionError("three_to_two_integral: lk(L, W) must be positive");
    if (ipow_ll(ell, n) < p1 + p2)
        throw SizeBoundError("three_to_two_integral: face has " + std::to_string(ipow_ll(ell, n)) +
                             " cells but needs at least p1 + p2 = " + std::to_string(p1 + p2));

    std::vector<VertexTuple> disc_cells;
    for (std::size_t c = 0; c < z.face.cell_count(); ++c)
        disc_cells.push_back(z.face.cell_tuple(static_cast<int>(c)));
    DiscIso iso = make_disc_iso(z.sphere.chain, disc_cells, w.sphere.chain, phi_map);
    if (iso.character != -1)
        throw PreconditionError("three_to_two_integral: the face map must be orientation-reversing");
    PrismFamily fam = prism_spheres(z.sphere, disc_cells, w.sphere, phi_map);
    const std::size_t m = fam.prisms.size();

    auto wv = parallel_map<long long>(m + 1, jobs, [&](std::size_t i) {
        const IntegerChain& part = i == 0 ? fam.complement.chain : fam.prisms[i - 1].chain;
        return linking_number(e, L.chain, part, rng.child("w").child(static_cast<std::uint64_t>(i)));
    });
    long long wsum = 0;
    for (long long x : wv) wsum += x;
    if (wsum != -(p1 + p2))
        throw FalsificationAlert("three_to_two_integral: prism values do not sum to -(p1+p2)");
    std::size_t qidx = m + 1;
    for (std::size_t i = 0; i <= m; ++i)
        if (wv[i] >= 0) {
            qidx = i;
            break;
        }
    if (qidx > m)
        throw FalsificationAlert("three_to_two_integral: no prism with nonnegative value");
    const SphereWitness& Pq = qidx == 0 ? fam.complement : fam.prisms[qidx - 1];

    IntegralPair out;
    out.J = connect_sum(connect_sum(z.sphere, Pq), w.sphere);
    json face_entry{{"step", "three_to_two_residual"}};
    out.J_face = detail_engines::leftover_face(out.J.chain, w, qidx, disc_cells, phi_map, face_entry);
    out.lk_LJ = linking_number(e, L.chain, out.J.chain, rng.child("final"));
    if (out.lk_LJ != p1 + wv[qidx] + p2)
        throw FalsificationAlert("three_to_two_integral: final value disagrees with the bookkeeping");
    if (out.lk_LJ < p1 + p2)
        throw FalsificationAlert("three_to_two_integral: final value below the guarantee");
    {
        auto lv = L.chain.vertex_set();
        for (VertexId v : out.J.chain.vertex_set())
            if (lv.count(v))
                throw FalsificationAlert("three_to_two_integral: J shares a vertex with L");
    }
    out.transcript.push_back(json{{"step", "three_to_two"},
                                  {"p1", p1},
                                  {"p2", p2},
                                  {"q", qidx},
                                  {"prism_values", wv},
                                  {"lk_LJ", out.lk_LJ}});
    out.transcript.push_back(face_entry);
    return out;
}

// ---------------------------------------------------------------------------
// Certificate drivers: embedding + engine + claims, all derived from one
// seed so reruns are byte-identical.
// ---------------------------------------------------------------------------

struct RunSpec {
    int n = 1;
    long long N = 0; ///< embedding size (ignored where the command fixes it)
    std::uint64_t seed = 1;
    long long box = 4096;
    unsigned jobs = 0;
};

namespace detail_engines {

struct ClaimSpec {
    std::string type, a, b;
    long long engine_value = 0; ///< the value the construction promised
};

inline LinkCertificate assemble_certificate(const std::string& theorem, const RunSpec& spec,
                                            json params, const RationalEmbedding& e,
                                            std::vector<std::pair<std::string, SphereWitness>> comps,
                                            const std::vector<ClaimSpec>& claim_specs,
                                            json transcript) {
    LinkCertificate cert;
    cert.theorem = theorem;
    cert.n = spec.n;
    cert.params = std::move(params);
    cert.seed = std::to_string(spec.seed);
    cert.box = e.box;
    cert.embedding.n = e.n;
    cert.embedding.box = e.box;
    std::set<VertexId> used;
    for (const auto& [name, wit] : comps)
        for (VertexId v : wit.chain.vertex_set()) used.insert(v);
    for (VertexId v : used) cert.embedding.points[v] = e.point(v);
    for (auto& [name, wit] : comps)
        cert.components.push_back(CertComponent{name, std::move(wit.chain)});

    SplitRng crng = SplitRng(spec.seed).child("claims");
    for (std::size_t idx = 0; idx < claim_specs.size(); ++idx) {
        const ClaimSpec& cs = claim_specs[idx];
        LinkClaim claim;
        claim.type = cs.type;
        claim.a = cs.a;
        claim.b = cs.b;
        LinkStats stats;
        long long v = linking_number(cert.embedding, cert.component(cs.a).chain,
                                     cert.component(cs.b).chain,
                                     crng.child(static_cast<std::uint64_t>(idx)), &stats);
        claim.value = cs.type == "lk2" ? mod_ll(v, 2) : v;
        claim.apex = stats.apex_used;
        if (claim.value != cs.engine_value)
            throw FalsificationAlert("certificate claim " + std::to_string(idx) +
                                     " disagrees with the construction value");
        cert.claims.push_back(std::move(claim));
    }
    cert.transcript = std::move(transcript);
    return cert;
}

inline json config_entry(const std::string& command, const RunSpec& spec, long long N) {
    return json{{"step", "config"},   {"command", command}, {"n", spec.n},
                {"N", N},             {"box", spec.box},    {"seed", std::to_string(spec.seed)}};
}

} // namespace detail_engines

inline LinkCertificate drive_base_link(const RunSpec& spec) {
    const long long N = 2LL * spec.n + 4;
    SplitRng rng(spec.seed);
    RationalEmbedding e = random_embedding(spec.n, static_cast<std::size_t>(N), spec.box,
                                           rng.child("embed"));
    BlockComplex blocks(2 * spec.n + 4, spec.n, 1, id_range(0, N));
    BaseLinkResult bl = find_base_link(e, blocks, rng.child("build"), spec.jobs);

    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("base-link", spec, N));
    for (const auto& entry : bl.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate(
        "base-link", spec, json::object(), e,
        {{"first", bl.first.sphere}, {"second", bl.second.sphere}},
        {{"lk2", "first", "second", 1}, {"lk", "first", "second", bl.lk}}, std::move(transcript));
}

inline LinkCertificate drive_chain(const RunSpec& spec, long long r) {
    SplitRng rng(spec.seed);
    RationalEmbedding e = random_embedding(spec.n, static_cast<std::size_t>(spec.N), spec.box,
                                           rng.child("embed"));
    MultiLinkResult res = build_chain_link(e, spec.n, r, rng.child("build"), spec.jobs);

    std::vector<std::pair<std::string, SphereWitness>> comps;
    for (std::size_t i = 0; i < res.components.size(); ++i)
        comps.emplace_back("L" + std::to_string(i + 1), std::move(res.components[i]));
    std::vector<detail_engines::ClaimSpec> claims;
    for (long long i = 1; i <= r - 1; ++i)
        claims.push_back({"lk2", "L" + std::to_string(i), "L" + std::to_string(i + 1), 1});

    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("chain", spec, spec.N));
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate("chain", spec, json{{"r", r}}, e, std::move(comps),
                                                claims, std::move(transcript));
}

inline LinkCertificate drive_necklace(const RunSpec& spec, long long r) {
    SplitRng rng(spec.seed);
    RationalEmbedding e = random_embedding(spec.n, static_cast<std::size_t>(spec.N), spec.box,
                                           rng.child("embed"));
    MultiLinkResult res = build_necklace(e, spec.n, r, rng.child("build"), spec.jobs);

    std::vector<std::pair<std::string, SphereWitness>> comps;
    for (std::size_t i = 0; i < res.components.size(); ++i)
        comps.emplace_back("L" + std::to_string(i + 1), std::move(res.components[i]));
    std::vector<detail_engines::ClaimSpec> claims;
    for (long long i = 1; i <= r; ++i) {
        long long j = i == r ? 1 : i + 1;
        claims.push_back({"lk2", "L" + std::to_string(i), "L" + std::to_string(j), 1});
    }

    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("necklace", spec, spec.N));
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate("necklace", spec, json{{"r", r}}, e,
                                                std::move(comps), claims, std::move(transcript));
}

inline LinkCertificate drive_keyring(const RunSpec& spec, long long r) {
    require(r >= 1, "drive_keyring: need r >= 1");
    SplitRng rng(spec.seed);
    RationalEmbedding e = random_embedding(spec.n, static_cast<std::size_t>(spec.N), spec.box,
                                           rng.child("embed"));
    KeyringResult res = build_keyring_core(e, spec.n, 2 * r, 1, rng.child("build"), spec.jobs);

    std::vector<std::pair<std::string, SphereWitness>> comps;
    comps.emplace_back("R", std::move(res.ring));
    std::vector<detail_engines::ClaimSpec> claims;
    for (long long i = 0; i < r; ++i) {
        std::string name = "L" + std::to_string(i + 1);
        comps.emplace_back(name, std::move(res.keys[static_cast<std::size_t>(i)].sphere));
        claims.push_back({"lk2", "R", name, 1});
    }

    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("keyring", spec, spec.N));
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate("keyring", spec, json{{"r", r}}, e,
                                                std::move(comps), claims, std::move(transcript));
}

inline LinkCertificate drive_amplify(const RunSpec& spec, long long lambda) {
    SplitRng rng(spec.seed);
    RationalEmbedding e = random_embedding(spec.n, static_cast<std::size_t>(spec.N), spec.box,
                                           rng.child("embed"));
    TwoComponentResult res = amplify_linking(e, spec.n, lambda, rng.child("build"), spec.jobs);
    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("amplify", spec, spec.N));
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate(
        "amplify", spec, json{{"lambda", lambda}}, e,
        {{"R", std::move(res.ring)}, {"S", std::move(res.sphere)}},
        {{"lk", "R", "S", res.value}}, std::move(transcript));
}

inline LinkCertificate drive_modp(const RunSpec& spec, long long p) {
    SplitRng rng(spec.seed);
    RationalEmbedding e = random_embedding(spec.n, static_cast<std::size_t>(spec.N), spec.box,
                                           rng.child("embed"));
    TwoComponentResult res = build_modp_link(e, spec.n, p, rng.child("build"), spec.jobs);
    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("modp", spec, spec.N));
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate(
        "modp", spec, json{{"p", p}}, e,
        {{"R", std::move(res.ring)}, {"S", std::move(res.sphere)}},
        {{"lk", "R", "S", res.value}}, std::move(transcript));
}

inline LinkCertificate drive_modq(const RunSpec& spec, long long q) {
    SplitRng rng(spec.seed);
    RationalEmbedding e = random_embedding(spec.n, static_cast<std::size_t>(spec.N), spec.box,
                                           rng.child("embed"));
    TwoComponentResult res = build_modq_link(e, spec.n, q, rng.child("build"), spec.jobs);
    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("modq", spec, spec.N));
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate(
        "modq", spec, json{{"q", q}}, e,
        {{"R", std::move(res.ring)}, {"S", std::move(res.sphere)}},
        {{"lk", "R", "S", res.value}}, std::move(transcript));
}

namespace detail_engines {

struct LemmaSetup {
    RationalEmbedding e;
    BaseLinkResult block0, block1;
};

inline LemmaSetup lemma_setup(const RunSpec& spec, int ell, SplitRng& rng, const char* what) {
    LemmaSetup s;
    s.e = random_embedding(spec.n, static_cast<std::size_t>(spec.N), spec.box, rng.child("embed"));
    require_embedding_size(s.e, lemma_vertex_bound(spec.n, ell), what);
    const long long Vb = block_vertex_count(spec.n, ell);
    BlockComplex b0(2 * spec.n + 4, spec.n, ell, id_range(0, Vb));
    BlockComplex b1(2 * spec.n + 4, spec.n, ell, id_range(Vb, Vb));
    s.block0 = find_base_link(s.e, b0, rng.child("build").child(0), spec.jobs);
    s.block1 = find_base_link(s.e, b1, rng.child("build").child(1), spec.jobs);
    return s;
}

} // namespace detail_engines

inline LinkCertificate drive_lemma_4to3(const RunSpec& spec, int ell) {
    SplitRng rng(spec.seed);
    auto setup = detail_engines::lemma_setup(spec, ell, rng, "lemma-4to3");
    FacedSphere x1{setup.block0.first.sphere, setup.block0.first.faces[0]};
    FacedSphere y1{setup.block0.second.sphere, setup.block0.second.faces[0]};
    FacedSphere x2{setup.block1.first.sphere, setup.block1.first.faces[0]};
    FacedSphere y2{setup.block1.second.sphere, setup.block1.second.faces[0]};
    IntegralTriple res = four_to_three_integral(setup.e, std::move(x1), std::move(y1), std::move(x2),
                                                std::move(y2), rng.child("lemma"), spec.jobs);

    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("lemma-4to3", spec, spec.N));
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate(
        "lemma-4to3", spec, json{{"ell", ell}, {"p", res.p}}, setup.e,
        {{"L", std::move(res.L)}, {"Z", std::move(res.Z.sphere)}, {"W", std::move(res.W.sphere)}},
        {{"lk", "L", "Z", res.lk_LZ}, {"lk", "L", "W", res.lk_LW}}, std::move(transcript));
}

inline LinkCertificate drive_lemma_3to2(const RunSpec& spec, int ell) {
    SplitRng rng(spec.seed);
    auto setup = detail_engines::lemma_setup(spec, ell, rng, "lemma-3to2");
    FacedSphere x1{setup.block0.first.sphere, setup.block0.first.faces[0]};
    FacedSphere y1{setup.block0.second.sphere, setup.block0.second.faces[0]};
    FacedSphere x2{setup.block1.first.sphere, setup.block1.first.faces[0]};
    FacedSphere y2{setup.block1.second.sphere, setup.block1.second.faces[0]};
    IntegralTriple four = four_to_three_integral(setup.e, std::move(x1), std::move(y1),
                                                 std::move(x2), std::move(y2),
                                                 rng.child("lemma").child("four"), spec.jobs);
    const long long p = four.p;

    json transcript = json::array();
    transcript.push_back(detail_engines::config_entry("lemma-3to2", spec, spec.N));
    for (const auto& entry : four.transcript) transcript.push_back(entry);

    if (four.lk_LZ >= p + 1) {
        transcript.push_back(json{{"step", "three_to_two_skip"}, {"kept", "Z"}});
        return detail_engines::assemble_certificate(
            "lemma-3to2", spec, json{{"ell", ell}, {"p", p}}, setup.e,
            {{"L", std::move(four.L)}, {"J", std::move(four.Z.sphere)}},
            {{"lk", "L", "J", four.lk_LZ}}, std::move(transcript));
    }
    if (four.lk_LW >= p + 1) {
        transcript.push_back(json{{"step", "three_to_two_skip"}, {"kept", "W"}});
        return detail_engines::assemble_certificate(
            "lemma-3to2", spec, json{{"ell", ell}, {"p", p}}, setup.e,
            {{"L", std::move(four.L)}, {"J", std::move(four.W.sphere)}},
            {{"lk", "L", "J", four.lk_LW}}, std::move(transcript));
    }

    if (ipow_ll(ell, spec.n) < four.lk_LZ + four.lk_LW)
        throw SizeBoundError("lemma-3to2: faces have " + std::to_string(ipow_ll(ell, spec.n)) +
                             " cells but the merge needs " +
                             std::to_string(four.lk_LZ + four.lk_LW));

    // Z and W keep their original face menus; search all face pairs for an
    // orientation-reversing pairing under the current orientations.
    const BlockComplex::CornerSphere& zc =
        four.z_source == "X1" ? setup.block0.first : setup.block0.second;
    const BlockComplex::CornerSphere& wc =
        four.w_source == "X2" ? setup.block1.first : setup.block1.second;
    std::optional<VertexMap> phi;
    int used_fz = -1, used_fw = -1;
    for (std::size_t fz = 0; fz < zc.faces.size() && !phi; ++fz)
        for (std::size_t fw = 0; fw < wc.faces.size(); ++fw) {
            phi = find_face_iso(four.Z.sphere.chain, zc.faces[fz], four.W.sphere.chain,
                                wc.faces[fw], -1);
            if (phi) {
                used_fz = static_cast<int>(fz);
                used_fw = static_cast<int>(fw);
                break;
            }
        }
    if (!phi)
        throw PreconditionError("lemma-3to2: no orientation-reversing face pairing available");
    transcript.push_back(json{{"step", "three_to_two_faces"}, {"z_face", used_fz}, {"w_face", used_fw}});

    FacedSphere z{four.Z.sphere, zc.faces[static_cast<std::size_t>(used_fz)]};
    FacedSphere w{four.W.sphere, wc.faces[static_cast<std::size_t>(used_fw)]};
    IntegralPair res = three_to_two_integral(setup.e, four.L, z, w, *phi,
                                             rng.child("lemma").child("three"), spec.jobs);
    for (const auto& entry : res.transcript) transcript.push_back(entry);
    return detail_engines::assemble_certificate(
        "lemma-3to2", spec, json{{"ell", ell}, {"p", p}}, setup.e,
        {{"L", std::move(four.L)}, {"J", std::move(res.J)}}, {{"lk", "L", "J", res.lk_LJ}},
        std::move(transcript));
}

} // namespace linkcert

#endif
