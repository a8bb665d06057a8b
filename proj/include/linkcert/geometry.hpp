#ifndef LINKCERT_GEOMETRY_HPP
#define LINKCERT_GEOMETRY_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "linkcert/chain.hpp"
#include "linkcert/errors.hpp"
#include "linkcert/rng.hpp"

namespace linkcert {

/// A point with exact rational coordinates.
using RationalPoint = std::vector<mpq_class>;

inline std::string rational_to_string(const mpq_class& q) {
    return q.get_den() == 1 ? q.get_num().get_str() : q.get_str();
}

inline mpq_class rational_from_string(const std::string& s) {
    mpq_class q;
    if (q.set_str(s, 10) != 0) throw PreconditionError("bad rational literal: " + s);
    q.canonicalize();
    return q;
}

/// Straight-line embedding of vertices into R^(2n+1), exact coordinates.
struct RationalEmbedding {
    int n = 1;                 ///< sphere dimension the ambient space targets
    long long box = 0;         ///< coordinate bound used when sampling
    std::map<VertexId, RationalPoint> points;

    int dim() const { return 2 * n + 1; }

    const RationalPoint& point(VertexId v) const {
        auto it = points.find(v);
        if (it == points.end())
            throw PreconditionError("embedding has no point for vertex " + std::to_string(v));
        return it->second;
    }
};

/// Sample an embedding of N vertices with integer coordinates drawn
/// uniformly from [-box, box]^(2n+1). Coordinates are resampled until the
/// points are pairwise distinct; all deeper general-position requirements
/// are enforced lazily by the predicates that consume the embedding.
inline RationalEmbedding random_embedding(int n, std::size_t N, long long box, SplitRng rng) {
    require(n >= 1, "random_embedding: n must be >= 1");
    require(box >= 4, "random_embedding: box too small");
    RationalEmbedding e;
    e.n = n;
    e.box = box;
    std::set<std::vector<long long>> seen;
    for (VertexId v = 0; v < N; ++v) {
        std::vector<long long> coords(static_cast<std::size_t>(e.dim()));
        do {
            for (auto& c : coords) c = rng.uniform(-box, box);
        } while (!seen.insert(coords).second);
        RationalPoint p;
        p.reserve(coords.size());
        for (long long c : coords) p.emplace_back(static_cast<long>(c));
        e.points.emplace(v, std::move(p));
    }
    return e;
}

namespace detail {

/// Exact determinant of a square rational matrix (Gaussian elimination).
inline mpq_class determinant(std::vector<std::vector<mpq_class>> m) {
    const std::size_t n = m.size();
    mpq_class det = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && m[pivot][col] == 0) ++pivot;
        if (pivot == n) return mpq_class(0);
        if (pivot != col) {
            std::swap(m[pivot], m[col]);
            det = -det;
        }
        det *= m[col][col];
        mpq_class inv = 1 / m[col][col];
        for (std::size_t r = col + 1; r < n; ++r) {
            if (m[r][col] == 0) continue;
            mpq_class f = m[r][col] * inv;
            for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
        }
    }
    return det;
}

/// Solve a square rational system in place. Returns std::nullopt when the
/// matrix is singular.
inline std::optional<std::vector<mpq_class>> solve(std::vector<std::vector<mpq_class>> m,
                                                   std::vector<mpq_class> rhs) {
    const std::size_t n = m.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && m[pivot][col] == 0) ++pivot;
        if (pivot == n) return std::nullopt;
        std::swap(m[pivot], m[col]);
        std::swap(rhs[pivot], rhs[col]);
        mpq_class inv = 1 / m[col][col];
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || m[r][col] == 0) continue;
            mpq_class f = m[r][col] * inv;
            for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<mpq_class> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
    return x;
}

/// Per-coordinate bounding interval of a point set.
struct Box {
    std::vector<mpq_class> lo, hi;

    void grow(const RationalPoint& p) {
        if (lo.empty()) {
            lo = p;
            hi = p;
            return;
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] < lo[i]) lo[i] = p[i];
            if (p[i] > hi[i]) hi[i] = p[i];
        }
    }

    bool disjoint_from(const Box& o) const {
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (hi[i] < o.lo[i] || o.hi[i] < lo[i]) return true;
        return false;
    }
};

/// A chain's cells resolved to coordinate tuples, plus bounding boxes.
struct GeometricCells {
    std::vector<std::vector<RationalPoint>> pts; // per cell, in sorted-vertex order
    std::vector<IntegerChain::Coeff> coeff;
    std::vector<Box> box;

    static GeometricCells resolve(const RationalEmbedding& e, const IntegerChain& c) {
        GeometricCells g;
        for (const auto& [verts, co] : c.terms()) {
            std::vector<RationalPoint> cell;
            Box b;
            cell.reserve(verts.size());
            for (VertexId v : verts) {
                cell.push_back(e.point(v));
                b.grow(cell.back());
            }
            g.pts.push_back(std::move(cell));
            g.coeff.push_back(co);
            g.box.push_back(std::move(b));
        }
        return g;
    }
};

/// Orientation sign of the (2n+1)x(2n+1) determinant whose columns are the
/// direction vectors of sigma (from its first vertex) followed by those of
/// tau (from its first vertex). Zero only in degenerate position.
inline int crossing_orientation(const std::vector<RationalPoint>& sigma,
                                const std::vector<RationalPoint>& tau) {
    const std::size_t d = sigma[0].size();
    std::vector<std::vector<mpq_class>> m(d, std::vector<mpq_class>(d));
    std::size_t col = 0;
    for (std::size_t i = 1; i < sigma.size(); ++i, ++col)
        for (std::size_t r = 0; r < d; ++r) m[r][col] = sigma[i][r] - sigma[0][r];
    for (std::size_t i = 1; i < tau.size(); ++i, ++col)
        for (std::size_t r = 0; r < d; ++r) m[r][col] = tau[i][r] - tau[0][r];
    mpq_class det = determinant(std::move(m));
    return det == 0 ? 0 : (det > 0 ? 1 : -1);
}

enum class CrossKind { miss, cross, degenerate };

/// Exact transversal-intersection test between the open interiors of two
/// simplices whose dimensions sum to the ambient dimension. On `cross`,
/// `sign` is the orientation of the crossing.
struct CrossResult {
    CrossKind kind = CrossKind::miss;
    int sign = 0;
};

inline CrossResult simplex_crossing(const std::vector<RationalPoint>& sigma,
                                    const std::vector<RationalPoint>& tau) {
    const std::size_t d = sigma[0].size();
    const std::size_t cols = sigma.size() + tau.size();
    // Unknowns: barycentric weights of sigma then tau.
    // Rows: d coordinate equations, then the two affine normalizations.
    std::vector<std::vector<mpq_class>> m(d + 2, std::vector<mpq_class>(cols));
    std::vector<mpq_class> rhs(d + 2);
    for (std::size_t c = 0; c < sigma.size(); ++c) {
        for (std::size_t r = 0; r < d; ++r) m[r][c] = sigma[c][r];
        m[d][c] = 1;
    }
    for (std::size_t c = 0; c < tau.size(); ++c) {
        for (std::size_t r = 0; r < d; ++r) m[r][sigma.size() + c] = -tau[c][r];
        m[d + 1][sigma.size() + c] = 1;
    }
    rhs[d] = 1;
    rhs[d + 1] = 1;
    auto sol = solve(std::move(m), std::move(rhs));
    if (!sol) return {CrossKind::degenerate, 0};
    bool boundary_touch = false;
    for (const mpq_class& w : *sol) {
        if (w < 0) return {CrossKind::miss, 0};
        if (w == 0) boundary_touch = true;
    }
    if (boundary_touch) return {CrossKind::degenerate, 0};
    int sign = crossing_orientation(sigma, tau);
    if (sign == 0) return {CrossKind::degenerate, 0};
    return {CrossKind::cross, sign};
}

/// Affine independence of the union of two cells' vertices (2n+2 points in
/// R^(2n+1)); independence certifies the closed simplices are disjoint.
inline bool affinely_independent(const std::vector<RationalPoint>& a,
                                 const std::vector<RationalPoint>& b) {
    std::vector<const RationalPoint*> pts;
    for (const auto& p : a) pts.push_back(&p);
    for (const auto& p : b) pts.push_back(&p);
    const std::size_t d = a[0].size();
    if (pts.size() != d + 1) throw PreconditionError("affinely_independent: wrong point count");
    std::vector<std::vector<mpq_class>> m(d, std::vector<mpq_class>(d));
    for (std::size_t i = 1; i < pts.size(); ++i)
        for (std::size_t r = 0; r < d; ++r) m[r][i - 1] = (*pts[i])[r] - (*pts[0])[r];
    return determinant(std::move(m)) != 0;
}

} // namespace detail

/// Optional instrumentation for linking-number calls.
struct LinkStats {
    std::size_t apex_resamples = 0;
    std::size_t crossings = 0;
    std::vector<std::string> apex_used; // coordinates of the accepted apex
};

/// Exact integral linking number of two disjoint n-cycles A and B embedded
/// in R^(2n+1).
///
/// Method: count signed transversal crossings of |A| with the cone over B
/// from a generic rational apex sampled from a box 10x the embedding box.
/// All predicates are exact; any degeneracy (singular system, boundary
/// touch, zero orientation) triggers a deterministic apex resample. If the
/// union of an A-cell's and a B-cell's vertices is affinely dependent the
/// components are not certifiably disjoint and no apex can help, so a
/// DegeneracyError is raised immediately (lazy general-position policy).
///
/// The sign convention is fixed by this artifact: a crossing contributes
/// coeff_A(sigma) * coeff_B(tau) * sign det[dirs(sigma) | dirs(apex-cone
/// cell over tau)], with cone cells written [apex, b_0 < ... < b_n].
inline long long linking_number(const RationalEmbedding& e, const IntegerChain& A,
                                const IntegerChain& B, SplitRng rng, LinkStats* stats = nullptr) {
    require(A.dim() == e.n && B.dim() == e.n, "linking_number: chain dimension must equal embedding n");
    require(!A.empty() && !B.empty(), "linking_number: empty chain");
    {
        auto va = A.vertex_set();
        for (VertexId v : B.vertex_set())
            if (va.count(v))
                throw PreconditionError("linking_number: components share vertex " + std::to_string(v));
    }
    if (!boundary(A).empty() || !boundary(B).empty())
        throw PreconditionError("linking_number: inputs must be cycles");

    auto ga = detail::GeometricCells::resolve(e, A);
    auto gb = detail::GeometricCells::resolve(e, B);

    // Disjointness audit (lazy): only cell pairs with overlapping bounding
    // boxes can touch; for those, affine independence certifies disjointness.
    for (std::size_t i = 0; i < ga.pts.size(); ++i)
        for (std::size_t j = 0; j < gb.pts.size(); ++j)
            if (!ga.box[i].disjoint_from(gb.box[j]) &&
                !detail::affinely_independent(ga.pts[i], gb.pts[j]))
                throw DegeneracyError(
                    "linking_number: cell pair affinely dependent; components not certifiably disjoint");

    const long long apex_box = 10 * std::max<long long>(e.box, 4);
    constexpr int apex_budget = 48;
    for (int attempt = 0; attempt < apex_budget; ++attempt) {
        SplitRng arng = rng.child(static_cast<std::uint64_t>(attempt));
        RationalPoint apex;
        apex.reserve(static_cast<std::size_t>(e.dim()));
        for (int i = 0; i < e.dim(); ++i)
            apex.emplace_back(static_cast<long>(arng.uniform(-apex_box, apex_box)));

        detail::Box apex_only;
        apex_only.grow(apex);

        long long total = 0;
        std::size_t crossings = 0;
        bool degenerate = false;
        for (std::size_t j = 0; j < gb.pts.size() && !degenerate; ++j) {
            // cone cell [apex, b_0 < ... < b_n]
            std::vector<RationalPoint> tau;
            tau.reserve(gb.pts[j].size() + 1);
            tau.push_back(apex);
            for (const auto& p : gb.pts[j]) tau.push_back(p);
            detail::Box tbox = gb.box[j];
            tbox.grow(apex);
            for (std::size_t i = 0; i < ga.pts.size(); ++i) {
                if (ga.box[i].disjoint_from(tbox)) continue;
                auto res = detail::simplex_crossing(ga.pts[i], tau);
                if (res.kind == detail::CrossKind::degenerate) {
                    degenerate = true;
                    break;
                }
                if (res.kind == detail::CrossKind::cross) {
                    total += ga.coeff[i] * gb.coeff[j] * res.sign;
                    ++crossings;
                }
            }
        }
        if (!degenerate) {
            if (stats) {
                stats->crossings = crossings;
                stats->apex_used.clear();
                for (const auto& c : apex) stats->apex_used.push_back(rational_to_string(c));
            }
            return total;
        }
        if (stats) ++stats->apex_resamples;
    }
    throw DegeneracyError("linking_number: apex resample budget exhausted");
}

/// Mod-2 linking number. Computed via the cone method; kept as a separate
/// entry point so callers express intent and certificates record "lk2".
inline int linking_mod2(const RationalEmbedding& e, const IntegerChain& A, const IntegerChain& B,
                        SplitRng rng) {
    long long v = linking_number(e, A, B, rng);
    return static_cast<int>(((v % 2) + 2) % 2);
}

/// Independent mod-2 linking oracle for n = 1: project both cycles along a
/// generic integer direction and count the parity of crossings where A
/// passes over B. Shares no code path with the cone method beyond the
/// rational solver, so agreement between the two is a strong correctness
/// check (they are compared in the acceptance suite).
inline int linking_mod2_projection(const RationalEmbedding& e, const IntegerChain& A,
                                   const IntegerChain& B, SplitRng rng) {
    require(e.n == 1, "linking_mod2_projection is defined for n = 1 only");
    require(A.dim() == 1 && B.dim() == 1, "linking_mod2_projection: chains must be 1-dimensional");
    auto ga = detail::GeometricCells::resolve(e, A);
    auto gb = detail::GeometricCells::resolve(e, B);
    {
        auto va = A.vertex_set();
        for (VertexId v : B.vertex_set())
            if (va.count(v))
                throw PreconditionError("linking_mod2_projection: components share a vertex");
    }
    const long long dir_box = 10 * std::max<long long>(e.box, 4);
    constexpr int budget = 48;
    for (int attempt = 0; attempt < budget; ++attempt) {
        SplitRng drng = rng.child(static_cast<std::uint64_t>(attempt));
        // view direction; projection is along w, "over" means displaced by +w
        std::vector<mpq_class> w(3);
        for (auto& c : w) c = mpq_class(static_cast<long>(drng.uniform(-dir_box, dir_box)));
        if (w[0] == 0 && w[1] == 0 && w[2] == 0) continue;

        long long over = 0;
        bool degenerate = false;
        for (std::size_t i = 0; i < ga.pts.size() && !degenerate; ++i) {
            const auto& a1 = ga.pts[i][0];
            const auto& a2 = ga.pts[i][1];
            for (std::size_t j = 0; j < gb.pts.size(); ++j) {
                const auto& b1 = gb.pts[j][0];
                const auto& b2 = gb.pts[j][1];
                // a1 + t(a2-a1) = b1 + s(b2-b1) + c*w
                std::vector<std::vector<mpq_class>> m(3, std::vector<mpq_class>(3));
                std::vector<mpq_class> rhs(3);
                for (int r = 0; r < 3; ++r) {
                    m[r][0] = a2[r] - a1[r];
                    m[r][1] = b1[r] - b2[r];
                    m[r][2] = -w[r];
                    rhs[r] = b1[r] - a1[r];
                }
                auto sol = detail::solve(std::move(m), std::move(rhs));
                if (!sol) {
                    degenerate = true; // projected segments parallel: resample direction
                    break;
                }
                const mpq_class& t = (*sol)[0];
                const mpq_class& s = (*sol)[1];
                const mpq_class& c = (*sol)[2];
                if (t < 0 || t > 1 || s < 0 || s > 1) continue;
                if (t == 0 || t == 1 || s == 0 || s == 1 || c == 0) {
                    degenerate = true; // endpoint hit or actual contact: resample
                    break;
                }
                if (c > 0) ++over;
            }
        }
        if (!degenerate) return static_cast<int>(over % 2);
    }
    throw DegeneracyError("linking_mod2_projection: direction resample budget exhausted");
}

} // namespace linkcert

#endif
