#ifndef LINKCERT_CERTIFICATE_HPP
#define LINKCERT_CERTIFICATE_HPP

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "linkcert/chain.hpp"
#include "linkcert/errors.hpp"
#include "linkcert/geometry.hpp"
#include "linkcert/rng.hpp"

namespace linkcert {

inline constexpr const char* kCertificateSchema = "linkcert/1";
inline constexpr const char* kEmbeddingSchema = "linkemb/1";

/// One recomputable linking claim between two named components.
struct LinkClaim {
    std::string type; ///< "lk" (integral) or "lk2" (mod 2)
    std::string a, b; ///< component names
    long long value = 0;
    std::vector<std::string> apex; ///< apex used at build time (informational)
};

struct CertComponent {
    std::string name;
    IntegerChain chain;
};

inline json embedding_to_json(const RationalEmbedding& e) {
    json pts = json::object();
    for (const auto& [v, p] : e.points) {
        json coords = json::array();
        for (const auto& c : p) coords.push_back(rational_to_string(c));
        pts[std::to_string(v)] = std::move(coords);
    }
    return json{{"box", e.box}, {"dim", e.dim()}, {"n", e.n}, {"points", std::move(pts)}};
}

inline RationalEmbedding embedding_from_json(const json& j) {
    RationalEmbedding e;
    if (!j.contains("n") || !j.contains("points"))
        throw PreconditionError("embedding JSON missing 'n' or 'points'");
    e.n = j.at("n").get<int>();
    if (e.n < 1) throw PreconditionError("embedding n must be >= 1");
    e.box = j.value("box", 0LL);
    if (j.contains("dim") && j.at("dim").get<int>() != e.dim())
        throw PreconditionError("embedding dim must equal 2n+1");
    for (const auto& [key, coords] : j.at("points").items()) {
        if (key.empty() || key.find_first_not_of("0123456789") != std::string::npos)
            throw PreconditionError("embedding vertex key is not an integer: " + key);
        unsigned long vl = 0;
        try {
            vl = std::stoul(key);
        } catch (const std::exception&) {
            throw PreconditionError("embedding vertex key is out of range: " + key);
        }
        RationalPoint p;
        if (!coords.is_array() || coords.size() != static_cast<std::size_t>(e.dim()))
            throw PreconditionError("embedding point for vertex " + key + " has wrong arity");
        for (const auto& c : coords) p.push_back(rational_from_string(c.get<std::string>()));
        if (!e.points.emplace(static_cast<VertexId>(vl), std::move(p)).second)
            throw PreconditionError("duplicate embedding vertex " + key);
    }
    return e;
}

/// Standalone embedding file payload.
inline json embedding_file(const RationalEmbedding& e) {
    json j = embedding_to_json(e);
    j["schema"] = kEmbeddingSchema;
    return j;
}

inline RationalEmbedding embedding_from_file_json(const json& j) {
    if (j.value("schema", "") != kEmbeddingSchema)
        throw PreconditionError("embedding file schema must be 'linkemb/1'");
    return embedding_from_json(j);
}

/// A serialized, independently replayable record of a constructed link:
/// the embedding, the component chains, and the claimed linking values.
struct LinkCertificate {
    std::string theorem;
    int n = 1;
    json params = json::object();
    std::string seed; ///< decimal uint64, the run's master seed
    long long box = 0;
    RationalEmbedding embedding;
    std::vector<CertComponent> components;
    std::vector<LinkClaim> claims;
    json transcript = json::array();

    const CertComponent& component(const std::string& name) const {
        for (const auto& c : components)
            if (c.name == name) return c;
        throw PreconditionError("certificate has no component named '" + name + "'");
    }

    std::uint64_t seed_value() const {
        try {
            return std::stoull(seed);
        } catch (const std::exception&) {
            throw PreconditionError("certificate seed is not a decimal integer: " + seed);
        }
    }

    json to_json() const {
        json comps = json::array();
        for (const auto& c : components)
            comps.push_back(json{{"chain", c.chain.to_json()}, {"dim", c.chain.dim()}, {"name", c.name}});
        json cls = json::array();
        for (const auto& c : claims)
            cls.push_back(json{{"a", c.a}, {"apex", c.apex}, {"b", c.b}, {"type", c.type}, {"value", c.value}});
        return json{{"box", box},
                    {"claims", std::move(cls)},
                    {"components", std::move(comps)},
                    {"embedding", embedding_to_json(embedding)},
                    {"n", n},
                    {"params", params},
                    {"schema", kCertificateSchema},
                    {"seed", seed},
                    {"theorem", theorem},
                    {"transcript", transcript}};
    }

    static LinkCertificate from_json(const json& j) {
        if (j.value("schema", "") != kCertificateSchema)
            throw PreconditionError("certificate schema must be 'linkcert/1'");
        LinkCertificate c;
        c.theorem = j.at("theorem").get<std::string>();
        c.n = j.at("n").get<int>();
        if (c.n < 1) throw PreconditionError("certificate n must be >= 1");
        c.params = j.value("params", json::object());
        c.seed = j.at("seed").get<std::string>();
        c.box = j.value("box", 0LL);
        c.embedding = embedding_from_json(j.at("embedding"));
        if (c.embedding.n != c.n) throw PreconditionError("embedding n disagrees with certificate n");
        std::set<std::string> names;
        for (const auto& comp : j.at("components")) {
            CertComponent cc;
            cc.name = comp.at("name").get<std::string>();
            int dim = comp.value("dim", c.n);
            if (dim != c.n) throw PreconditionError("component '" + cc.name + "' has dimension != n");
            cc.chain = IntegerChain::from_json(comp.at("chain"), dim);
            if (!names.insert(cc.name).second)
                throw PreconditionError("duplicate component name '" + cc.name + "'");
            c.components.push_back(std::move(cc));
        }
        for (const auto& cl : j.at("claims")) {
            LinkClaim lc;
            lc.type = cl.at("type").get<std::string>();
            if (lc.type != "lk" && lc.type != "lk2")
                throw PreconditionError("claim type must be 'lk' or 'lk2'");
            lc.a = cl.at("a").get<std::string>();
            lc.b = cl.at("b").get<std::string>();
            lc.value = cl.at("value").get<long long>();
            if (cl.contains("apex")) lc.apex = cl.at("apex").get<std::vector<std::string>>();
            if (!names.count(lc.a) || !names.count(lc.b))
                throw PreconditionError("claim references unknown component");
            c.claims.push_back(std::move(lc));
        }
        c.transcript = j.value("transcript", json::array());
        return c;
    }
};

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PreconditionError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw PreconditionError("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw PreconditionError("JSON parse error in " + path + ": " + e.what());
    }
    return j;
}

/// Result of re-deriving one claim (or one structural requirement).
struct ClaimReport {
    std::string description;
    bool ok = false;
    long long expected = 0; ///< claim value from the certificate
    long long got = 0;      ///< recomputed value
};

struct VerifyReport {
    bool ok = true;
    std::vector<ClaimReport> claims;

    void add(std::string desc, bool pass, long long expected = 0, long long got = 0) {
        claims.push_back(ClaimReport{std::move(desc), pass, expected, got});
        if (!pass) ok = false;
    }

    const ClaimReport* first_failure() const {
        for (const auto& c : claims)
            if (!c.ok) return &c;
        return nullptr;
    }
};

namespace detail {

/// Certify two same-dimension cycles geometrically disjoint: cell pairs with
/// overlapping bounding boxes must have affinely independent vertex unions.
inline void certify_disjoint_cells(const RationalEmbedding& e, const IntegerChain& A,
                                   const IntegerChain& B, const std::string& what) {
    auto ga = GeometricCells::resolve(e, A);
    auto gb = GeometricCells::resolve(e, B);
    for (std::size_t i = 0; i < ga.pts.size(); ++i)
        for (std::size_t j = 0; j < gb.pts.size(); ++j)
            if (!ga.box[i].disjoint_from(gb.box[j]) && !affinely_independent(ga.pts[i], gb.pts[j]))
                throw VerifyError(what + ": cell pair not certifiably disjoint");
}

} // namespace detail

/// Theorem-level requirements a certificate's claim list must satisfy,
/// derived from the certificate alone (theorem tag + params). Reported as
/// extra rows in the verify report.
inline void check_claim_requirements(const LinkCertificate& cert, VerifyReport& rep) {
    auto param = [&](const char* key) -> long long {
        if (!cert.params.contains(key))
            throw VerifyError(std::string("certificate params missing '") + key + "'");
        return cert.params.at(key).get<long long>();
    };
    auto expect = [&](const std::string& desc, bool pass, long long want = 0, long long got = 0) {
        rep.add(desc, pass, want, got);
    };
    const auto& cs = cert.claims;
    const std::string& t = cert.theorem;
    if (t == "base-link") {
        expect("exactly two components", cert.components.size() == 2, 2,
               static_cast<long long>(cert.components.size()));
        bool odd = false;
        for (const auto& c : cs)
            if (c.type == "lk2" && c.value == 1) odd = true;
        expect("a mod-2 linking claim with value 1 exists", odd);
        for (const auto& c : cs)
            if (c.type == "lk")
                expect("integral claim value is odd", c.value % 2 != 0, 1, c.value);
    } else if (t == "chain" || t == "necklace") {
        long long r = param("r");
        std::size_t want_claims = t == "chain" ? static_cast<std::size_t>(r - 1) : static_cast<std::size_t>(r);
        expect("component count equals r", cert.components.size() == static_cast<std::size_t>(r), r,
               static_cast<long long>(cert.components.size()));
        expect(t == "chain" ? "r-1 consecutive claims" : "r cyclic claims", cs.size() == want_claims,
               static_cast<long long>(want_claims), static_cast<long long>(cs.size()));
        for (const auto& c : cs)
            expect("claim " + c.a + "~" + c.b + " is mod-2 and equals 1", c.type == "lk2" && c.value == 1, 1,
                   c.value);
    } else if (t == "keyring") {
        long long r = param("r");
        expect("component count equals r+1", cert.components.size() == static_cast<std::size_t>(r + 1),
               r + 1, static_cast<long long>(cert.components.size()));
        expect("r key claims", cs.size() == static_cast<std::size_t>(r), r,
               static_cast<long long>(cs.size()));
        for (const auto& c : cs)
            expect("claim " + c.a + "~" + c.b + " is mod-2 and equals 1", c.type == "lk2" && c.value == 1, 1,
                   c.value);
    } else if (t == "amplify") {
        long long lambda = param("lambda");
        expect("two components", cert.components.size() == 2, 2,
               static_cast<long long>(cert.components.size()));
        expect("one integral claim", cs.size() == 1 && cs[0].type == "lk");
        if (!cs.empty()) {
            long long v = cs[0].value;
            expect("|value| >= lambda", std::abs(v) >= lambda, lambda, v);
        }
    } else if (t == "modp" || t == "modq") {
        long long m = param(t == "modp" ? "p" : "q");
        expect("two components", cert.components.size() == 2, 2,
               static_cast<long long>(cert.components.size()));
        expect("one integral claim", cs.size() == 1 && cs[0].type == "lk");
        if (!cs.empty()) {
            long long v = cs[0].value;
            expect("value is nonzero", v != 0, 0, v);
            expect("value is a multiple of the modulus", v % m == 0, 0, v % m);
        }
    } else if (t == "lemma-4to3") {
        long long p = param("p");
        expect("three components", cert.components.size() == 3, 3,
               static_cast<long long>(cert.components.size()));
        expect("two integral claims", cs.size() == 2 && cs[0].type == "lk" && cs[1].type == "lk");
        if (cs.size() == 2) {
            expect("first value >= 1", cs[0].value >= 1, 1, cs[0].value);
            expect("second value >= p", cs[1].value >= p, p, cs[1].value);
        }
    } else if (t == "lemma-3to2") {
        long long p = param("p");
        expect("two components", cert.components.size() == 2, 2,
               static_cast<long long>(cert.components.size()));
        expect("one integral claim", cs.size() == 1 && cs[0].type == "lk");
        if (!cs.empty()) expect("value >= p+1", cs[0].value >= p + 1, p + 1, cs[0].value);
    } else {
        throw VerifyError("unknown theorem tag '" + t + "'");
    }
}

/// Independent replay of a certificate. Uses only the chain algebra and the
/// exact geometry (never the construction code), and draws fresh apexes from
/// a verify-tagged stream, so agreement with the recorded values is a real
/// check rather than a replay of the builder's arithmetic.
///
/// Structural violations (bad schema content, a non-sphere component,
/// overlapping components) throw VerifyError; per-claim mismatches are
/// collected in the report with ok = false.
inline VerifyReport verify_certificate(const LinkCertificate& cert) {
    VerifyReport rep;

    // every component must be a combinatorial sphere over embedded vertices
    for (const auto& comp : cert.components) {
        SphereReport sr = check_sphere(comp.chain);
        if (!sr.ok)
            throw VerifyError("component '" + comp.name + "' is not a sphere: " + sr.reason);
        for (VertexId v : comp.chain.vertex_set())
            if (!cert.embedding.points.count(v))
                throw VerifyError("component '" + comp.name + "' uses unembedded vertex " +
                                  std::to_string(v));
        rep.add("component '" + comp.name + "' is a sphere (" + std::to_string(sr.cell_count) + " cells)",
                true);
    }
    // components must be pairwise disjoint, combinatorially and geometrically
    for (std::size_t i = 0; i < cert.components.size(); ++i) {
        auto vi = cert.components[i].chain.vertex_set();
        for (std::size_t j = i + 1; j < cert.components.size(); ++j) {
            for (VertexId v : cert.components[j].chain.vertex_set())
                if (vi.count(v))
                    throw VerifyError("components '" + cert.components[i].name + "' and '" +
                                      cert.components[j].name + "' share vertex " + std::to_string(v));
            detail::certify_disjoint_cells(cert.embedding, cert.components[i].chain,
                                           cert.components[j].chain,
                                           "components '" + cert.components[i].name + "'/'" +
                                               cert.components[j].name + "'");
        }
        rep.add("component '" + cert.components[i].name + "' disjoint from the others", true);
    }

    SplitRng vrng = SplitRng(cert.seed_value()).child("verify");
    for (std::size_t idx = 0; idx < cert.claims.size(); ++idx) {
        const LinkClaim& c = cert.claims[idx];
        const IntegerChain& A = cert.component(c.a).chain;
        const IntegerChain& B = cert.component(c.b).chain;
        long long got;
        if (c.type == "lk") {
            got = linking_number(cert.embedding, A, B, vrng.child(static_cast<std::uint64_t>(idx)));
        } else {
            got = linking_mod2(cert.embedding, A, B, vrng.child(static_cast<std::uint64_t>(idx)));
        }
        rep.add("claim " + std::to_string(idx) + ": " + c.type + "(" + c.a + ", " + c.b + ") == " +
                    std::to_string(c.value),
                got == c.value, c.value, got);
    }

    check_claim_requirements(cert, rep);
    return rep;
}

} // namespace linkcert

#endif
