#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "linkcert/certificate.hpp"
#include "linkcert/chain.hpp"
#include "linkcert/engines.hpp"
#include "linkcert/geometry.hpp"

using namespace linkcert;

namespace {

std::string temp_path(const std::string& stem) {
    auto dir = std::filesystem::temp_directory_path();
    return (dir / (stem + "." + std::to_string(::getpid()) + ".json")).string();
}

RationalPoint pt(long x, long y, long z) {
    RationalPoint p;
    p.emplace_back(x);
    p.emplace_back(y);
    p.emplace_back(z);
    return p;
}

LinkCertificate small_cert() {
    RunSpec spec;
    spec.n = 1;
    spec.seed = 7;
    spec.box = 4096;
    return drive_base_link(spec);
}

IntegerChain triangle_cycle(VertexId a, VertexId b, VertexId c) {
    IntegerChain t(1);
    t.add_sorted({a, b}, 1);
    t.add_sorted({b, c}, 1);
    t.add_sorted({a, c}, -1);
    return t;
}

} // namespace

TEST_CASE("embeddings round-trip through JSON") {
    RationalEmbedding e = random_embedding(2, 7, 50, SplitRng(3));
    json j = embedding_to_json(e);
    RationalEmbedding back = embedding_from_json(j);
    REQUIRE(back.n == e.n);
    REQUIRE(back.box == e.box);
    REQUIRE(back.points == e.points);

    json file = embedding_file(e);
    REQUIRE(file.at("schema").get<std::string>() == kEmbeddingSchema);
    REQUIRE(embedding_from_file_json(file).points == e.points);

    SECTION("malformed payloads are refused") {
        json missing = j;
        missing.erase("n");
        REQUIRE_THROWS_AS(embedding_from_json(missing), PreconditionError);

        json bad_dim = j;
        bad_dim["dim"] = 4;
        REQUIRE_THROWS_AS(embedding_from_json(bad_dim), PreconditionError);

        json bad_arity = j;
        bad_arity["points"]["0"] = json::array({"1", "2"});
        REQUIRE_THROWS_AS(embedding_from_json(bad_arity), PreconditionError);

        json bad_key = j;
        bad_key["points"]["x3"] = j.at("points").at("0");
        REQUIRE_THROWS_AS(embedding_from_json(bad_key), PreconditionError);

        json bad_coord = j;
        bad_coord["points"]["1"][0] = "zzz";
        REQUIRE_THROWS_AS(embedding_from_json(bad_coord), PreconditionError);

        json zero_n = j;
        zero_n["n"] = 0;
        REQUIRE_THROWS_AS(embedding_from_json(zero_n), PreconditionError);

        json wrong_schema = file;
        wrong_schema["schema"] = "other/9";
        REQUIRE_THROWS_AS(embedding_from_file_json(wrong_schema), PreconditionError);
    }
}

TEST_CASE("certificates serialize with stable alphabetical keys and round-trip") {
    LinkCertificate cert = small_cert();
    json j = cert.to_json();

    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    REQUIRE(keys == std::vector<std::string>{"box", "claims", "components", "embedding", "n",
                                             "params", "schema", "seed", "theorem", "transcript"});
    REQUIRE(j.at("schema").get<std::string>() == kCertificateSchema);

    LinkCertificate back = LinkCertificate::from_json(j);
    REQUIRE(back.to_json().dump() == j.dump());
    REQUIRE(back.theorem == cert.theorem);
    REQUIRE(back.seed_value() == 7);
    REQUIRE(back.components.size() == cert.components.size());
    REQUIRE(back.claims.size() == cert.claims.size());
}

TEST_CASE("certificate files survive a disk round-trip") {
    LinkCertificate cert = small_cert();
    std::string path = temp_path("roundtrip");
    write_json_file(path, cert.to_json());

    json j = read_json_file(path);
    LinkCertificate back = LinkCertificate::from_json(j);
    REQUIRE(back.to_json().dump() == cert.to_json().dump());
    REQUIRE(verify_certificate(back).ok);
    std::filesystem::remove(path);

    REQUIRE_THROWS_AS(read_json_file(temp_path("no-such-file")), PreconditionError);

    std::string garbled = temp_path("garbled");
    {
        std::ofstream out(garbled);
        out << "this is not json {";
    }
    REQUIRE_THROWS_AS(read_json_file(garbled), PreconditionError);
    std::filesystem::remove(garbled);
}

TEST_CASE("verification re-derives every claim and reports success rows") {
    LinkCertificate cert = small_cert();
    VerifyReport rep = verify_certificate(cert);
    REQUIRE(rep.ok);
    REQUIRE(rep.first_failure() == nullptr);
    // sphere rows + disjointness rows + claim rows + requirement rows
    REQUIRE(rep.claims.size() >= cert.components.size() * 2 + cert.claims.size());
    for (const auto& row : rep.claims) REQUIRE(row.ok);
}

TEST_CASE("a tampered claim value fails verification without crashing") {
    LinkCertificate cert = small_cert();

    SECTION("integral claim shifted by two stays odd but mismatches") {
        LinkCertificate t = cert;
        for (auto& c : t.claims)
            if (c.type == "lk") c.value += 2;
        VerifyReport rep = verify_certificate(t);
        REQUIRE_FALSE(rep.ok);
        const ClaimReport* fail = rep.first_failure();
        REQUIRE(fail != nullptr);
        REQUIRE(fail->expected != fail->got);
    }

    SECTION("mod-2 claim flipped to zero") {
        LinkCertificate t = cert;
        for (auto& c : t.claims)
            if (c.type == "lk2") c.value = 0;
        VerifyReport rep = verify_certificate(t);
        REQUIRE_FALSE(rep.ok);
    }
}

TEST_CASE("structural damage to a certificate is a hard verification error") {
    LinkCertificate cert = small_cert();

    SECTION("a component vertex lost from the embedding") {
        LinkCertificate t = cert;
        VertexId v = *t.components[0].chain.vertex_set().begin();
        t.embedding.points.erase(v);
        REQUIRE_THROWS_AS(verify_certificate(t), VerifyError);
    }

    SECTION("a component chain that is no longer a sphere") {
        LinkCertificate t = cert;
        // doubling one coefficient breaks the unit-coefficient sphere test
        const auto& front = *t.components[0].chain.terms().begin();
        IntegerChain extra(t.components[0].chain.dim());
        extra.add_sorted(front.first, front.second);
        t.components[0].chain += extra;
        REQUIRE_THROWS_AS(verify_certificate(t), VerifyError);
    }

    SECTION("components sharing a vertex") {
        LinkCertificate t;
        t.theorem = "base-link";
        t.n = 1;
        t.seed = "1";
        t.box = 8;
        t.embedding.n = 1;
        t.embedding.box = 8;
        t.embedding.points[0] = pt(1, 0, 0);
        t.embedding.points[1] = pt(-1, 1, 0);
        t.embedding.points[2] = pt(-1, -1, 0);
        t.embedding.points[3] = pt(0, 0, 1);
        t.embedding.points[4] = pt(0, 0, -1);
        t.components.push_back({"first", triangle_cycle(0, 1, 2)});
        t.components.push_back({"second", triangle_cycle(2, 3, 4)});
        REQUIRE_THROWS_AS(verify_certificate(t), VerifyError);
    }

    SECTION("flat components whose disjointness cannot be certified") {
        LinkCertificate t;
        t.theorem = "base-link";
        t.n = 1;
        t.seed = "1";
        t.box = 8;
        t.embedding.n = 1;
        t.embedding.box = 8;
        t.embedding.points[0] = pt(1, 0, 0);
        t.embedding.points[1] = pt(-1, 1, 0);
        t.embedding.points[2] = pt(-1, -1, 0);
        t.embedding.points[3] = pt(1, 1, 0);
        t.embedding.points[4] = pt(2, 1, 0);
        t.embedding.points[5] = pt(2, 2, 0);
        t.components.push_back({"first", triangle_cycle(0, 1, 2)});
        t.components.push_back({"second", triangle_cycle(3, 4, 5)});
        REQUIRE_THROWS_AS(verify_certificate(t), VerifyError);
    }

    SECTION("an unknown theorem tag") {
        LinkCertificate t = cert;
        t.theorem = "bogus";
        REQUIRE_THROWS_AS(verify_certificate(t), VerifyError);
    }

    SECTION("a seed that is not a decimal integer") {
        LinkCertificate t = cert;
        t.seed = "not-a-number";
        REQUIRE_THROWS_AS(verify_certificate(t), PreconditionError);
    }
}

TEST_CASE("malformed certificate JSON is rejected before verification") {
    json good = small_cert().to_json();

    json bad_schema = good;
    bad_schema["schema"] = "linkcert/0";
    REQUIRE_THROWS_AS(LinkCertificate::from_json(bad_schema), PreconditionError);

    json dup_names = good;
    dup_names["components"][1]["name"] = dup_names["components"][0]["name"];
    REQUIRE_THROWS_AS(LinkCertificate::from_json(dup_names), PreconditionError);

    json ghost_claim = good;
    ghost_claim["claims"][0]["a"] = "nonexistent";
    REQUIRE_THROWS_AS(LinkCertificate::from_json(ghost_claim), PreconditionError);

    json bad_type = good;
    bad_type["claims"][0]["type"] = "lk3";
    REQUIRE_THROWS_AS(LinkCertificate::from_json(bad_type), PreconditionError);

    json bad_n = good;
    bad_n["n"] = 0;
    REQUIRE_THROWS_AS(LinkCertificate::from_json(bad_n), PreconditionError);

    json mismatched_n = good;
    mismatched_n["embedding"]["n"] = 2;
    mismatched_n["embedding"]["dim"] = 5;
    REQUIRE_THROWS_AS(LinkCertificate::from_json(mismatched_n), PreconditionError);

    json bad_dim = good;
    bad_dim["components"][0]["dim"] = 2;
    REQUIRE_THROWS_AS(LinkCertificate::from_json(bad_dim), PreconditionError);

    json bad_chain = good;
    bad_chain["components"][0]["chain"][0]["vertices"] = json::array({3, 3});
    REQUIRE_THROWS_AS(LinkCertificate::from_json(bad_chain), PreconditionError);
}

TEST_CASE("theorem-shape requirements are replayed from the certificate alone") {
    RunSpec spec;
    spec.n = 1;
    spec.N = chain_vertex_bound(1, 3);
    spec.seed = 37;
    LinkCertificate chain = drive_chain(spec, 3);
    REQUIRE(verify_certificate(chain).ok);

    SECTION("a wrong component count for the declared r fails") {
        LinkCertificate t = chain;
        t.params["r"] = 4;
        VerifyReport rep = verify_certificate(t);
        REQUIRE_FALSE(rep.ok);
        REQUIRE(rep.first_failure() != nullptr);
    }

    SECTION("missing parameters are a hard error") {
        LinkCertificate t = chain;
        t.params.erase("r");
        REQUIRE_THROWS_AS(verify_certificate(t), VerifyError);
    }

    SECTION("a ring-and-keys certificate verifies end to end") {
        RunSpec kspec;
        kspec.n = 1;
        kspec.N = keyring_vertex_bound(1, 1);
        kspec.seed = 19;
        LinkCertificate keyring = drive_keyring(kspec, 1);
        REQUIRE(keyring.components.size() == 2);
        REQUIRE(verify_certificate(keyring).ok);
    }
}
