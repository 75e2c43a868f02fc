#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "helpers.hpp"
#include "zakident/serialize.hpp"

using namespace zakident;
using testutil::desk_params;
using testutil::shared_matrix;
using Catch::Approx;

TEST_CASE("certify: the identifiability boundary sits at area 1/2") {
    const ModelParams p = desk_params(4, 1.0, 1, 1);
    const MeasurementMatrix& M = shared_matrix(p);
    REQUIRE(M.spark_certified);

    SECTION("kmax = L/2 is stably identifiable") {
        const Certificate cert = certify(M, p.L / 2);
        CHECK(cert.verdict == Verdict::StablyIdentifiable);
        CHECK(cert.worst_alpha > 0.0);
        CHECK(cert.worst_beta >= cert.worst_alpha);
        CHECK(cert.checked_count == 1820); // C(16,4)
        CHECK_FALSE(cert.sampled);
        CHECK(cert.worst_support.size() == static_cast<std::size_t>(p.L));
    }

    SECTION("any kmax past L/2 is not identifiable (rank bound)") {
        const Certificate cert = certify(M, p.L / 2 + 1);
        CHECK(cert.verdict == Verdict::NotIdentifiable);
        CHECK(cert.worst_alpha == 0.0);
        CHECK(cert.worst_support.size() == static_cast<std::size_t>(p.L + 1));
    }

    SECTION("odd grid side") {
        const ModelParams p5 = desk_params(5, 1.0, 1, 1);
        const MeasurementMatrix& M5 = shared_matrix(p5);
        CHECK(certify(M5, 2).verdict == Verdict::StablyIdentifiable); // sweep |G| = 4
        CHECK(certify(M5, 3).verdict == Verdict::NotIdentifiable);    // 2*3 = 6 > 5
    }
}

TEST_CASE("certify flags the duplicate-column probe") {
    const ModelParams p{2, 0.5, 1, 1};
    cvector cv(2);
    cv << 1.0, 1.0;
    MeasurementMatrix M = build_matrix(CoefficientVector{cv}, p);
    const Certificate cert = certify(M, 1);
    CHECK(cert.verdict == Verdict::NotIdentifiable);
    // worst case is the duplicate pair, found first in lexicographic order
    CHECK(cert.worst_support == SupportSet(std::vector<Cell>{{0, 0}, {1, 0}}));
}

TEST_CASE("certify verdict is invariant under scaling of c") {
    const ModelParams p = desk_params(4, 1.0, 1, 1);
    const MeasurementMatrix& M = shared_matrix(p);
    MeasurementMatrix scaled = build_matrix(CoefficientVector{cvector(10.0 * M.c.c)}, p);
    for (int kmax : {1, 2, 3}) {
        CHECK(certify(M, kmax).verdict == certify(scaled, kmax).verdict);
    }
}

TEST_CASE("certify randomized fallback past the budget") {
    const ModelParams p = desk_params(4, 1.0, 1, 1);
    const MeasurementMatrix& M = shared_matrix(p);
    CertifyOptions opts;
    opts.budget = 100; // C(16,4) = 1820 > 100
    opts.sample_trials = 300;
    const Certificate cert = certify(M, 2, opts);
    CHECK(cert.sampled);
    CHECK(cert.checked_count == 300);
    CHECK(cert.verdict == Verdict::StablyIdentifiable);
}

TEST_CASE("certify rejects out-of-range kmax") {
    const ModelParams p = desk_params(4, 1.0, 1, 1);
    const MeasurementMatrix& M = shared_matrix(p);
    CHECK_THROWS_AS(certify(M, 0), precondition_error);
    CHECK_THROWS_AS(certify(M, p.L + 1), precondition_error);
}

TEST_CASE("counterexample: two operators the probe cannot separate") {
    const ModelParams p = desk_params(4, 1.0, 4, 4);
    const MeasurementMatrix& M = shared_matrix(p);

    SECTION("union larger than L yields a valid witness pair") {
        const SupportSet g1(std::vector<Cell>{{0, 0}, {0, 1}, {1, 2}});
        const SupportSet g2(std::vector<Cell>{{2, 0}, {2, 3}, {3, 1}});
        const auto [h1, h2] = counterexample(M, g1, g2);
        CHECK(h1.support == g1);
        CHECK(h2.support == g2);

        const double diff = hs_norm(linear_combination(1.0, h1, -1.0, h2));
        CHECK(std::abs(diff - 1.0) <= 1e-12);

        ZakField dz = simulate_response(h1, M);
        dz.z -= simulate_response(h2, M).z;
        CHECK(weighted_norm(dz) <= 1e-10);
    }

    SECTION("union of size L under a certified probe has no null vector") {
        const SupportSet g1(std::vector<Cell>{{0, 0}, {1, 1}});
        const SupportSet g2(std::vector<Cell>{{2, 2}, {3, 3}});
        CHECK_THROWS_AS(counterexample(M, g1, g2), precondition_error);
    }

    SECTION("overlapping supports rejected") {
        const SupportSet g1(std::vector<Cell>{{0, 0}, {1, 1}, {2, 2}});
        const SupportSet g2(std::vector<Cell>{{1, 1}, {3, 0}, {3, 3}});
        CHECK_THROWS_AS(counterexample(M, g1, g2), precondition_error);
    }
}

TEST_CASE("condition profile") {
    const ModelParams p = desk_params(4, 1.0, 1, 1);
    const MeasurementMatrix& M = shared_matrix(p);
    const std::vector<ProfileRow> rows = condition_profile(M, 3); // rows up to 2*3 = 6

    REQUIRE(rows.size() == 6);
    CHECK(rows[0].k == 1);
    CHECK(rows[0].worst_ratio == 1.0); // equal column norms

    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].worst_ratio >= rows[i - 1].worst_ratio);

    // rank bound past k = L
    CHECK(std::isinf(rows[4].worst_ratio)); // k = 5 = L+1
    CHECK(std::isinf(rows[5].worst_ratio));
    CHECK_FALSE(std::isinf(rows[3].worst_ratio)); // k = L, certified probe

    std::ostringstream os;
    profile_to_csv(rows, os);
    const std::string csv = os.str();
    CHECK(csv.rfind("k,worst_ratio,argmax_support\n", 0) == 0);
    CHECK(csv.find("inf") != std::string::npos);
}

TEST_CASE("certificate JSON") {
    const ModelParams p = desk_params(4, 1.0, 1, 1);
    const MeasurementMatrix& M = shared_matrix(p);
    const Certificate cert = certify(M, 2);
    const json j = certificate_to_json(cert);
    CHECK(j.at("delta").get<std::string>() == "2/4");
    CHECK(j.at("verdict").get<std::string>() == "STABLY_IDENTIFIABLE");
    CHECK(j.at("checked_count").get<std::uint64_t>() == cert.checked_count);
}
