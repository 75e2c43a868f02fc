#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "zakident/serialize.hpp"

using namespace zakident;
using testutil::desk_params;
using testutil::random_instance;
using Catch::Approx;

namespace {

// pinv through the thin SVD, used only to check the factorization identity
cmatrix pinv(const cmatrix& A) {
    Eigen::JacobiSVD<cmatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    cmatrix inv_s = cmatrix::Zero(s.size(), s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-12 * s(0)) inv_s(i, i) = 1.0 / s(i);
    return svd.matrixV() * inv_s * svd.matrixU().adjoint();
}

} // namespace

TEST_CASE("correlation matrix") {
    const ModelParams p = desk_params(5, 1.0, 3, 3);
    Rng rng = make_rng(1);
    const MeasurementMatrix& M = testutil::shared_matrix(p);

    SECTION("zero field: Z = 0, rank 0") {
        const CorrelationMatrix C = correlation(ZakField::zero(p));
        CHECK(C.Z.norm() == 0.0);
        CHECK(C.rank_estimate == 0);
    }

    SECTION("single active cell: rank 1") {
        const SpreadingFunction sf = random_spreading(p, SupportSet(std::vector<Cell>{{2, 1}}), rng).sf;
        const CorrelationMatrix C = correlation(simulate_response(sf, M));
        CHECK(C.rank_estimate == 1);
    }

    SECTION("three generic cells: rank 3") {
        const SpreadingFunction sf = random_instance(p, 3, rng);
        const CorrelationMatrix C = correlation(simulate_response(sf, M));
        CHECK(C.rank_estimate == 3);
    }

    SECTION("Hermitian PSD to round-off") {
        const SpreadingFunction sf = random_instance(p, 4, rng);
        const CorrelationMatrix C = correlation(simulate_response(sf, M));
        CHECK((C.Z - C.Z.adjoint()).norm() <= 1e-12 * C.Z.norm());
        CHECK(C.eig_values(C.eig_values.size() - 1) >= -1e-12 * C.eig_values(0));
        for (Eigen::Index i = 1; i < C.eig_values.size(); ++i)
            CHECK(C.eig_values(i) <= C.eig_values(i - 1)); // descending
    }
}

TEST_CASE("factor_Q") {
    const ModelParams p = desk_params(5, 1.0, 3, 3);
    Rng rng = make_rng(2);
    const MeasurementMatrix& M = testutil::shared_matrix(p);

    SECTION("rank 0 gives an empty factor") {
        const cmatrix Q = factor_Q(correlation(ZakField::zero(p)));
        CHECK(Q.cols() == 0);
    }

    SECTION("Z ~ Q Q^H and orthogonal columns") {
        for (int rep = 0; rep < 5; ++rep) {
            const SpreadingFunction sf = random_instance(p, 3, rng);
            const CorrelationMatrix C = correlation(simulate_response(sf, M));
            const cmatrix Q = factor_Q(C);
            CHECK((C.Z - Q * Q.adjoint()).norm() <= 1e-10 * C.Z.norm());
            cmatrix gram = Q.adjoint() * Q;
            gram.diagonal().setZero();
            CHECK(gram.norm() <= 1e-12 * Q.squaredNorm());
        }
    }
}

TEST_CASE("mmv_exhaustive") {
    const ModelParams p = desk_params(6, 1.0, 4, 4);
    Rng rng = make_rng(3);
    const MeasurementMatrix& M = testutil::shared_matrix(p);

    SECTION("zero measurement: empty support") {
        const auto got = mmv_exhaustive(factor_Q(correlation(ZakField::zero(p))), M, 3);
        REQUIRE(got.has_value());
        CHECK(got->empty());
    }

    SECTION("single-cell truth found at k = 1") {
        const SupportSet truth(std::vector<Cell>{{4, 2}});
        const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
        const auto got = mmv_exhaustive(factor_Q(correlation(simulate_response(sf, M))), M, 3);
        REQUIRE(got.has_value());
        CHECK(*got == truth);
    }

    SECTION("exact recovery of random |G| = 3 supports") {
        for (int rep = 0; rep < 25; ++rep) {
            const SupportSet truth = random_support(p, 3, rng);
            const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
            const auto got = mmv_exhaustive(factor_Q(correlation(simulate_response(sf, M))), M, 3);
            REQUIRE(got.has_value());
            CHECK(*got == truth);
        }
    }

    SECTION("infeasible when kmax is too small") {
        const SupportSet truth = random_support(p, 3, rng);
        const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
        const auto got = mmv_exhaustive(factor_Q(correlation(simulate_response(sf, M))), M, 2);
        CHECK_FALSE(got.has_value());
    }

    SECTION("budget error") {
        const SpreadingFunction sf = random_instance(p, 3, rng);
        const cmatrix Q = factor_Q(correlation(simulate_response(sf, M)));
        CHECK_THROWS_AS(mmv_exhaustive(Q, M, 3, kEpsFit, 100), budget_error);
    }
}

TEST_CASE("somp") {
    const ModelParams p = desk_params(6, 1.0, 4, 4);
    Rng rng = make_rng(4);
    const MeasurementMatrix& M = testutil::shared_matrix(p);

    SECTION("zero measurement: empty set") {
        CHECK(somp(factor_Q(correlation(ZakField::zero(p))), M, 3).empty());
    }

    SECTION("single-cell truth recovered exactly") {
        const SupportSet truth(std::vector<Cell>{{1, 5}});
        const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
        const SupportSet got = somp(factor_Q(correlation(simulate_response(sf, M))), M, 3);
        CHECK(got == truth);
    }

    SECTION("never beats the exhaustive search") {
        int somp_hits = 0, mmv_hits = 0;
        for (int rep = 0; rep < 20; ++rep) {
            const SupportSet truth = random_support(p, p.L / 2, rng);
            const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
            const cmatrix Q = factor_Q(correlation(simulate_response(sf, M)));
            if (somp(Q, M, p.L / 2) == truth) ++somp_hits;
            const auto mmv = mmv_exhaustive(Q, M, p.L / 2);
            if (mmv && *mmv == truth) ++mmv_hits;
        }
        CHECK(mmv_hits == 20);
        CHECK(somp_hits <= mmv_hits);
    }
}

TEST_CASE("music_support") {
    const ModelParams p = desk_params(6, 1.0, 4, 4);
    Rng rng = make_rng(5);
    const MeasurementMatrix& M = testutil::shared_matrix(p);

    SECTION("recovers |G| = L-1 supports exactly") {
        for (int rep = 0; rep < 20; ++rep) {
            const SupportSet truth = random_support(p, p.L - 1, rng);
            const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
            const CorrelationMatrix C = correlation(simulate_response(sf, M));
            CHECK(music_support(C, M) == truth);
        }
    }

    SECTION("single active cell") {
        const SupportSet truth(std::vector<Cell>{{3, 3}});
        const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
        const CorrelationMatrix C = correlation(simulate_response(sf, M));
        CHECK(C.rank_estimate == 1);
        CHECK(music_support(C, M) == truth);
    }

    SECTION("full-rank correlation matrix rejected") {
        const SupportSet truth = random_support(p, p.L, rng);
        const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
        const CorrelationMatrix C = correlation(simulate_response(sf, M));
        REQUIRE(C.rank_estimate == p.L);
        CHECK_THROWS_AS(music_support(C, M), precondition_error);
    }

    SECTION("score dichotomy between in- and out-of-support columns") {
        for (int rep = 0; rep < 10; ++rep) {
            const SupportSet truth = random_support(p, 4, rng);
            const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
            const CorrelationMatrix C = correlation(simulate_response(sf, M));
            const Eigen::VectorXd scores = music_scores(C, M);
            double max_in = 0.0, min_out = std::numeric_limits<double>::infinity();
            for (int idx = 0; idx < p.num_cells(); ++idx) {
                if (truth.contains({idx / p.L, idx % p.L}))
                    max_in = std::max(max_in, scores(idx));
                else
                    min_out = std::min(min_out, scores(idx));
            }
            CHECK(max_in <= 1e-9);
            CHECK(min_out >= 1e-3);
            CHECK(min_out / std::max(max_in, 1e-300) >= 1e3);
        }
    }
}

TEST_CASE("reconstruct") {
    const ModelParams p = desk_params(6, 0.5, 4, 4);
    Rng rng = make_rng(6);
    const MeasurementMatrix& M = testutil::shared_matrix(p);

    SECTION("round trip on the true support") {
        for (int rep = 0; rep < 10; ++rep) {
            const SpreadingFunction sf = random_instance(p, 3, rng);
            const ZakField zf = simulate_response(sf, M);
            const Reconstruction rec = reconstruct(zf, sf.support, M);
            CHECK(rec.residual <= 1e-10);
            const double err = hs_norm(linear_combination(1.0, rec.sf, -1.0, sf));
            CHECK(err <= 1e-9 * hs_norm(sf));
        }
    }

    SECTION("zero field gives the zero function") {
        const SupportSet g = random_support(p, 3, rng);
        const Reconstruction rec = reconstruct(ZakField::zero(p), g, M);
        CHECK(hs_norm(rec.sf) == 0.0);
        CHECK(rec.residual == 0.0);
    }

    SECTION("wrong disjoint support leaves a large residual") {
        for (int rep = 0; rep < 10; ++rep) {
            const SupportSet truth = random_support(p, 3, rng);
            std::vector<int> rest;
            for (int idx = 0; idx < p.num_cells(); ++idx)
                if (!truth.contains({idx / p.L, idx % p.L})) rest.push_back(idx);
            Rng pick = make_rng(rng());
            std::vector<int> chosen = random_subset(static_cast<int>(rest.size()), 3, pick);
            std::vector<int> wrong_idx;
            for (int c : chosen) wrong_idx.push_back(rest[static_cast<std::size_t>(c)]);
            const SupportSet wrong = SupportSet::from_indices(p.L, wrong_idx);

            const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
            const Reconstruction rec = reconstruct(simulate_response(sf, M), wrong, M);
            CHECK(rec.residual > 1e-3);
        }
    }

    SECTION("too many columns rejected") {
        const SupportSet g = random_support(p, p.L + 1, rng);
        CHECK_THROWS_AS(reconstruct(ZakField::zero(p), g, M), precondition_error);
    }
}

TEST_CASE("gram_rank") {
    const ModelParams p = desk_params(5, 1.0, 3, 3);
    Rng rng = make_rng(7);

    SECTION("proportional stacked fields are detected as dependent") {
        // build two cells whose *phased* fields are proportional
        const SupportSet support(std::vector<Cell>{{0, 1}, {2, 3}});
        cmatrix field = cmatrix::Zero(p.num_cells(), p.grid_size());
        cvector profile(p.grid_size());
        for (Eigen::Index g = 0; g < profile.size(); ++g) profile(g) = complex_gaussian(rng);
        field.row(0 * p.L + 1) = profile.transpose();
        field.row(2 * p.L + 3) = 2.0 * profile.transpose();
        const SpreadingFunction sf = devectorize(CellVectorField(p, field), support);
        CHECK_FALSE(gram_rank(sf).full_rank);
    }

    SECTION("generic cells are independent when the grid is fine enough") {
        for (int rep = 0; rep < 10; ++rep) {
            const SpreadingFunction sf = random_instance(p, 4, rng); // 4 <= Nt*Nf = 9
            CHECK(gram_rank(sf).full_rank);
        }
    }

    SECTION("more cells than grid samples cannot be independent") {
        const ModelParams tiny = desk_params(4, 1.0, 1, 2); // Nt*Nf = 2
        const SpreadingFunction sf = random_instance(tiny, 3, rng);
        CHECK_FALSE(gram_rank(sf).full_rank);
    }

    SECTION("empty support rejected") {
        const SpreadingFunction sf = SpreadingFunction::zero(p, SupportSet{});
        CHECK_THROWS_AS(gram_rank(sf), precondition_error);
    }
}

TEST_CASE("methods agree on small supports") {
    const ModelParams p = desk_params(6, 1.0, 4, 4);
    Rng rng = make_rng(8);
    const MeasurementMatrix& M = testutil::shared_matrix(p);
    for (int rep = 0; rep < 15; ++rep) {
        const int size = 1 + static_cast<int>(rng() % 3); // up to floor(L/2)
        const SupportSet truth = random_support(p, size, rng);
        const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
        REQUIRE(gram_rank(sf).full_rank);
        const CorrelationMatrix C = correlation(simulate_response(sf, M));
        const auto mmv = mmv_exhaustive(factor_Q(C), M, p.L / 2);
        REQUIRE(mmv.has_value());
        CHECK(*mmv == truth);
        CHECK(music_support(C, M) == truth);
    }
}

TEST_CASE("factorization identity on the recovered support") {
    const ModelParams p = desk_params(6, 1.0, 4, 4);
    Rng rng = make_rng(9);
    const MeasurementMatrix& M = testutil::shared_matrix(p);
    for (int rep = 0; rep < 5; ++rep) {
        const SupportSet truth = random_support(p, 3, rng);
        const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
        const CorrelationMatrix C = correlation(simulate_response(sf, M));
        const auto got = mmv_exhaustive(factor_Q(C), M, 3);
        REQUIRE(got.has_value());
        const cmatrix A_g = submatrix(M, *got);
        const cmatrix P = pinv(A_g);
        const cmatrix S = P * C.Z * P.adjoint();
        CHECK((C.Z - A_g * S * A_g.adjoint()).norm() <= 1e-9 * C.Z.norm());
    }
}

TEST_CASE("run_recovery end to end") {
    const ModelParams p = desk_params(6, 1.0, 4, 4);
    Rng rng = make_rng(10);
    const MeasurementMatrix& M = testutil::shared_matrix(p);
    const SupportSet truth = random_support(p, 3, rng);
    const SpreadingFunction sf = random_spreading(p, truth, rng).sf;
    const ZakField zf = simulate_response(sf, M);

    for (Method method : {Method::MmvExhaustive, Method::Somp, Method::Music}) {
        RecoveryOptions opts;
        opts.kmax = 3;
        const RecoveryReport rep = run_recovery(zf, M, method, opts, &sf);
        INFO(method_name(method));
        CHECK(rep.feasible);
        if (rep.support_estimate == truth) {
            CHECK(rep.support_exact.value_or(false));
            CHECK(rep.reconstruction_ok.value_or(false));
            CHECK(rep.residual <= 1e-9);
            const StabilityBounds b = stability_bounds(M, truth);
            CHECK(rep.alpha == Approx(b.alpha));
            CHECK(rep.beta == Approx(b.beta));
        }
        const json j = report_to_json(rep);
        CHECK(j.at("method").get<std::string>() == method_name(method));
        CHECK(j.at("support").size() == rep.support_estimate.size());
    }
}
