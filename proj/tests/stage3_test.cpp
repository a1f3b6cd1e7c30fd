#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mcmpc/stage3.hpp"
#include "test_oracles.hpp"

using namespace mcmpc;

namespace {

const CentroidalParams kParams{30.0, 9.81};

std::vector<StepState> rest_states(int n, const Vec3& com) {
    std::vector<StepState> s(n);
    for (auto& st : s) st.com = com;
    return s;
}

ContactCandidate make_candidate(const std::string& id, const Vec3& point, double mu,
                                double weight) {
    ContactCandidate c;
    c.id = id;
    c.point = point;
    c.mu = mu;
    c.weight = weight;
    return c;
}

}  // namespace

TEST_CASE("friction pyramid on a flat contact") {
    const FrictionPyramid pyr = FrictionPyramid::from_contact(Vec3::UnitZ(), 0.5);
    SUBCASE("tangential force inside the inner bound is feasible") {
        CHECK(friction_check(pyr, Vec3(0.3, 0.0, 1.0)).feasible);
        CHECK(friction_check(pyr, Vec3(0.0, -0.3, 1.0)).feasible);
    }
    SUBCASE("tangential force past mu/sqrt(2) is rejected") {
        const FrictionResult r = friction_check(pyr, Vec3(0.4, 0.0, 1.0));
        CHECK_FALSE(r.feasible);
        CHECK(r.violation > 0.04);
    }
    SUBCASE("pulling on the surface is rejected") {
        CHECK_FALSE(friction_check(pyr, Vec3(0.0, 0.0, -1.0)).feasible);
    }
    SUBCASE("facet rows are orthogonal tangent pairs") {
        // rows 0/1 and 2/3 differ only in the tangent sign; their sum is the
        // shared normal part -2 * (mu/sqrt(2)) * n
        const double bound = 0.5 / std::sqrt(2.0);
        CHECK((pyr.facets.row(0) + pyr.facets.row(1) +
               2.0 * bound * Vec3::UnitZ().transpose())
                  .norm() <= 1e-12);
        const Vec3 t1 = (pyr.facets.row(0) - pyr.facets.row(1)).transpose() / 2.0;
        const Vec3 t2 = (pyr.facets.row(2) - pyr.facets.row(3)).transpose() / 2.0;
        CHECK(std::abs(t1.dot(t2)) <= 1e-12);
        CHECK(std::abs(t1.dot(Vec3::UnitZ())) <= 1e-12);
    }
    SUBCASE("invalid construction") {
        CHECK_THROWS_AS(FrictionPyramid::from_contact(Vec3(0, 0, 2), 0.5), StructuralError);
        CHECK_THROWS_AS(FrictionPyramid::from_contact(Vec3::UnitZ(), 0.0), StructuralError);
    }
}

TEST_CASE("tilted-normal pyramid admits forces along the surface normal") {
    const Vec3 n = Vec3(1.0, 0.0, 1.0).normalized();
    const FrictionPyramid pyr = FrictionPyramid::from_contact(n, 0.4);
    CHECK(friction_check(pyr, 10.0 * n).feasible);
    CHECK_FALSE(friction_check(pyr, -n).feasible);
    // force perpendicular to the normal carries no normal load
    const Vec3 t = Vec3(1.0, 0.0, -1.0).normalized();
    CHECK_FALSE(friction_check(pyr, t).feasible);
}

TEST_CASE("zero slack selects the preferred candidate with zero force") {
    const std::vector<ContactCandidate> cands = {
        make_candidate("wall", {0.4, 0.0, 0.9}, 0.6, 0.1)};
    const Mat delta = Mat::Zero(16, 2);
    const ContactDecision dec =
        solve_contact_selection(cands, delta, rest_states(16, {0.0, 0.0, 0.8}), kParams);
    CHECK(dec.selected == "wall");
    CHECK(dec.fz_trajectory.norm() == 0.0);
    CHECK(dec.f_xy_trajectory.norm() == 0.0);
    CHECK(dec.objective == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("selection priority weight orders otherwise identical candidates") {
    std::vector<ContactCandidate> cands = {
        make_candidate("b_near", {0.25, 0.1, 0.9}, 0.8, 0.2),
        make_candidate("a_near", {0.25, -0.1, 0.9}, 0.8, 0.1)};
    Mat delta = Mat::Zero(8, 2);
    delta(0, 0) = 0.02;
    delta(1, 0) = 0.01;
    const std::vector<StepState> states = rest_states(8, {0.0, 0.0, 0.8});
    ContactDecision dec = solve_contact_selection(cands, delta, states, kParams);
    // symmetric placement: force costs match, the lighter weight wins
    CHECK(dec.selected == "a_near");

    cands[1].weight = 0.3;  // flip the ordering
    dec = solve_contact_selection(cands, delta, states, kParams);
    CHECK(dec.selected == "b_near");

    cands[1].weight = 0.2;  // exact tie: lexicographically smaller id wins
    dec = solve_contact_selection(cands, delta, states, kParams);
    CHECK(dec.selected == "a_near");
}

TEST_CASE("friction-infeasible candidate is skipped for a workable one") {
    // "far" sits nearly above the requested shift direction: realizing the
    // slack needs a tangential/normal ratio beyond its cone
    std::vector<ContactCandidate> cands = {
        make_candidate("far", {1.2, 0.0, 0.9}, 0.3, 0.0),
        make_candidate("near", {0.15, 0.0, 0.9}, 0.8, 0.5)};
    Mat delta = Mat::Zero(8, 2);
    delta.col(0).setConstant(0.03);
    const std::vector<StepState> states = rest_states(8, {0.0, 0.0, 0.8});
    const ContactDecision dec = solve_contact_selection(cands, delta, states, kParams);
    CHECK(dec.selected == "near");

    // with the workable candidate unreachable nothing remains
    cands[1].reachable = false;
    CHECK_THROWS_AS(solve_contact_selection(cands, delta, states, kParams), ModelError);
}

TEST_CASE("realized forces reproduce the slack trajectory and obey friction") {
    std::mt19937 rng(51);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 8;
        std::vector<StepState> states(n);
        for (auto& s : states) {
            s.com = Vec3(0.05 * uni(rng), 0.05 * uni(rng), 0.8 + 0.05 * uni(rng));
            s.com_acc = Vec3(0.3 * uni(rng), 0.3 * uni(rng), 0.0);
        }
        Mat delta = Mat::Zero(n, 2);
        for (int k = 0; k < n; ++k) {
            delta(k, 0) = 0.02 * uni(rng);
            delta(k, 1) = 0.02 * uni(rng);
        }
        const std::vector<ContactCandidate> cands = {
            make_candidate("post", {0.2 * uni(rng), 0.2 * uni(rng), 0.9}, 0.8, 0.0)};
        ContactDecision dec;
        try {
            dec = solve_contact_selection(cands, delta, states, kParams);
        } catch (const ModelError&) {
            continue;  // geometry happened to be infeasible; not under test here
        }
        const FrictionPyramid pyr =
            FrictionPyramid::from_contact(cands[0].normal, cands[0].mu);
        for (int k = 0; k < n; ++k) {
            ExternalContact c;
            c.force = Vec3(dec.f_xy_trajectory(k, 0), dec.f_xy_trajectory(k, 1),
                           dec.fz_trajectory(k));
            c.point = cands[0].point;
            const Vec2 back = delta_zmp(kParams, states[k].com, states[k].com_acc, c);
            CHECK((back - delta.row(k).transpose()).lpNorm<Eigen::Infinity>() <= 1e-8);
            if (delta.row(k).cwiseAbs().maxCoeff() > 1e-9)
                CHECK(friction_check(pyr, c.force).violation <= 1e-9);
        }
    }
}

TEST_CASE("selection matches an independent per-step reference over random instances") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    int solved = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 10)(rng);
        std::vector<StepState> states(n);
        for (auto& s : states) {
            s.com = Vec3(0.1 * uni(rng), 0.1 * uni(rng), 0.75 + 0.1 * uni(rng));
            s.com_acc = Vec3(0.5 * uni(rng), 0.5 * uni(rng), 0.2 * uni(rng));
        }
        Mat delta = Mat::Zero(n, 2);
        for (int k = 0; k < n; ++k)
            if (uni(rng) > -0.5) {
                delta(k, 0) = 0.03 * uni(rng);
                delta(k, 1) = 0.03 * uni(rng);
            }
        const int nc = std::uniform_int_distribution<int>(1, 6)(rng);
        std::vector<ContactCandidate> cands;
        for (int i = 0; i < nc; ++i) {
            ContactCandidate c = make_candidate(
                "c" + std::to_string(i),
                {0.6 * uni(rng), 0.6 * uni(rng), 0.6 + 0.4 * std::abs(uni(rng))},
                0.2 + 0.6 * std::abs(uni(rng)), 0.2 * std::abs(uni(rng)));
            c.reachable = uni(rng) > -0.8;
            cands.push_back(c);
        }

        const testing::ContactRef ref =
            testing::reference_contact_selection(cands, delta, states, kParams);
        if (!ref.found) {
            CHECK_THROWS_AS(solve_contact_selection(cands, delta, states, kParams),
                            ModelError);
            continue;
        }
        const ContactDecision dec = solve_contact_selection(cands, delta, states, kParams);
        CHECK(dec.selected == ref.id);
        CHECK(std::abs(dec.objective - ref.objective) <= 1e-9);
        CHECK((dec.fz_trajectory - ref.fz).lpNorm<Eigen::Infinity>() <= 1e-6);
        ++solved;
    }
    CHECK(solved >= 30);  // the generator must exercise the feasible path too
}

TEST_CASE("structural validation of stage-3 inputs") {
    const std::vector<StepState> states = rest_states(4, {0, 0, 0.8});
    SUBCASE("empty candidate list") {
        CHECK_THROWS_AS(solve_contact_selection({}, Mat::Zero(4, 2), states, kParams),
                        StructuralError);
    }
    SUBCASE("slack row count mismatch") {
        CHECK_THROWS_AS(
            solve_contact_selection({make_candidate("a", {0.3, 0, 0.9}, 0.5, 0.0)},
                                    Mat::Zero(3, 2), states, kParams),
            StructuralError);
    }
    SUBCASE("candidate validation failures") {
        ContactCandidate bad = make_candidate("a", {0.3, 0.0, 0.9}, 0.5, 0.0);
        bad.normal = Vec3(0, 0, 2);
        CHECK_THROWS_AS(solve_contact_selection({bad}, Mat::Zero(4, 2), states, kParams),
                        StructuralError);
        bad = make_candidate("a", {0.3, 0.0, -0.2}, 0.5, 0.0);
        CHECK_THROWS_AS(solve_contact_selection({bad}, Mat::Zero(4, 2), states, kParams),
                        StructuralError);
        bad = make_candidate("a", {0.3, 0.0, 0.9}, 0.5, -1.0);
        CHECK_THROWS_AS(solve_contact_selection({bad}, Mat::Zero(4, 2), states, kParams),
                        StructuralError);
    }
}
