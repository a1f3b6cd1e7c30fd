#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mcmpc/stage1.hpp"
#include "test_oracles.hpp"

using namespace mcmpc;

namespace {

VerticalTask constant_task(int n, double ref, double reach, double floor_z,
                           double ceiling_z) {
    VerticalTask t;
    t.reference = Vec::Constant(n, ref);
    t.reach = reach;
    t.com_floor = floor_z;
    t.com_ceiling = ceiling_z;
    return t;
}

}  // namespace

TEST_CASE("resting inside the band is a zero-jerk fixed point") {
    const PreviewMatrices m = build_preview_matrices({16, 0.1});
    const VerticalTask t = constant_task(16, 0.8, 0.3, 0.3, 1.2);
    const VerticalPlan plan = solve_stage1(t, {0.8, 0.0, 0.0}, m);
    CHECK(plan.jerks.lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((plan.heights.array() - 0.8).abs().maxCoeff() <= 1e-9);
    CHECK(plan.velocities.lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(plan.accelerations.lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("planned heights stay inside the band and the absolute limits") {
    const PreviewMatrices m = build_preview_matrices({16, 0.1});
    SUBCASE("descending start is braked inside the band") {
        // at the band top edge moving down: the plan must brake before 0.55
        const VerticalTask t = constant_task(16, 0.6, 0.05, 0.4, 1.2);
        const VerticalPlan plan = solve_stage1(t, {0.65, -0.3, 0.0}, m);
        CHECK(plan.jerks.squaredNorm() > 1e-6);  // braking requires action
        for (int k = 0; k < 16; ++k) {
            CHECK(plan.heights(k) >= 0.55 - 1e-7);
            CHECK(plan.heights(k) <= 0.65 + 1e-7);
        }
    }
    SUBCASE("ceiling caps the band") {
        VerticalTask t = constant_task(16, 1.3, 0.2, 0.3, 1.2);
        const VerticalPlan plan = solve_stage1(t, {1.15, 0.0, 0.0}, m);
        CHECK(plan.heights.maxCoeff() <= 1.2 + 1e-7);
        CHECK(plan.heights.minCoeff() >= 1.1 - 1e-7);
    }
}

TEST_CASE("empty admissible window is rejected before solving") {
    const PreviewMatrices m = build_preview_matrices({8, 0.1});
    SUBCASE("band entirely below the floor") {
        const VerticalTask t = constant_task(8, 0.2, 0.05, 0.4, 1.2);
        CHECK_THROWS_AS(build_stage1_qp(t, {0.8, 0.0, 0.0}, m), ModelError);
    }
    SUBCASE("band entirely above the ceiling") {
        const VerticalTask t = constant_task(8, 1.5, 0.1, 0.4, 1.2);
        CHECK_THROWS_AS(build_stage1_qp(t, {0.8, 0.0, 0.0}, m), ModelError);
    }
    SUBCASE("reference length mismatch") {
        const VerticalTask t = constant_task(7, 0.8, 0.3, 0.3, 1.2);
        CHECK_THROWS_AS(build_stage1_qp(t, {0.8, 0.0, 0.0}, m), StructuralError);
    }
}

TEST_CASE("returned trajectories are consistent with the jerk sequence") {
    const PreviewMatrices m = build_preview_matrices({16, 0.1});
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double ref = 0.6 + 0.3 * std::abs(uni(rng));
        const VerticalTask t = constant_task(16, ref, 0.25, 0.3, 1.2);
        AxisState s{ref + 0.1 * uni(rng), 0.2 * uni(rng), 0.2 * uni(rng)};
        const VerticalPlan plan = solve_stage1(t, s, m);
        for (int k = 0; k < 16; ++k) {
            s = propagate_axis(s, plan.jerks(k), 0.1);
            CHECK(std::abs(plan.heights(k) - s.position) <= 1e-9);
            CHECK(std::abs(plan.velocities(k) - s.velocity) <= 1e-9);
            CHECK(std::abs(plan.accelerations(k) - s.acceleration) <= 1e-9);
        }
    }
}

TEST_CASE("the plan is certified jerk-minimal by an exhaustive reference solve") {
    const PreviewMatrices m = build_preview_matrices({4, 0.1});
    const VerticalTask t = constant_task(4, 0.6, 0.05, 0.3, 1.2);
    const AxisState s0{0.68, 0.0, 0.0};
    const QpProblem qp = build_stage1_qp(t, s0, m);
    const VerticalPlan plan = solve_stage1(t, s0, m);
    const testing::OracleResult oracle = testing::active_set_oracle(qp);
    REQUIRE(oracle.feasible);
    const double obj = 0.5 * plan.jerks.dot(qp.hessian * plan.jerks) +
                       qp.gradient.dot(plan.jerks);
    CHECK(std::abs(obj - oracle.objective) <= 1e-6 * std::max(1.0, std::abs(obj)));
    CHECK((plan.jerks - oracle.primal).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("centering keeps the band inactive at the midpoint") {
    const PreviewMatrices m = build_preview_matrices({16, 0.1});
    VerticalTask t = constant_task(16, 0.8, 0.2, 0.3, 1.2);
    t.centering = true;
    // already at the band midpoint: centering term adds no incentive to move
    const VerticalPlan plan = solve_stage1(t, {0.8, 0.0, 0.0}, m);
    CHECK(plan.jerks.lpNorm<Eigen::Infinity>() <= 1e-6);
    // off-midpoint start: centering pulls the tail of the plan toward 0.8
    const VerticalPlan off = solve_stage1(t, {0.95, 0.0, 0.0}, m);
    CHECK(std::abs(off.heights(15) - 0.8) < 0.15);
}
