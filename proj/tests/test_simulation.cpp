#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dlmf/simulation.hpp"

using namespace dlmf;
using Catch::Approx;

TEST_CASE("conditional means follow the model formulas", "[simulation][oracle]") {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
    REQUIRE(true_conditional_mean(SimModelId::Model1, x0) == Approx(1.0));   // 0 + e^0 + sin 0

    Eigen::VectorXd x2(5);
    x2 << 1.0, 0.0, 0.0, 2.0, 3.0;
    REQUIRE(true_conditional_mean(SimModelId::Model2, x2) == Approx(1.0));   // 1 + 1 + 2 - 3

    RngStream rng(17, "mean3");
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXd x(5);
        for (int j = 0; j < 5; ++j) x(j) = rng.next_normal();
        REQUIRE(true_conditional_mean(SimModelId::Model3, x) == 0.0);
    }
}

TEST_CASE("generated predictors and noise stay inside the truncation box", "[simulation]") {
    RngStream rng(5, "trunc-box");
    for (SimModelId id : {SimModelId::Model1, SimModelId::Model2, SimModelId::Model3}) {
        RngStream sub = rng.child(std::to_string(static_cast<int>(id)));
        const Dataset ds = generate_model_data(id, 500, sub);
        REQUIRE(ds.x.minCoeff() >= -5.0);
        REQUIRE(ds.x.maxCoeff() <= 5.0);
        for (Eigen::Index i = 0; i < ds.n(); ++i) {
            const Eigen::VectorXd x = ds.x.row(i).transpose();
            const double resid = ds.y(i) - true_conditional_mean(id, x);
            switch (id) {
                case SimModelId::Model1:
                    REQUIRE(std::abs(resid) <= 5.0);
                    break;
                case SimModelId::Model2:
                    REQUIRE(std::abs(resid) <= 5.0 * (0.5 + x(1) * x(1) / 2.0 + x(4) * x(4) / 2.0));
                    break;
                case SimModelId::Model3:
                    // one of the two mixture centers must explain the draw
                    REQUIRE(std::min(std::abs(ds.y(i) - x(0)), std::abs(ds.y(i) + x(0))) <=
                            5.0 * 0.25);
                    break;
            }
        }
    }
}

TEST_CASE("model-3 at x1 = 0 collapses to N(0, 0.25^2)", "[simulation][oracle]") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
    RngStream rng(21, "m3");
    const Eigen::VectorXd draws = sample_conditional(SimModelId::Model3, x, 10000, rng);
    REQUIRE(std::abs(draws.mean()) < 0.01);
    const double sd = std::sqrt((draws.array() - draws.mean()).square().sum() / (draws.size() - 1));
    REQUIRE(sd == Approx(0.25).margin(0.02));
}

TEST_CASE("model-1 conditional draws at the origin center on one", "[simulation]") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
    RngStream rng(22, "m1");
    const Eigen::VectorXd draws = sample_conditional(SimModelId::Model1, x, 10000, rng);
    REQUIRE(draws.mean() == Approx(1.0).margin(0.05));
}

TEST_CASE("conditional sampling is deterministic per stream", "[simulation]") {
    Eigen::VectorXd x(5);
    x << 0.3, -1.2, 0.7, 2.0, -0.4;
    RngStream a(9, "det");
    RngStream b(9, "det");
    REQUIRE(sample_conditional(SimModelId::Model2, x, 1, a)(0) ==
            sample_conditional(SimModelId::Model2, x, 1, b)(0));
}

TEST_CASE("conditional draw means agree with the oracle mean at random points", "[simulation][oracle]") {
    RngStream xrng(33, "points");
    const Eigen::MatrixXd points = sample_sim_predictors(20, xrng);
    for (SimModelId id : {SimModelId::Model1, SimModelId::Model2, SimModelId::Model3}) {
        for (int t = 0; t < 20; ++t) {
            const Eigen::VectorXd x = points.row(t).transpose();
            RngStream rng(33, "draws/" + std::to_string(static_cast<int>(id)) + "/" + std::to_string(t));
            const Eigen::VectorXd draws = sample_conditional(id, x, 100000, rng);
            const double sd =
                std::sqrt((draws.array() - draws.mean()).square().sum() / (draws.size() - 1));
            const double slack = 4.0 * sd / std::sqrt(static_cast<double>(draws.size()));
            REQUIRE(std::abs(draws.mean() - true_conditional_mean(id, x)) <= slack);
        }
    }
}
