#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <sstream>

#include "dlmf/ckde.hpp"
#include "dlmf/simulation.hpp"
#include "dlmf/transform.hpp"

using namespace dlmf;
using Catch::Approx;

namespace {

Eigen::VectorXd iota_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = static_cast<double>(i + 1);
    return v;
}

//! Transform whose net outputs the constant c regardless of (x, z).
TrainedTransform constant_transform(int d, int p, double c) {
    TrainedTransform t;
    t.net = mlp_init({d + p, 4, 1}, 0);
    for (auto& w : t.net.weights) w.setZero();
    t.net.biases.back()(0) = c;
    t.ref = ReferenceDist::std_normal(p);
    t.d = d;
    return t;
}

Dataset constant_response_data(int n, int d, double c, std::uint64_t seed) {
    Dataset ds;
    RngStream rng(seed, "const-data");
    ds.x.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ds.x(i, j) = rng.next_normal();
    }
    ds.y = Eigen::VectorXd::Constant(n, c);
    return ds;
}

} // namespace

TEST_CASE("type-1 quantiles hit the expected order statistics", "[transform][oracle]") {
    const Eigen::VectorXd v = iota_vector(100);
    REQUIRE(empirical_quantile(v, 0.025) == 3.0);
    REQUIRE(empirical_quantile(v, 0.975) == 98.0);
    Eigen::VectorXd single(1);
    single << 7.0;
    REQUIRE(empirical_quantile(single, 0.3) == 7.0);
    REQUIRE(empirical_quantile(single, 0.9) == 7.0);
    REQUIRE_THROWS_AS(empirical_quantile(Eigen::VectorXd(), 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(empirical_quantile(v, 0.0), std::invalid_argument);
}

TEST_CASE("median takes the lower middle order statistic", "[transform][oracle]") {
    Eigen::VectorXd odd(3);
    odd << 9.0, 1.0, 2.0;
    REQUIRE(empirical_median(odd) == 2.0);
    Eigen::VectorXd even(4);
    even << 3.0, 9.0, 1.0, 2.0;
    REQUIRE(empirical_median(even) == 2.0);
}

TEST_CASE("quantile interval from a stub sample", "[transform][oracle]") {
    const Interval pi = quantile_pi_from_samples(iota_vector(100), 0.05);
    REQUIRE(pi.lower == 3.0);
    REQUIRE(pi.upper == 98.0);
    REQUIRE(pi.method == PiMethod::QPI);

    const Interval half = quantile_pi_from_samples(iota_vector(100), 0.5);
    REQUIRE(half.lower == 25.0);
    REQUIRE(half.upper == 75.0);

    // S below ceil(2/alpha) is refused
    REQUIRE_THROWS_AS(quantile_pi_from_samples(iota_vector(39), 0.05), std::invalid_argument);
    REQUIRE_NOTHROW(quantile_pi_from_samples(iota_vector(40), 0.05));
}

TEST_CASE("predict_samples on degenerate nets", "[transform]") {
    SECTION("all-zero parameters give all-zero draws") {
        TrainedTransform t = constant_transform(2, 3, 0.0);
        RngStream rng(1, "zero");
        const Eigen::VectorXd s = predict_samples(t, Eigen::VectorXd::Zero(2), 20, rng);
        REQUIRE(s.isZero(0.0));
        RngStream rng2(1, "zero2");
        REQUIRE(point_predict_l2(t, Eigen::VectorXd::Zero(2), 10, rng2) == 0.0);
    }
    SECTION("identical streams give identical draw vectors") {
        TrainedTransform t;
        t.net = mlp_init({4, 6, 1}, 3);
        t.ref = ReferenceDist::std_normal(2);
        t.d = 2;
        Eigen::VectorXd x(2);
        x << 0.5, -0.5;
        RngStream a(7, "mc");
        RngStream b(7, "mc");
        REQUIRE(predict_samples(t, x, 64, a) == predict_samples(t, x, 64, b));
    }
    SECTION("a net that ignores z is constant in the draws") {
        TrainedTransform t;
        t.net = mlp_init({3, 5, 1}, 11);
        t.net.weights[0].rightCols(2).setZero();   // zero out the z columns
        t.ref = ReferenceDist::std_normal(2);
        t.d = 1;
        Eigen::VectorXd x(1);
        x << 0.7;
        RngStream rng(2, "constz");
        const Eigen::VectorXd s = predict_samples(t, x, 50, rng);
        REQUIRE((s.array() == s(0)).all());
        RngStream rng2(2, "constz/l2");
        REQUIRE(point_predict_l2(t, x, 10, rng2) == Approx(s(0)));
        const Interval pi = quantile_pi_from_samples(s, 0.05);
        REQUIRE(pi.lower == pi.upper);   // degenerate distribution
    }
    SECTION("dimension mismatch is rejected") {
        TrainedTransform t = constant_transform(2, 1, 0.0);
        RngStream rng(1, "dim");
        REQUIRE_THROWS_AS(predict_samples(t, Eigen::VectorXd::Zero(3), 5, rng),
                          std::invalid_argument);
    }
}

TEST_CASE("zero-epoch training returns the initialized network", "[transform]") {
    Dataset ds = constant_response_data(30, 2, 0.5, 4);
    TrainSpec spec;
    spec.epochs = 0;
    spec.seed = 99;
    spec.hidden = {6};
    RngStream rng(5, "train0");
    const TrainedTransform t = train_transform(ds, ReferenceDist::std_normal(2), spec, rng);
    const Network init = mlp_init({4, 6, 1}, 99);
    for (std::size_t l = 0; l < init.num_layers(); ++l) {
        REQUIRE(t.net.weights[l] == init.weights[l]);
        REQUIRE(t.net.biases[l] == init.biases[l]);
    }
    REQUIRE(t.meta.epochs_run == 0);
    REQUIRE_FALSE(t.meta.stopped_early);
}

TEST_CASE("fitting a constant response reaches the constant", "[transform][oracle]") {
    const double c = 1.0;
    Dataset ds = constant_response_data(100, 2, c, 8);
    TrainSpec spec;
    spec.epochs = 2000;
    spec.lr = 1e-3;
    spec.optimizer = OptimizerKind::RMSProp;
    spec.seed = 21;
    spec.hidden = {8};

    RngStream init_rng(6, "const-fit");
    const TrainedTransform t = train_transform(ds, ReferenceDist::std_normal(1), spec, init_rng);

    // compare against the untouched initialization
    RngStream rng_again(6, "const-fit");
    TrainSpec zero_spec = spec;
    zero_spec.epochs = 0;
    const TrainedTransform init = train_transform(ds, ReferenceDist::std_normal(1), zero_spec, rng_again);
    REQUIRE(t.meta.final_train_loss < init.meta.final_train_loss);

    RngStream mc(6, "const-fit/mc");
    const double pred = point_predict_l2(t, ds.x.row(0).transpose(), 500, mc);
    REQUIRE(std::abs(pred - c) <= std::abs(c) * 0.05 + 0.05);
}

TEST_CASE("training descends on simulated data and is deterministic", "[transform]") {
    RngStream data_rng(1000, "rep/0/data");
    const Dataset ds = generate_model_data(SimModelId::Model3, 200, data_rng);
    TrainSpec spec;
    spec.epochs = 200;
    spec.lr = 1e-3;
    spec.optimizer = OptimizerKind::RMSProp;
    spec.seed = 13;
    spec.hidden = {16};

    RngStream a(2, "train");
    const TrainedTransform ta = train_transform(ds, ReferenceDist::std_normal(2), spec, a);
    RngStream b(2, "train");
    const TrainedTransform tb = train_transform(ds, ReferenceDist::std_normal(2), spec, b);
    for (std::size_t l = 0; l < ta.net.num_layers(); ++l) {
        REQUIRE(ta.net.weights[l] == tb.net.weights[l]);
        REQUIRE(ta.net.biases[l] == tb.net.biases[l]);
    }

    TrainSpec zero_spec = spec;
    zero_spec.epochs = 0;
    RngStream c(2, "train");
    const TrainedTransform init = train_transform(ds, ReferenceDist::std_normal(2), zero_spec, c);
    REQUIRE(ta.meta.final_train_loss < init.meta.final_train_loss);
}

TEST_CASE("early stopping bookkeeping", "[transform]") {
    // constant response: intervals collapse around the constant, so the
    // validation coverage check passes at the first opportunity
    const double c = 0.3;
    Dataset ds = constant_response_data(60, 2, c, 12);
    auto validation = std::make_shared<Dataset>(constant_response_data(20, 2, c, 13));

    TrainSpec spec;
    spec.epochs = 400;
    spec.lr = 5e-3;
    spec.optimizer = OptimizerKind::RMSProp;
    spec.seed = 3;
    spec.hidden = {8};
    EarlyStop es;
    es.period = 50;
    es.alpha = 0.05;
    es.validation = validation;
    es.draws = 60;
    spec.early_stop = es;

    RngStream rng(14, "earlystop");
    const TrainedTransform t = train_transform(ds, ReferenceDist::std_normal(1), spec, rng);
    REQUIRE(t.meta.epochs_run <= spec.epochs);
    REQUIRE(t.meta.stopped_early);
    REQUIRE(t.meta.epochs_run % es.period == 0);
    REQUIRE(t.meta.epochs_run < spec.epochs);

    // the period must not exceed the epoch budget
    TrainSpec bad = spec;
    bad.early_stop->period = 500;
    RngStream rng2(14, "earlystop2");
    REQUIRE_THROWS_AS(train_transform(ds, ReferenceDist::std_normal(1), bad, rng2),
                      std::invalid_argument);
}

TEST_CASE("early_stop_check applies the inclusive boundary rule", "[transform][oracle]") {
    Dataset val;
    val.x = Eigen::MatrixXd::Zero(20, 1);
    val.y = Eigen::VectorXd::Zero(20);
    std::vector<Interval> cover_all(20), cover_19(20), cover_18(20);
    for (int i = 0; i < 20; ++i) {
        Interval in;
        in.lower = -1.0;
        in.upper = 1.0;
        cover_all[i] = in;
        Interval out;
        out.lower = 2.0;
        out.upper = 3.0;
        cover_19[i] = i == 0 ? out : in;
        cover_18[i] = i <= 1 ? out : in;
    }
    REQUIRE(early_stop_check(cover_all, val, 0.05));
    REQUIRE(early_stop_check(cover_19, val, 0.05));    // exactly 0.95 with the >= rule
    REQUIRE_FALSE(early_stop_check(cover_18, val, 0.05));   // 0.90 < 0.95
}

TEST_CASE("qpi marginal consistency on a trained transform", "[transform][property]") {
    RngStream data_rng(1000, "rep/1/data");
    const Dataset ds = generate_model_data(SimModelId::Model1, 300, data_rng);
    TrainSpec spec;
    spec.epochs = 300;
    spec.seed = 5;
    spec.hidden = {16};
    RngStream rng(4, "qpi-marginal");
    const TrainedTransform t = train_transform(ds, ReferenceDist::std_normal(3), spec, rng);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
    const double alpha = 0.05;
    RngStream build(4, "qpi-marginal/build");
    const Interval pi = quantile_pi(t, x, 10000, alpha, build);
    RngStream fresh(4, "qpi-marginal/fresh");
    const Eigen::VectorXd draws = predict_samples(t, x, 10000, fresh);
    double inside = 0.0;
    for (Eigen::Index i = 0; i < draws.size(); ++i) inside += pi.contains(draws(i)) ? 1.0 : 0.0;
    inside /= static_cast<double>(draws.size());
    REQUIRE(inside >= 1.0 - alpha - 0.02);
    REQUIRE(inside <= 1.0 - alpha + 0.02);
}

TEST_CASE("two independent large draws are Kolmogorov-close", "[transform][property]") {
    TrainedTransform t;
    t.net = mlp_init({7, 10, 1}, 17);
    t.ref = ReferenceDist::std_normal(4);
    t.d = 3;
    Eigen::VectorXd x(3);
    x << 0.2, -0.3, 1.0;
    RngStream a(6, "gc/a");
    RngStream b(6, "gc/b");
    const double dist =
        kolmogorov_distance(predict_samples(t, x, 100000, a), predict_samples(t, x, 100000, b));
    REQUIRE(dist < 0.01);
}

TEST_CASE("transform serialization round-trips with header", "[transform]") {
    TrainedTransform t;
    t.net = mlp_init({6, 5, 1}, 19);
    t.ref = ReferenceDist::trunc_std_normal(2, -5.0, 5.0);
    t.d = 4;
    std::stringstream ss;
    save_transform(ss, t);
    const TrainedTransform back = load_transform(ss);
    REQUIRE(back.d == 4);
    REQUIRE(back.ref.kind == RefKind::TruncStdNormal);
    REQUIRE(back.method == "dlmf");
    for (std::size_t l = 0; l < t.net.num_layers(); ++l) REQUIRE(back.net.weights[l] == t.net.weights[l]);

    t.method = "dgwa";
    std::stringstream ss2;
    save_transform(ss2, t);
    REQUIRE(load_transform(ss2).method == "dgwa");

    // input dim must match d + p on load
    std::stringstream ss3;
    ss3 << "ref=normal:3;d=4\n";
    write_network(ss3, mlp_init({6, 5, 1}, 19));
    REQUIRE_THROWS_AS(load_transform(ss3), std::invalid_argument);
}
