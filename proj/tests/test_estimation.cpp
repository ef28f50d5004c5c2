#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vdll/estimation.hpp"
#include "vdll/scenario.hpp"

#include "support.hpp"

#include <cmath>
#include <random>

using namespace vdll;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using namespace vdll::test;

TEST_CASE("process model") {
    ProcessNoise psd;
    SUBCASE("dt = 0") {
        const ProcessModel m = make_process_model(0.0, psd);
        CHECK(m.transition == StateMatrix::Identity());
        CHECK(m.noise.isZero(0.0));
    }
    SUBCASE("integrator") {
        const ProcessModel m = make_process_model(0.1, psd);
        StateVector x = StateVector::Zero();
        x(kVelX) = 10.0;
        x(kClockDrift) = 2.0;
        const StateVector y = m.transition * x;
        CHECK(y(kPosX) == doctest::Approx(1.0));
        CHECK(y(kClockBias) == doctest::Approx(0.2));
    }
    SUBCASE("Q symmetric PSD") {
        std::mt19937_64 gen(1);
        std::uniform_real_distribution<double> u(0.0, 10.0);
        for (int i = 0; i < 50; ++i) {
            const ProcessModel m = make_process_model(u(gen) * 0.1, {u(gen), u(gen), u(gen)});
            REQUIRE(m.noise == m.noise.transpose());
            Eigen::SelfAdjointEigenSolver<StateMatrix> eig(m.noise);
            REQUIRE(eig.eigenvalues().minCoeff() >= -1e-12);
        }
    }
    SUBCASE("hand-computed double integrator") {
        // [1 dt; 0 1] P [1 0; dt 1] + S [dt^3/3 dt^2/2; dt^2/2 dt] with P = diag(4, 1), S = 2, dt = 0.5
        ProcessNoise p{2.0, 0.0, 0.0};
        FilterState s;
        s.P = StateMatrix::Zero();
        s.P(kPosX, kPosX) = 4.0;
        s.P(kVelX, kVelX) = 1.0;
        const FilterState out = kf_predict(s, make_process_model(0.5, p));
        CHECK(out.P(kPosX, kPosX) == doctest::Approx(4.0 + 0.25 + 2.0 * 0.125 / 3.0));
        CHECK(out.P(kPosX, kVelX) == doctest::Approx(0.5 + 2.0 * 0.125));
        CHECK(out.P(kVelX, kVelX) == doctest::Approx(1.0 + 2.0 * 0.5));
    }
}

TEST_CASE("kf_predict") {
    std::mt19937_64 gen(2);
    FilterState s;
    s.x = StateVector::Random();
    s.P = random_spd(kStateDim, gen);
    ProcessModel id;
    const FilterState same = kf_predict(s, id);
    CHECK(same.x == s.x);
    CHECK(rel(same.P, s.P) < 1e-15);

    const ProcessModel m = make_process_model(1.0, {});
    const FilterState out = kf_predict(s, m);
    CHECK(out.P.trace() >= (m.transition * s.P * m.transition.transpose()).trace());
}

TEST_CASE("measurement model") {
    SUBCASE("collinear geometry") {
        StateVector x = StateVector::Zero();
        x(kPosX) = 6378137.0;
        x(kClockBias) = 12.0;
        SatelliteState sv;
        sv.sv_id = 3;
        sv.position = {26560000.0, 0.0, 0.0};
        const std::vector<SatelliteState> sats{sv};
        const MeasurementModel mm = measurement_model(x, sats);
        CHECK(mm.predicted(0) == 20181863.0 + 12.0);
        Eigen::RowVectorXd expected(8);
        expected << -1, 0, 0, 0, 0, 0, 1, 0;
        CHECK((mm.jacobian.row(0) - expected).norm() < 1e-15);
        CHECK(mm.row_of(3) == 0);
        CHECK_THROWS_AS(mm.row_of(4), std::out_of_range);
    }
    SUBCASE("central differences") {
        std::mt19937_64 gen(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const ConstellationConfig c;
        for (int trial = 0; trial < 100; ++trial) {
            const GeodeticCoord g{u(gen) * 1.4, u(gen) * kPi, 1000.0 * (u(gen) + 1.0)};
            StateVector x = StateVector::Zero();
            x.segment<3>(kPosX) = geodetic_to_ecef(g).vec();
            x(kClockBias) = 100.0 * u(gen);
            const auto sats = propagate_constellation(c, 500.0 * (u(gen) + 1.0));
            const MeasurementModel mm = measurement_model(x, sats);
            for (Eigen::Index i = 0; i < mm.jacobian.rows(); ++i) CHECK(mm.jacobian(i, kClockBias) == 1.0);
            const double eps = 0.1;
            for (int j = 0; j < kStateDim; ++j) {
                StateVector xp = x, xm = x;
                xp(j) += eps;
                xm(j) -= eps;
                const VectorXd fd = (pseudorange_model(xp, sats) - pseudorange_model(xm, sats)) / (2 * eps);
                const VectorXd col = mm.jacobian.col(j);
                for (Eigen::Index i = 0; i < fd.size(); ++i) {
                    const double denom = std::max(std::abs(col(i)), 1e-3);
                    REQUIRE(std::abs(fd(i) - col(i)) / denom < 1e-4);
                }
            }
        }
    }
}

TEST_CASE("ekf and linear updates") {
    SUBCASE("scalar hand computation") {
        FilterState s;
        s.x = StateVector::Zero();
        s.P = StateMatrix::Identity();
        s.P(0, 0) = 4.0;
        MatrixXd H = MatrixXd::Zero(1, 8);
        H(0, 0) = 1.0;
        VectorXd y(1), r(1);
        y << 3.0;
        r << 2.0;
        const UpdateResult u = linear_update(s, y, H, r);
        CHECK(u.applied);
        CHECK(u.posterior.x(0) == doctest::Approx(4.0 / 6.0 * 3.0));
        // P+ = P - K^2 S
        CHECK(u.posterior.P(0, 0) == doctest::Approx(4.0 - (4.0 / 6.0) * (4.0 / 6.0) * 6.0));
        CHECK(u.posterior.P(0, 0) <= s.P(0, 0));
    }
    SUBCASE("zero innovation and huge R") {
        std::mt19937_64 gen(4);
        FilterState s;
        s.x = StateVector::Random();
        s.P = random_spd(8, gen);
        const MatrixXd H = MatrixXd::Random(5, 8);
        const UpdateResult z = linear_update(s, VectorXd::Zero(5), H, VectorXd::Ones(5));
        CHECK((z.posterior.x - s.x).norm() == 0.0);
        const UpdateResult big = linear_update(s, VectorXd::Constant(5, 10.0), H, VectorXd::Constant(5, 1e18));
        CHECK((big.posterior.x - s.x).norm() < 1e-12);
    }
    SUBCASE("matches the textbook update") {
        std::mt19937_64 gen(5);
        std::normal_distribution<double> nd;
        for (int trial = 0; trial < 100; ++trial) {
            FilterState s;
            for (int i = 0; i < 8; ++i) s.x(i) = nd(gen);
            s.P = random_spd(8, gen);
            const int m = 4 + trial % 5;
            MatrixXd H(m, 8);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < 8; ++j) H(i, j) = nd(gen);
            VectorXd y(m), r(m);
            for (int i = 0; i < m; ++i) {
                y(i) = nd(gen);
                r(i) = 0.5 + std::abs(nd(gen));
            }
            VectorXd xk;
            MatrixXd Pk;
            textbook_update(s.x, s.P, y, H, r.asDiagonal(), xk, Pk);
            const UpdateResult u = linear_update(s, y, H, r);
            REQUIRE(rel(u.posterior.x, xk) < 1e-12);
            REQUIRE(rel(u.posterior.P, Pk) < 1e-12);
        }
    }
}

TEST_CASE("sigma points") {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 50; ++trial) {
        const VectorXd x = VectorXd::Random(8) * 100.0;
        const MatrixXd P = random_spd(8, gen, 10.0);
        const SigmaPointSet s = sigma_points(x, P, UkfParams{});
        REQUIRE(s.points.cols() == 17);
        VectorXd offset = VectorXd::Zero(8);
        MatrixXd cov = MatrixXd::Zero(8, 8);
        for (int i = 0; i < 17; ++i) {
            const VectorXd d = s.points.col(i) - x;
            offset += s.weights_mean(i) * d;
            cov += s.weights_cov(i) * d * d.transpose();
        }
        REQUIRE(offset.norm() < 1e-9 * x.norm());
        REQUIRE(rel(cov, P) < 1e-10);
        REQUIRE(std::abs(s.weights_mean.sum() - 1.0) < 1e-9);
    }
    MatrixXd bad = MatrixXd::Identity(3, 3);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(sigma_points(VectorXd::Zero(3), bad, UkfParams{}), CholeskyError);
    CHECK_THROWS_AS(sigma_points(VectorXd::Zero(3), MatrixXd::Identity(3, 3), UkfParams{1e-3, 2.0, -3.0}),
                    std::invalid_argument);
}

TEST_CASE("unscented transform") {
    std::mt19937_64 gen(7);
    const VectorXd x = VectorXd::Random(8);
    const MatrixXd P = random_spd(8, gen);
    const SigmaPointSet s = sigma_points(x, P, UkfParams{});

    SUBCASE("linear map is exact") {
        const MatrixXd A = MatrixXd::Random(5, 8);
        const VectorXd b = VectorXd::Random(5);
        const MatrixXd N = random_spd(5, gen);
        const UnscentedResult r = unscented_transform(s, [&](const VectorXd& v) { return VectorXd(A * v + b); }, N);
        CHECK(rel(r.mean, A * x + b) < 1e-9);
        CHECK(rel(r.cov, A * P * A.transpose() + N) < 1e-9);
        CHECK(rel(r.cross_cov, P * A.transpose()) < 1e-9);
    }
    SUBCASE("constant map") {
        const MatrixXd N = random_spd(3, gen);
        const UnscentedResult r = unscented_transform(s, [](const VectorXd&) { return VectorXd::Ones(3); }, N);
        CHECK(rel(r.cov, N) < 1e-12);
    }
    SUBCASE("range nonlinearity against Monte Carlo") {
        VectorXd m(2);
        m << 10.0, 0.0;
        const MatrixXd C = MatrixXd::Identity(2, 2);
        const auto range = [](const VectorXd& v) { return VectorXd::Constant(1, v.norm()); };
        const UnscentedResult r = unscented_transform(sigma_points(m, C, UkfParams{}), range, MatrixXd::Zero(1, 1));

        std::mt19937_64 g(8);
        std::normal_distribution<double> nd;
        const int n = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            VectorXd v(2);
            v << 10.0 + nd(g), nd(g);
            const double h = v.norm();
            sum += h;
            sumsq += h * h;
        }
        const double mc = sum / n;
        const double se = std::sqrt((sumsq / n - mc * mc) / n);
        CHECK(std::abs(r.mean(0) - mc) < 3.0 * se);
        // curvature shifts the mean by about sigma_perp^2 / (2 r)
        CHECK(r.mean(0) - 10.0 == doctest::Approx(0.05).epsilon(0.05));
    }
}

TEST_CASE("ukf matches the linear update on a linear model") {
    std::mt19937_64 gen(9);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        FilterState s;
        for (int i = 0; i < 8; ++i) s.x(i) = nd(gen);
        s.P = random_spd(8, gen);
        const int m = 5 + trial % 4;
        MatrixXd H(m, 8);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < 8; ++j) H(i, j) = nd(gen);
        VectorXd z(m), r(m);
        for (int i = 0; i < m; ++i) {
            z(i) = nd(gen);
            r(i) = 0.5 + std::abs(nd(gen));
        }
        const UpdateResult lin = linear_update(s, z - H * s.x, H, r);
        const UpdateResult ukf =
            unscented_update(s, [&](const VectorXd& v) { return VectorXd(H * v); }, z, r, UkfParams{});
        REQUIRE(ukf.applied);
        REQUIRE(rel(ukf.posterior.x, lin.posterior.x) < 1e-9);
        REQUIRE(rel(ukf.posterior.P, lin.posterior.P) < 1e-9);
    }
}

TEST_CASE("ukf and ekf on pseudoranges") {
    const EcefVector rx = geodetic_to_ecef({deg2rad(40.0), deg2rad(-86.0), 200.0});
    const auto sats = ring_of_satellites(rx, 8);
    FilterState s;
    s.x = StateVector::Zero();
    s.x.segment<3>(kPosX) = rx.vec();
    s.P = StateMatrix::Identity() * 100.0;

    std::vector<MeasurementEntry> entries;
    for (const auto& sv : sats) {
        MeasurementEntry e;
        e.sv_id = sv.sv_id;
        e.valid = true;
        e.variance = 25.0;
        entries.push_back(e);
    }
    SUBCASE("zero innovation leaves the state") {
        const MeasurementSet z = assemble_measurements(0.0, entries);
        const UpdateResult u = ukf_update(s, z, sats, UkfParams{});
        CHECK((u.posterior.x - s.x).norm() < 1e-9 * s.x.norm());
        const UpdateResult e = ekf_update(s, z, measurement_model(s.x, sats));
        CHECK((e.posterior.x - s.x).norm() == 0.0);
    }
    SUBCASE("nonzero residuals agree closely") {
        for (std::size_t i = 0; i < entries.size(); ++i) entries[i].residual = 3.0 * std::sin(1.0 + i);
        const MeasurementSet z = assemble_measurements(0.0, entries);
        const UpdateResult u = ukf_update(s, z, sats, UkfParams{});
        const UpdateResult e = ekf_update(s, z, measurement_model(s.x, sats));
        CHECK((u.posterior.x - e.posterior.x).norm() < 1e-3);
        CHECK(covariance_healthy(u.posterior.P));
        CHECK(covariance_healthy(e.posterior.P));
    }
    SUBCASE("invalid entries are ignored") {
        entries[2].valid = false;
        entries[2].residual = 1e6;
        const MeasurementSet z = assemble_measurements(0.0, entries);
        const UpdateResult e = ekf_update(s, z, measurement_model(s.x, sats));
        CHECK(e.innovations.size() == 7);
        CHECK((e.posterior.x - s.x).norm() == 0.0);
    }
}

TEST_CASE("psd repair") {
    FilterState s;
    s.x = StateVector::Zero();
    s.P = StateMatrix::Identity();
    s.P(7, 7) = 0.0;  // semidefinite: Cholesky fails, a small jitter fixes it
    const auto h = [](const VectorXd& v) { return VectorXd(v.head<2>()); };
    VectorXd z(2), r(2);
    z << 1.0, 2.0;
    r << 1.0, 1.0;
    const UpdateResult u = unscented_update(s, h, z, r, UkfParams{});
    CHECK(u.psd_repaired);
    CHECK(u.applied);

    s.P(6, 6) = -1.0;  // indefinite beyond repair
    CHECK_THROWS_AS(unscented_update(s, h, z, r, UkfParams{}), NumericalError);
}

TEST_CASE("initialize_filter") {
    NavState truth;
    truth.position = {1.0, 2.0, 3.0};
    truth.clock_bias = 50.0;
    InitialError init;
    init.perturb = false;
    RngStream rng(1);
    const FilterState s = initialize_filter(init, truth, rng);
    CHECK(s.x == truth.to_vector());
    CHECK(s.P(0, 0) == 100.0);
    CHECK(s.P(kClockBias, kClockBias) == 10000.0);
    CHECK(s.P.llt().info() == Eigen::Success);

    init.perturb = true;
    RngStream a(5), b(5);
    CHECK(initialize_filter(init, truth, a).x == initialize_filter(init, truth, b).x);
}

TEST_CASE("filter consistency on a static receiver") {
    const EcefVector rx = geodetic_to_ecef({deg2rad(40.0), deg2rad(-86.0), 200.0});
    const auto sats = ring_of_satellites(rx, 8);
    FilterConfig cfg;
    cfg.process = {0.01, 0.1, 0.01};
    NavState truth;
    truth.position = rx;
    RngStream rng(12);
    NavigationFilter filter(cfg, initialize_filter(cfg.init, truth, rng));

    const double dt = 0.1, sigma = 5.0;
    const ProcessModel pm = make_process_model(dt, cfg.process);
    const Eigen::LLT<StateMatrix> qchol(pm.noise);
    StateVector xt = truth.to_vector();
    std::mt19937_64 gen(13);
    std::normal_distribution<double> nd;

    const int epochs = 6000;
    double nis_sum = 0.0;
    int counted = 0;
    for (int k = 0; k < epochs; ++k) {
        if (k > 0) {
            StateVector w;
            for (int i = 0; i < 8; ++i) w(i) = nd(gen);
            xt = pm.transition * xt + qchol.matrixL() * w;
            filter.predict(dt);
        }
        const VectorXd truth_h = pseudorange_model(xt, sats);
        const MeasurementModel mm = measurement_model(filter.state().x, sats);
        std::vector<MeasurementEntry> entries;
        for (std::size_t i = 0; i < sats.size(); ++i) {
            MeasurementEntry e;
            e.sv_id = sats[i].sv_id;
            e.valid = true;
            e.variance = sigma * sigma;
            e.residual = truth_h(static_cast<Eigen::Index>(i)) + sigma * nd(gen) - mm.predicted(static_cast<Eigen::Index>(i));
            entries.push_back(e);
        }
        const MeasurementSet z = assemble_measurements(k * dt, entries);
        const MatrixXd H = mm.jacobian;
        const MatrixXd S = H * filter.state().P * H.transpose() + MatrixXd::Identity(8, 8) * sigma * sigma;
        VectorXd y(8);
        for (int i = 0; i < 8; ++i) y(i) = entries[static_cast<std::size_t>(i)].residual;
        if (k >= 100) {
            nis_sum += y.dot(S.ldlt().solve(y));
            ++counted;
        }
        REQUIRE(filter.update(z, sats).applied);
        REQUIRE(covariance_healthy(filter.state().P));
    }
    // averaged NIS of N epochs at m = 8: mean 8, std sqrt(16 / N); 99% band
    const double mean = nis_sum / counted;
    const double half = 2.5758 * std::sqrt(16.0 / counted);
    CHECK(mean > 8.0 - half);
    CHECK(mean < 8.0 + half);
}

TEST_CASE("covariance_healthy") {
    MatrixXd P = MatrixXd::Identity(3, 3);
    CHECK(covariance_healthy(P));
    P(0, 1) = 0.1;
    CHECK_FALSE(covariance_healthy(P));
    P(1, 0) = 0.1;
    CHECK(covariance_healthy(P));
    P(2, 2) = -1.0;
    CHECK_FALSE(covariance_healthy(P));
}
