#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "snn/ads.hpp"

using namespace snn;

namespace {

TimeSeries constant_series(Eigen::Index ch, Eigen::Index steps, double value, double dt = 1e-3) {
    TimeSeries s = TimeSeries::zeros(ch, steps, dt);
    s.data.setConstant(value);
    return s;
}

// 3-neuron, 2-dim decoder where a large input on channel 0 makes exactly
// neuron 0 fire on the first step
AdsParams tiny_net() {
    AdsParams p;
    p.N = 3;
    p.N_hat = 2;
    p.D = Mat(2, 3);
    p.D << 1.0, 0.0, 0.1,
           0.0, 1.0, 0.1;
    p.F = p.D.transpose();
    p.Omega_f = Mat::Zero(3, 3);
    p.Omega_s = Mat::Zero(3, 3);
    return p;
}

// two-step drive: neuron 0 spikes at step 0, the rule fires at step 1 pairing
// e[1] with the trace left by that spike
std::vector<DistillSample> tiny_two_step(double g) {
    std::vector<DistillSample> data(1);
    data[0].ctilde = TimeSeries::zeros(2, 2, 1e-3);
    data[0].ctilde.data(0, 0) = 1600.0;
    data[0].xhat = Mat::Zero(2, 2);
    data[0].xhat(0, 1) = 1.0;  // cancels the decoded spike, leaving e[1] = (0, g)
    data[0].xhat(1, 1) = g;
    return data;
}

}  // namespace

TEST_CASE("decoder init: variance 1/N_hat, deterministic, shaped") {
    Mat d1 = init_decoder(1, 20000, 7);
    double var = d1.array().square().mean() - std::pow(d1.mean(), 2);
    CHECK(var == doctest::Approx(1.0).epsilon(0.10));

    Mat a = init_decoder(64, 320, 11);
    Mat b = init_decoder(64, 320, 11);
    CHECK(a.rows() == 64);
    CHECK(a.cols() == 320);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(init_decoder(64, 320, 12).isApprox(a) == false);
}

TEST_CASE("fast weights: pinned scalar example and zero-column threshold") {
    EbnConfig cfg;
    CHECK(cfg.fast_gain() == doctest::Approx(25.0));

    // single unit decoder D = [1]: Of* = 1 + 0.0005*400 = 1.2, V* = 0.601
    Mat d(1, 1);
    d << 1.0;
    Mat of = init_fast_weights(d, cfg);
    CHECK(of(0, 0) == doctest::Approx(cfg.fast_gain() * 1.2 / 0.601).epsilon(1e-12));

    // a zero decoder column only sees the regularizers: V* = 0.101
    Mat d2 = Mat::Zero(2, 2);
    d2(0, 0) = 1.0;
    Mat of2 = init_fast_weights(d2, cfg);
    CHECK(of2(1, 1) == doctest::Approx(cfg.fast_gain() * 0.2 / 0.101).epsilon(1e-12));
}

TEST_CASE("fast weight base matrix is positive definite") {
    Mat d = init_decoder(4, 12, 3);
    EbnConfig cfg;
    Mat of_star = d.transpose() * d;
    of_star.diagonal().array() += cfg.mu * cfg.lambda_d * cfg.lambda_d;
    Eigen::SelfAdjointEigenSolver<Mat> es(of_star);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("init_ads ties F to the decoder transpose and zeroes slow weights") {
    AdsParams p = init_ads(8, 40, 21);
    CHECK((p.F - p.D.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.Omega_s.cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.Omega_f.rows() == 40);
}

TEST_CASE("spiking input: zero, bias-only and uniform-tau forms") {
    RateParams t = init_rate(6, 2, 1, 5);
    TimeSeries zero = TimeSeries::zeros(2, 10, 1e-3);

    t.b.setZero();
    TimeSeries a = make_spiking_input(t, zero);
    CHECK(a.data.cwiseAbs().maxCoeff() == 0.0);

    t.b.setLinSpaced(6, 0.5, 1.0);
    TimeSeries bseries = make_spiking_input(t, zero);
    for (int j = 0; j < 6; ++j)
        CHECK(bseries.data(j, 3) == doctest::Approx(t.b(j) / t.tau(j)).epsilon(1e-15));

    t.tau.setConstant(0.05);
    TimeSeries c = constant_series(2, 10, 0.3);
    TimeSeries ct = make_spiking_input(t, c);
    Mat expect = 20.0 * ((t.F_hat * c.data).colwise() + t.b);
    CHECK((ct.data - expect).cwiseAbs().maxCoeff() < 1e-12);

    TimeSeries wrong = TimeSeries::zeros(3, 10, 1e-3);
    CHECK_THROWS_AS(make_spiking_input(t, wrong), DimensionError);
}

TEST_CASE("quiet network relaxes to rest and never fires") {
    AdsParams p = init_ads(4, 16, 2);
    DeployedAds net = deploy(p);
    TimeSeries ct = TimeSeries::zeros(4, 400, 1e-3);
    Mat xhat = Mat::Zero(4, 400);
    AdsSimOptions o;
    AdsSimResult res = simulate_ads(net, ct, xhat, o);
    CHECK(res.spike_count == 0);
    CHECK(res.xtilde.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single neuron firing rate rises with drive") {
    AdsParams p;
    p.N = 1;
    p.N_hat = 1;
    p.D = Mat::Constant(1, 1, 1.0);
    p.F = Mat::Constant(1, 1, 1.0);
    p.Omega_f = init_fast_weights(p.D, p.cfg);
    p.Omega_s = Mat::Zero(1, 1);
    long prev = 0;
    for (double amp : {40.0, 80.0, 160.0}) {
        DeployedAds net = deploy(p);
        TimeSeries ct = constant_series(1, 1000, amp);
        Mat xhat = Mat::Zero(1, 1000);
        AdsSimOptions o;
        AdsSimResult res = simulate_ads(net, ct, xhat, o);
        CHECK(res.spike_count > prev);
        prev = res.spike_count;
    }
}

TEST_CASE("simulation is deterministic without thermal noise, perturbed with it") {
    AdsParams p = init_ads(4, 24, 9);
    TimeSeries ct = constant_series(4, 300, 3.0);
    Mat xhat = Mat::Zero(4, 300);
    xhat.row(0).setConstant(0.4);

    AdsSimOptions o;
    o.k = 50.0;
    DeployedAds n1 = deploy(p), n2 = deploy(p);
    AdsSimResult r1 = simulate_ads(n1, ct, xhat, o);
    AdsSimResult r2 = simulate_ads(n2, ct, xhat, o);
    CHECK((r1.r.data - r2.r.data).cwiseAbs().maxCoeff() == 0.0);

    AdsSimOptions noisy = o;
    noisy.sigma_thermal = 0.05;
    noisy.noise_seed = 3;
    DeployedAds n3 = deploy(p);
    AdsSimResult r3 = simulate_ads(n3, ct, xhat, noisy);
    CHECK((r1.r.data - r3.r.data).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("silenced neurons cannot fire inside the window") {
    AdsParams p = init_ads(3, 12, 4);
    TimeSeries ct = constant_series(3, 500, 25.0);
    Mat xhat = Mat::Zero(3, 500);
    SilenceMask sil;
    sil.neurons = {0, 5, 7};
    sil.t_start = 100;
    sil.t_end = 400;
    AdsSimOptions o;
    o.silence = &sil;
    o.record_raster = true;
    DeployedAds net = deploy(p);
    AdsSimResult res = simulate_ads(net, ct, xhat, o);
    REQUIRE(res.spike_count > 0);
    for (int n : sil.neurons)
        for (Eigen::Index t = sil.t_start; t < sil.t_end; ++t)
            CHECK(res.raster.spikes(n, t) == 0);
}

TEST_CASE("slow rule: one spike writes a gained outer product off the diagonal") {
    AdsParams p = tiny_net();
    const double g = 0.8, eta = 1e-3;
    DeployedAds net = deploy(p);
    // V* per column: |D_0|^2 = |D_1|^2 = 1 -> 0.601; |D_2|^2 = 0.02 -> 0.111
    CHECK(net.drive_gain(0) == doctest::Approx(1.0 / 1.202).epsilon(1e-12));
    CHECK(net.drive_gain(2) == doctest::Approx(1.0 / 0.222).epsilon(1e-12));

    std::vector<DistillSample> data = tiny_two_step(g);
    AdsSimOptions o;
    o.eta = eta;
    AdsSimResult res = simulate_ads(net, data[0].ctilde, data[0].xhat, o);
    REQUIRE(res.spike_count == 1);

    // e[1] = (0, g), r_pre = e_0: column 0 takes eta * gain .* (D^T e), diag zeroed
    CHECK(net.Omega_s(0, 0) == 0.0);
    CHECK(net.Omega_s(1, 0) == doctest::Approx(eta * g / 1.202).epsilon(1e-12));
    CHECK(net.Omega_s(2, 0) == doctest::Approx(eta * 0.1 * g / 0.222).epsilon(1e-12));
    CHECK(net.Omega_s.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(net.Omega_s.col(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_slow leaves weights alone when the error is identically zero") {
    AdsParams p = init_ads(2, 8, 6);
    std::vector<DistillSample> data(1);
    data[0].ctilde = TimeSeries::zeros(2, 50, 1e-3);
    data[0].xhat = Mat::Zero(2, 50);
    KSchedule ks;
    TrainSlowReport rep = train_slow(p, data, ks, 1e-4);
    CHECK(rep.total_spikes == 0);
    CHECK(p.Omega_s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batched update equals the per-step update rescaled by its mean") {
    const double g = 0.8, eta = 1e-3;
    std::vector<DistillSample> data = tiny_two_step(g);
    KSchedule ks;
    ks.k0 = 0.0;

    AdsParams seq = tiny_net();
    train_slow(seq, data, ks, eta);
    AdsParams bat = tiny_net();
    BatchedTrainReport rep = train_slow_batched(bat, data, ks, eta);
    CHECK(rep.skipped_updates == 0);

    // per-step: eta * A with diag clamped; batched: eta * A / (sum(A)/N^2)
    Mat a = seq.Omega_s / eta;
    const double norm = a.sum() / 9.0;
    CHECK((bat.Omega_s - eta * a / norm).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batched update skips degenerate samples") {
    AdsParams p = init_ads(2, 8, 6);
    std::vector<DistillSample> data(1);
    data[0].ctilde = TimeSeries::zeros(2, 30, 1e-3);
    data[0].xhat = Mat::Zero(2, 30);
    KSchedule ks;
    BatchedTrainReport rep = train_slow_batched(p, data, ks, 1e-4);
    CHECK(rep.skipped_updates == 1);
    CHECK(p.Omega_s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("k schedule: fixed value, pinned plateaus, saturation, bad config") {
    KSchedule fx;
    fx.k0 = 75.0;
    CHECK(fx.value(0) == 75.0);
    CHECK(fx.value(1000) == 75.0);

    KSchedule st;
    st.mode = KSchedule::Mode::step;
    st.k0 = 200.0;
    st.k_end = 25.0;
    st.n_steps = 8;
    st.trials_per_step = 10;
    const double plateaus[8] = {200, 175, 150, 125, 100, 75, 50, 25};
    for (int s = 0; s < 8; ++s)
        for (int i = 0; i < 10; ++i)
            CHECK(st.value(10 * s + i) == doctest::Approx(plateaus[s]).epsilon(1e-12));
    CHECK(st.value(5000) == doctest::Approx(25.0));

    KSchedule bad = st;
    bad.n_steps = 1;
    CHECK_THROWS_AS(bad.value(0), ParameterError);
}

TEST_CASE("clamping: stronger error feedback tracks a rate net more closely") {
    RateParams t = init_rate(8, 1, 1, 17);
    TimeSeries c = TimeSeries::zeros(1, 600, 1e-3);
    for (Eigen::Index i = 100; i < 250; ++i) c.data(0, i) = 1.0;
    RateTrajectory tr = simulate_rate(t, c);
    TimeSeries ct = make_spiking_input(t, c);

    AdsParams p = init_ads(8, 96, 23);
    double prev = 1e100;
    for (double k : {0.0, 10.0, 100.0}) {
        DeployedAds net = deploy(p);
        AdsSimOptions o;
        o.k = k;
        AdsSimResult res = simulate_ads(net, ct, tr.x, o);
        CHECK(res.mean_abs_err < prev);
        prev = res.mean_abs_err;
    }
}

TEST_CASE("one training pass at small eta improves the replayed tracking error") {
    RateParams t = init_rate(8, 1, 1, 31);
    TimeSeries c = TimeSeries::zeros(1, 800, 1e-3);
    for (Eigen::Index i = 50; i < 300; ++i) c.data(0, i) = 0.8;
    for (Eigen::Index i = 450; i < 600; ++i) c.data(0, i) = -0.6;
    std::vector<Sample> task(1);
    task[0].c = c;
    std::vector<DistillSample> data = make_distill_set(t, task);

    AdsParams p = init_ads(8, 96, 23);
    KSchedule ks;
    ks.k0 = 75.0;

    auto replay_err = [&](const AdsParams& q) {
        DeployedAds net = deploy(q);
        AdsSimOptions o;
        o.k = ks.k0;
        return simulate_ads(net, data[0].ctilde, data[0].xhat, o).mean_abs_err;
    };
    double before = replay_err(p);
    train_slow(p, data, ks, 1e-6);
    double after = replay_err(p);
    CHECK(after < before);
}

TEST_CASE("deploy expands scalar neuron constants to vectors") {
    AdsParams p = init_ads(2, 10, 40);
    DeployedAds d = deploy(p);
    CHECK(d.v_thresh.size() == 10);
    CHECK(d.v_thresh.minCoeff() == 1.0);
    CHECK(d.tau_mem.maxCoeff() == doctest::Approx(0.05));
    CHECK(d.tau_fast.maxCoeff() == doctest::Approx(0.001));
    CHECK(d.tau_slow.maxCoeff() == doctest::Approx(0.070));
    // reset handles the self-kick, deployed fast matrix drops it
    CHECK(d.Omega_f.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.Omega_f(3, 3) > 0.0);
    CHECK(d.Omega_f(3, 1) == p.Omega_f(3, 1));
}

TEST_CASE("ads params survive a json round trip") {
    AdsParams p = init_ads(3, 14, 77);
    auto eng = make_engine(5);
    p.Omega_s = gaussian_matrix(14, 14, 0.2, eng);
    p.teacher_hash = "f00d";
    Json j = p.to_json();
    AdsParams q = AdsParams::from_json(j);
    CHECK((p.D - q.D).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.Omega_s - q.Omega_s).cwiseAbs().maxCoeff() == 0.0);
    CHECK(q.teacher_hash == "f00d");
    CHECK(q.cfg.lambda_d == 20.0);

    Json bad = j;
    bad["architecture"] = "rate";
    CHECK_THROWS_AS(AdsParams::from_json(bad), IoError);
}

TEST_CASE("teacher hash is stable under serialization noise-free round trips") {
    RateParams t = init_rate(5, 2, 1, 3);
    std::string h1 = rate_params_hash(t);
    RateParams u = RateParams::from_json(t.to_json());
    CHECK(rate_params_hash(u) == h1);
    u.b(0) += 1e-9;
    CHECK(rate_params_hash(u) != h1);
}
