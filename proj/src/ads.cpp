#include "snn/ads.hpp"

#include <cmath>

namespace snn {

namespace {

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

Json AdsParams::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["architecture"] = "ads";
    j["N"] = N;
    j["N_hat"] = N_hat;
    j["ebn"] = {{"mu", cfg.mu},           {"nu", cfg.nu},
                {"lambda_d", cfg.lambda_d}, {"tau_mem", cfg.tau_mem},
                {"tau_fast", cfg.tau_fast}, {"tau_slow", cfg.tau_slow},
                {"v_thresh", cfg.v_thresh}, {"v_reset", cfg.v_reset},
                {"v_rest", cfg.v_rest},     {"state_scale", cfg.state_scale}};
    j["D"] = mat_to_json(D);
    j["F"] = mat_to_json(F);
    j["Omega_f"] = mat_to_json(Omega_f);
    j["Omega_s"] = mat_to_json(Omega_s);
    j["teacher_hash"] = teacher_hash;
    return j;
}

AdsParams AdsParams::from_json(const Json& j) {
    if (j.value("format_version", 0) != 1) throw IoError("ads params: unknown format_version");
    if (j.value("architecture", "") != "ads") throw IoError("ads params: wrong architecture tag");
    AdsParams p;
    p.N = j.at("N").get<Eigen::Index>();
    p.N_hat = j.at("N_hat").get<Eigen::Index>();
    const Json& e = j.at("ebn");
    p.cfg.mu = e.at("mu").get<double>();
    p.cfg.nu = e.at("nu").get<double>();
    p.cfg.lambda_d = e.at("lambda_d").get<double>();
    p.cfg.tau_mem = e.at("tau_mem").get<double>();
    p.cfg.tau_fast = e.at("tau_fast").get<double>();
    p.cfg.tau_slow = e.at("tau_slow").get<double>();
    p.cfg.v_thresh = e.at("v_thresh").get<double>();
    p.cfg.v_reset = e.at("v_reset").get<double>();
    p.cfg.v_rest = e.at("v_rest").get<double>();
    p.cfg.state_scale = e.value("state_scale", 1.0);
    p.D = json_to_mat(j.at("D"));
    p.F = json_to_mat(j.at("F"));
    p.Omega_f = json_to_mat(j.at("Omega_f"));
    p.Omega_s = json_to_mat(j.at("Omega_s"));
    p.teacher_hash = j.value("teacher_hash", "");
    if (p.D.rows() != p.N_hat || p.D.cols() != p.N || p.F.rows() != p.N ||
        p.F.cols() != p.N_hat || p.Omega_f.rows() != p.N || p.Omega_f.cols() != p.N ||
        p.Omega_s.rows() != p.N || p.Omega_s.cols() != p.N)
        throw IoError("ads params: inconsistent shapes");
    return p;
}

Vec pre_transform_thresholds(const Mat& D, const EbnConfig& cfg) {
    Vec vstar = D.colwise().squaredNorm().transpose();
    vstar.array() += cfg.nu * cfg.lambda_d + cfg.mu * cfg.lambda_d * cfg.lambda_d;
    return vstar / 2.0;
}

DeployedAds deploy(const AdsParams& p) {
    if (p.cfg.state_scale <= 0.0) throw ParameterError("deploy: state_scale must be > 0");
    DeployedAds d;
    d.cfg = p.cfg;
    d.D = p.D;
    d.F = p.F;
    d.Omega_f = p.Omega_f;
    // the reset already realizes the fast self-kick, keeping the diagonal
    // would apply it twice per spike
    d.Omega_f.diagonal().setZero();
    d.Omega_s = p.Omega_s;
    d.v_thresh = Vec::Constant(p.N, p.cfg.v_thresh);
    d.tau_mem = Vec::Constant(p.N, p.cfg.tau_mem);
    d.tau_fast = Vec::Constant(p.N, p.cfg.tau_fast);
    d.tau_slow = Vec::Constant(p.N, p.cfg.tau_slow);
    d.drive_gain = (2.0 * pre_transform_thresholds(p.D, p.cfg)).cwiseInverse();
    return d;
}

Mat init_decoder(Eigen::Index N_hat, Eigen::Index N, Seed seed) {
    if (N_hat < 1 || N < 1) throw ParameterError("init_decoder: bad sizes");
    auto eng = make_engine(seed);
    return gaussian_matrix(N_hat, N, 1.0 / std::sqrt(double(N_hat)), eng);
}

Mat init_fast_weights(const Mat& D, const EbnConfig& cfg) {
    Mat of_star = D.transpose() * D;
    of_star.diagonal().array() += cfg.mu * cfg.lambda_d * cfg.lambda_d;
    Vec vstar = pre_transform_thresholds(D, cfg);
    return cfg.fast_gain() * vstar.cwiseInverse().asDiagonal() * of_star;
}

AdsParams init_ads(Eigen::Index N_hat, Eigen::Index N, Seed seed, EbnConfig cfg) {
    AdsParams p;
    p.N = N;
    p.N_hat = N_hat;
    p.cfg = cfg;
    p.D = init_decoder(N_hat, N, seed);
    p.F = p.D.transpose();
    p.Omega_f = init_fast_weights(p.D, cfg);
    p.Omega_s = Mat::Zero(N, N);
    return p;
}

TimeSeries make_spiking_input(const RateParams& teacher, const TimeSeries& c) {
    if (c.channels() != teacher.Nc) throw DimensionError("make_spiking_input: channel mismatch");
    TimeSeries out = TimeSeries::zeros(teacher.N_hat, c.steps(), c.dt);
    out.data = teacher.F_hat * c.data;
    out.data.colwise() += teacher.b;
    out.data.array().colwise() /= teacher.tau.array();
    return out;
}

AdsSimResult simulate_ads(DeployedAds& net, const TimeSeries& ctilde, const Mat& xhat,
                          const AdsSimOptions& opts) {
    const Eigen::Index N = net.Omega_f.rows();
    const Eigen::Index Nh = net.D.rows();
    const Eigen::Index T = ctilde.steps();
    if (ctilde.channels() != Nh || xhat.rows() != Nh || xhat.cols() != T)
        throw DimensionError("simulate_ads: trajectory shape mismatch");
    const double dt = ctilde.dt;
    const EbnConfig& cfg = net.cfg;

    // tau_mem scaling keeps the drive's steady-state voltage equal to its
    // dv/dt-form value, in threshold-normalized units, for any membrane constant;
    // state_scale on the input and target makes the net track the scaled state
    const Mat Fin = (cfg.state_scale * cfg.tau_mem) * (net.drive_gain.asDiagonal() * net.F);
    const Mat Eproj = net.drive_gain.asDiagonal() * net.D.transpose();
    const double ke = cfg.tau_mem * opts.k;
    const double inv_scale = 1.0 / cfg.state_scale;

    Vec V = Vec::Zero(N);
    Vec If = Vec::Zero(N), Is = Vec::Zero(N), r = Vec::Zero(N);
    Vec alpha = (dt / net.tau_mem.array()).matrix();
    Vec fast_decay = (1.0 - dt / net.tau_fast.array()).matrix();
    Vec slow_decay = (1.0 - dt / net.tau_slow.array()).matrix();
    const double r_decay = 1.0 - cfg.lambda_d * dt;

    AdsSimResult out;
    out.r = TimeSeries::zeros(N, T, dt);
    out.xtilde = TimeSeries::zeros(Nh, T, dt);
    if (opts.record_raster) out.raster = SpikeRaster::zeros(N, T);

    auto eng = make_engine(opts.noise_seed);
    std::normal_distribution<double> zeta(0.0, 1.0);
    const double noise_scale = opts.sigma_thermal * (cfg.v_thresh - cfg.v_reset);

    double err_acc = 0.0;
    Vec proj(N), r_pre(N), o(N);
    const Vec v_reset = Vec::Constant(N, cfg.v_reset);

    for (Eigen::Index t = 0; t < T; ++t) {
        Vec e = cfg.state_scale * xhat.col(t) - net.D * r;
        err_acc += e.cwiseAbs().mean();
        proj.noalias() = Eproj * e;  // gained error current shape, shared with the rule
        r_pre = r;
        Vec drive = Fin * ctilde.data.col(t) + If + Is + ke * proj;
        drive.array() += cfg.v_rest;
        euler_membrane(V, alpha, drive);
        if (noise_scale > 0.0)
            for (Eigen::Index i = 0; i < N; ++i) V(i) += noise_scale * zeta(eng);
        if (opts.silence && t >= opts.silence->t_start &&
            (opts.silence->t_end < 0 || t < opts.silence->t_end))
            for (int n : opts.silence->neurons) V(n) = cfg.v_reset;

        out.spike_count += fire_and_reset(V, net.v_thresh, v_reset, o);

        If = If.cwiseProduct(fast_decay);
        Is = Is.cwiseProduct(slow_decay);
        r *= r_decay;
        for (Eigen::Index i = 0; i < N; ++i) {
            if (o(i) == 0.0) continue;
            If -= net.Omega_f.col(i);
            Is += net.Omega_s.col(i);
            r(i) += 1.0;
            if (opts.record_raster) out.raster.spikes(i, t) = 1;
        }

        out.r.data.col(t) = r;
        out.xtilde.data.col(t) = inv_scale * (net.D * r);

        // pair the step's error current with the trace it was measured against
        if (opts.rule_accumulator) {
            opts.rule_accumulator->noalias() += proj * r_pre.transpose();
        } else if (opts.eta > 0.0) {
            net.Omega_s.noalias() += (opts.eta * proj) * r_pre.transpose();
            net.Omega_s.diagonal().setZero();
        }
    }
    // reported in unscaled state units so runs at different scales compare
    out.mean_abs_err = inv_scale * err_acc / static_cast<double>(T);
    return out;
}

double KSchedule::value(long trial) const {
    if (mode == Mode::fixed) return k0;
    if (n_steps < 2) throw ParameterError("k schedule: step mode needs n_steps >= 2");
    long s = trial / std::max(1, trials_per_step);
    if (s > n_steps - 1) s = n_steps - 1;
    return k0 - static_cast<double>(s) * (k0 - k_end) / static_cast<double>(n_steps - 1);
}

std::vector<DistillSample> make_distill_set(const RateParams& teacher,
                                            const std::vector<Sample>& tasks) {
    std::vector<DistillSample> out;
    out.reserve(tasks.size());
    for (const Sample& s : tasks) {
        DistillSample d;
        d.ctilde = make_spiking_input(teacher, s.c);
        d.xhat = simulate_rate(teacher, s.c).x;
        out.push_back(std::move(d));
    }
    return out;
}

std::string rate_params_hash(const RateParams& p) { return fnv1a_hex(p.to_json().dump()); }

TrainSlowReport train_slow(AdsParams& p, const std::vector<DistillSample>& data,
                           const KSchedule& ks, double eta, long avg_from) {
    if (eta <= 0.0) throw ParameterError("train_slow: eta must be > 0");
    if (data.empty()) throw ParameterError("train_slow: empty dataset");
    DeployedAds net = deploy(p);
    TrainSlowReport rep;
    Mat avg;
    long n_avg = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        AdsSimOptions o;
        o.k = ks.value(static_cast<long>(i));
        o.eta = eta;
        AdsSimResult res = simulate_ads(net, data[i].ctilde, data[i].xhat, o);
        rep.mean_abs_err.push_back(res.mean_abs_err);
        rep.total_spikes += res.spike_count;
        if (!net.Omega_s.allFinite())
            throw TrainingError("train_slow: slow weights diverged at sample " +
                                std::to_string(i));
        if (avg_from >= 0 && static_cast<long>(i) >= avg_from) {
            ++n_avg;
            if (n_avg == 1)
                avg = net.Omega_s;
            else
                avg += (net.Omega_s - avg) / static_cast<double>(n_avg);
        }
    }
    p.Omega_s = n_avg > 0 ? avg : net.Omega_s;
    rep.averaged_samples = n_avg;
    return rep;
}

BatchedTrainReport train_slow_batched(AdsParams& p, const std::vector<DistillSample>& data,
                                      const KSchedule& ks, double eta) {
    if (eta <= 0.0) throw ParameterError("train_slow_batched: eta must be > 0");
    if (data.empty()) throw ParameterError("train_slow_batched: empty dataset");
    BatchedTrainReport rep;
    const Eigen::Index N = p.N;
    for (std::size_t i = 0; i < data.size(); ++i) {
        DeployedAds net = deploy(p);  // frozen during the sample
        Mat acc = Mat::Zero(N, N);
        AdsSimOptions o;
        o.k = ks.value(static_cast<long>(i));
        o.rule_accumulator = &acc;
        AdsSimResult res = simulate_ads(net, data[i].ctilde, data[i].xhat, o);
        rep.mean_abs_err.push_back(res.mean_abs_err);

        const double norm = acc.sum() / static_cast<double>(N * N);
        if (std::abs(norm) < 1e-300) {
            ++rep.skipped_updates;
            continue;
        }
        p.Omega_s += eta * (acc / norm);
        p.Omega_s.diagonal().setZero();
        if (!p.Omega_s.allFinite())
            throw TrainingError("train_slow_batched: slow weights diverged at sample " +
                                std::to_string(i));
    }
    return rep;
}

TimeSeries decode_task_output(const RateParams& teacher, const AdsParams& p,
                              const TimeSeries& r) {
    if (r.channels() != p.N) throw DimensionError("decode_task_output: rate channels != N");
    TimeSeries y = TimeSeries::zeros(teacher.d2, r.steps(), r.dt);
    y.data = teacher.D_hat * (p.D * r.data) / p.cfg.state_scale;
    return y;
}

}  // namespace snn
