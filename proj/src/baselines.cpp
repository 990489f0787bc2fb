#include "snn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "snn/rng.hpp"

namespace snn {

namespace {

constexpr double kTauMin = 1e-3;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec uniform_vector(Eigen::Index n, double lo, double hi, std::mt19937_64& eng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(eng);
    return v;
}

Mat uniform_matrix(Eigen::Index r, Eigen::Index c, double lo, double hi,
                   std::mt19937_64& eng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(eng);
    return m;
}

struct AdamState {
    Mat m, v;
    void init(Eigen::Index r, Eigen::Index c) {
        m = Mat::Zero(r, c);
        v = Mat::Zero(r, c);
    }
    void step(Mat& w, const Mat& g, double lr, int t) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
        w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

// thermal noise convention shared with simulate_ads
struct ThermalNoise {
    std::mt19937_64 eng;
    std::normal_distribution<double> zeta;
    double scale;
    ThermalNoise(double sigma, double v_span, Seed seed)
        : eng(make_engine(seed)), zeta(0.0, 1.0), scale(sigma * v_span) {}
    void apply(Vec& V) {
        if (scale <= 0.0) return;
        for (Eigen::Index i = 0; i < V.size(); ++i) V(i) += scale * zeta(eng);
    }
};

bool silenced_now(const SilenceMask* m, Eigen::Index t) {
    return m && t >= m->t_start && (m->t_end < 0 || t < m->t_end);
}

}  // namespace

Mat ridge_fit(const Mat& R, const Mat& Y, double lambda) {
    if (R.cols() != Y.cols()) throw DimensionError("ridge_fit: time axes differ");
    if (lambda < 0.0) throw ParameterError("ridge_fit: negative lambda");
    Mat G = R * R.transpose();
    G.diagonal().array() += lambda;
    if (lambda == 0.0) {
        Eigen::FullPivLU<Mat> lu(G);
        if (!lu.isInvertible())
            throw TrainingError("ridge_fit: singular gram matrix with lambda = 0");
        return lu.solve(R * Y.transpose()).transpose();
    }
    return G.ldlt().solve(R * Y.transpose()).transpose();
}

// ---------------------------------------------------------------- reservoir

ReservoirParams init_reservoir(Eigen::Index N, Eigen::Index Nc, Eigen::Index d2,
                               Seed seed) {
    if (N < 1 || Nc < 1 || d2 < 1) throw ParameterError("init_reservoir: bad sizes");
    ReservoirParams p;
    p.N = N;
    p.Nc = Nc;
    p.d2 = d2;
    auto eng = make_engine(seed);
    p.W_in = gaussian_matrix(N, Nc, p.w_in_scale, eng);
    p.W_rec = gaussian_matrix(N, N, p.w_rec_gain / std::sqrt(double(N)), eng);
    p.tau_mem = uniform_vector(N, 1e-4, 0.112, eng);
    p.tau_syn = uniform_vector(N, 1e-4, 0.112, eng);
    p.W_out = Mat::Zero(d2, N);
    return p;
}

DeployedReservoir deploy(const ReservoirParams& p) {
    DeployedReservoir d;
    d.W_in = p.W_in;
    d.W_rec = p.W_rec;
    d.W_out = p.W_out;
    d.tau_mem = p.tau_mem;
    d.tau_syn = p.tau_syn;
    d.v_thresh = Vec::Constant(p.N, p.v_thresh);
    d.v_reset = Vec::Constant(p.N, p.v_reset);
    d.rate_lambda = p.rate_lambda;
    return d;
}

BaselineSimResult simulate_reservoir(const DeployedReservoir& net, const TimeSeries& c,
                                     const BaselineSimOptions& opts) {
    const Eigen::Index N = net.W_rec.rows();
    const Eigen::Index T = c.steps();
    if (c.channels() != net.W_in.cols())
        throw DimensionError("simulate_reservoir: input channels mismatch");
    const double dt = c.dt;
    // tau can undershoot the step size; clamp the Euler factors to their
    // contraction limits
    Vec alpha = (dt / net.tau_mem.array()).cwiseMin(1.0).matrix();
    Vec syn_decay = (1.0 - dt / net.tau_syn.array()).cwiseMax(0.0).matrix();
    const double r_decay = 1.0 - net.rate_lambda * dt;

    BaselineSimResult out;
    out.r = TimeSeries::zeros(N, T, dt);
    out.y = TimeSeries::zeros(net.W_out.rows(), T, dt);
    if (opts.record_raster) out.raster = SpikeRaster::zeros(N, T);

    ThermalNoise noise(opts.sigma_thermal, 1.0, opts.noise_seed);
    Vec V = Vec::Zero(N), s = Vec::Zero(N), r = Vec::Zero(N), o(N);
    for (Eigen::Index t = 0; t < T; ++t) {
        Vec drive = net.W_in * c.data.col(t) + net.W_rec * s;
        euler_membrane(V, alpha, drive);
        noise.apply(V);
        if (silenced_now(opts.silence, t))
            for (int n : opts.silence->neurons) V(n) = net.v_reset(n);
        out.spike_count += fire_and_reset(V, net.v_thresh, net.v_reset, o);
        s = s.cwiseProduct(syn_decay) + o;
        r = r_decay * r + o;
        if (opts.record_raster)
            for (Eigen::Index i = 0; i < N; ++i)
                if (o(i) != 0.0) out.raster.spikes(i, t) = 1;
        out.r.data.col(t) = r;
        out.y.data.col(t) = net.W_out * r;
    }
    return out;
}

namespace {

struct RidgeAccum {
    Mat G, B;
    double ssq = 0.0;
    long steps = 0;
    void init(Eigen::Index n, Eigen::Index d) {
        G = Mat::Zero(n, n);
        B = Mat::Zero(d, n);
    }
    void add(const Mat& R, const Mat& Y) {
        G.noalias() += R * R.transpose();
        B.noalias() += Y * R.transpose();
        ssq += Y.squaredNorm();
        steps += R.cols();
    }
    Mat solve(double lambda) const {
        Mat Gl = G;
        Gl.diagonal().array() += lambda;
        return Gl.ldlt().solve(B.transpose()).transpose();
    }
    // mean squared residual of readout W on the accumulated data
    double mse(const Mat& W, Eigen::Index d2) const {
        double rss = ssq - 2.0 * (W.cwiseProduct(B)).sum() + ((W * G).cwiseProduct(W)).sum();
        return rss / (double(steps) * double(d2));
    }
};

}  // namespace

Mat reservoir_train(ReservoirParams& p, const std::vector<Sample>& data, double lambda) {
    if (data.empty()) throw ParameterError("reservoir_train: empty dataset");
    DeployedReservoir net = deploy(p);
    RidgeAccum acc;
    acc.init(p.N, p.d2);
    for (const Sample& s : data) {
        BaselineSimResult res = simulate_reservoir(net, s.c);
        acc.add(res.r.data, s.target.data);
    }
    if (lambda == 0.0) {
        Eigen::FullPivLU<Mat> lu(acc.G);
        if (!lu.isInvertible())
            throw TrainingError("reservoir_train: singular gram matrix with lambda = 0");
        p.W_out = lu.solve(acc.B.transpose()).transpose();
    } else {
        p.W_out = acc.solve(lambda);
    }
    return p.W_out;
}

Mat reservoir_train_auto(ReservoirParams& p, const std::vector<Sample>& data,
                         double holdout_fraction) {
    if (data.size() < 2) throw ParameterError("reservoir_train_auto: need >= 2 samples");
    auto n_hold = static_cast<std::size_t>(std::ceil(holdout_fraction * double(data.size())));
    n_hold = std::clamp<std::size_t>(n_hold, 1, data.size() - 1);
    const std::size_t n_fit = data.size() - n_hold;

    DeployedReservoir net = deploy(p);
    RidgeAccum fit, hold;
    fit.init(p.N, p.d2);
    hold.init(p.N, p.d2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        BaselineSimResult res = simulate_reservoir(net, data[i].c);
        (i < n_fit ? fit : hold).add(res.r.data, data[i].target.data);
    }
    double best_lambda = 1e-6, best_mse = std::numeric_limits<double>::infinity();
    for (double lambda = 1e-6; lambda <= 1.0 + 1e-12; lambda *= 10.0) {
        double m = hold.mse(fit.solve(lambda), p.d2);
        if (m < best_mse) {
            best_mse = m;
            best_lambda = lambda;
        }
    }
    fit.G += hold.G;
    fit.B += hold.B;
    p.W_out = fit.solve(best_lambda);
    return p.W_out;
}

// -------------------------------------------------------------------- FORCE

std::vector<TeacherSample> make_teacher_set(const RateParams& teacher,
                                            const std::vector<Sample>& tasks) {
    std::vector<TeacherSample> out;
    out.reserve(tasks.size());
    for (const Sample& s : tasks) {
        RateTrajectory tr = simulate_rate(teacher, s.c);
        out.push_back(TeacherSample{s.c, std::move(tr.x)});
    }
    return out;
}

ForceParams init_force(Eigen::Index N, Eigen::Index Nc, Eigen::Index N_hat, Seed seed) {
    if (N < 1 || Nc < 1 || N_hat < 1) throw ParameterError("init_force: bad sizes");
    ForceParams p;
    p.N = N;
    p.Nc = Nc;
    p.N_hat = N_hat;
    auto eng = make_engine(seed);
    p.W_in = gaussian_matrix(N, Nc, p.w_in_scale, eng);
    p.W_rec = gaussian_matrix(N, N, p.w_rec_gain / std::sqrt(double(N)), eng);
    p.W_fb = uniform_matrix(N, N_hat, -p.w_fb_scale, p.w_fb_scale, eng);
    p.W_dec = Mat::Zero(N_hat, N);
    return p;
}

DeployedForce deploy(const ForceParams& p) {
    DeployedForce d;
    d.W_in = p.W_in;
    d.W_rec = p.W_rec;
    d.W_fb = p.W_fb;
    d.W_dec = p.W_dec;
    d.tau_mem = Vec::Constant(p.N, p.tau_mem);
    d.tau_syn = Vec::Constant(p.N, p.tau_syn);
    d.v_thresh = Vec::Constant(p.N, p.v_thresh);
    d.v_reset = Vec::Constant(p.N, p.v_reset);
    d.i_bias = Vec::Constant(p.N, p.i_bias);
    return d;
}

void rls_update(Mat& P, Mat& W_dec, const Vec& r, const Vec& err) {
    Vec Pr = P * r;
    const double denom = 1.0 + r.dot(Pr);
    P.noalias() -= (Pr * Pr.transpose()) / denom;
    P = 0.5 * (P + P.transpose());  // keep symmetry against fp drift
    W_dec.noalias() -= err * (Pr / denom).transpose();
}

ForceTrainReport force_train(ForceParams& p, const std::vector<TeacherSample>& data,
                             int epochs, int update_every) {
    if (data.empty()) throw ParameterError("force_train: empty dataset");
    if (epochs < 1 || update_every < 1) throw ParameterError("force_train: bad counts");
    const Eigen::Index N = p.N;
    Mat P = Mat::Identity(N, N) / p.alpha;
    ForceTrainReport rep;

    for (int ep = 0; ep < epochs; ++ep) {
        double ep_err = 0.0;
        long ep_steps = 0;
        for (const TeacherSample& ts : data) {
            const Eigen::Index T = ts.c.steps();
            if (ts.c.channels() != p.Nc || ts.xhat.rows() != p.N_hat || ts.xhat.cols() != T)
                throw DimensionError("force_train: sample shape mismatch");
            const double dt = ts.c.dt;
            Vec alpha_m = Vec::Constant(N, dt / p.tau_mem);
            const double syn_decay = 1.0 - dt / p.tau_syn;
            Vec v_thresh = Vec::Constant(N, p.v_thresh);
            Vec v_reset = Vec::Constant(N, p.v_reset);
            Vec V = Vec::Zero(N), s = Vec::Zero(N), o(N);
            for (Eigen::Index t = 0; t < T; ++t) {
                Vec x_dec = p.W_dec * s;
                Vec drive = p.W_in * ts.c.data.col(t) + p.W_rec * s + p.W_fb * x_dec;
                drive.array() += p.i_bias;
                euler_membrane(V, alpha_m, drive);
                fire_and_reset(V, v_thresh, v_reset, o);
                s = syn_decay * s + o;
                if (t % update_every == 0) {
                    Vec err = p.W_dec * s - ts.xhat.col(t);
                    rls_update(P, p.W_dec, s, err);
                    ep_err += err.squaredNorm() / double(p.N_hat);
                    ++ep_steps;
                }
            }
            if (P.diagonal().minCoeff() <= 0.0) {
                P = Mat::Identity(N, N) / p.alpha;
                ++rep.p_reinits;
            }
        }
        rep.epoch_mse.push_back(ep_err / double(std::max<long>(1, ep_steps)));
    }
    return rep;
}

ForceSimResult simulate_force(const DeployedForce& net, const TimeSeries& c,
                              const BaselineSimOptions& opts) {
    const Eigen::Index N = net.W_rec.rows();
    const Eigen::Index Nh = net.W_dec.rows();
    const Eigen::Index T = c.steps();
    if (c.channels() != net.W_in.cols())
        throw DimensionError("simulate_force: input channels mismatch");
    const double dt = c.dt;
    Vec alpha = (dt / net.tau_mem.array()).cwiseMin(1.0).matrix();
    Vec syn_decay = (1.0 - dt / net.tau_syn.array()).cwiseMax(0.0).matrix();

    ForceSimResult out;
    out.x_dec = TimeSeries::zeros(Nh, T, dt);
    out.r = TimeSeries::zeros(N, T, dt);
    if (opts.record_raster) out.raster = SpikeRaster::zeros(N, T);

    ThermalNoise noise(opts.sigma_thermal, 1.0, opts.noise_seed);
    Vec V = Vec::Zero(N), s = Vec::Zero(N), o(N);
    for (Eigen::Index t = 0; t < T; ++t) {
        Vec x_dec = net.W_dec * s;
        Vec drive = net.W_in * c.data.col(t) + net.W_rec * s + net.W_fb * x_dec + net.i_bias;
        euler_membrane(V, alpha, drive);
        noise.apply(V);
        if (silenced_now(opts.silence, t))
            for (int n : opts.silence->neurons) V(n) = net.v_reset(n);
        out.spike_count += fire_and_reset(V, net.v_thresh, net.v_reset, o);
        s = s.cwiseProduct(syn_decay) + o;
        if (opts.record_raster)
            for (Eigen::Index i = 0; i < N; ++i)
                if (o(i) != 0.0) out.raster.spikes(i, t) = 1;
        out.r.data.col(t) = s;
        out.x_dec.data.col(t) = net.W_dec * s;
    }
    return out;
}

// ---------------------------------------------------------------- BPTT SNN

Vec BpttSnnParams::tau_mem() const {
    Vec t(theta_mem.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = kTauMin + softplus(theta_mem(i));
    return t;
}

Vec BpttSnnParams::tau_syn() const {
    Vec t(theta_syn.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = kTauMin + softplus(theta_syn(i));
    return t;
}

BpttSnnParams init_bptt_snn(Eigen::Index N, Eigen::Index Nc, Eigen::Index d2, Seed seed) {
    if (N < 1 || Nc < 1 || d2 < 1) throw ParameterError("init_bptt_snn: bad sizes");
    BpttSnnParams p;
    p.N = N;
    p.Nc = Nc;
    p.d2 = d2;
    auto eng = make_engine(seed);
    p.W_in = gaussian_matrix(N, Nc, 2.0, eng);
    p.W_rec = gaussian_matrix(N, N, 1.0 / std::sqrt(double(N)), eng);
    p.W_out = gaussian_matrix(d2, N, 1.0 / std::sqrt(double(N)), eng);
    p.theta_mem = Vec::Constant(N, softplus_inv(0.050 - kTauMin));
    p.theta_syn = Vec::Constant(N, softplus_inv(0.070 - kTauMin));
    return p;
}

DeployedBpttSnn deploy(const BpttSnnParams& p) {
    DeployedBpttSnn d;
    d.W_in = p.W_in;
    d.W_rec = p.W_rec;
    d.W_out = p.W_out;
    d.tau_mem = p.tau_mem();
    d.tau_syn = p.tau_syn();
    d.v_thresh = Vec::Constant(p.N, p.v_thresh);
    d.v_reset = Vec::Constant(p.N, p.v_reset);
    d.beta_surrogate = p.beta_surrogate;
    return d;
}

BaselineSimResult simulate_bptt_snn(const DeployedBpttSnn& net, const TimeSeries& c,
                                    const BaselineSimOptions& opts) {
    const Eigen::Index N = net.W_rec.rows();
    const Eigen::Index T = c.steps();
    if (c.channels() != net.W_in.cols())
        throw DimensionError("simulate_bptt_snn: input channels mismatch");
    const double dt = c.dt;
    Vec alpha = (dt / net.tau_mem.array()).cwiseMin(1.0).matrix();
    Vec syn_decay = (1.0 - dt / net.tau_syn.array()).cwiseMax(0.0).matrix();

    BaselineSimResult out;
    out.r = TimeSeries::zeros(N, T, dt);
    out.y = TimeSeries::zeros(net.W_out.rows(), T, dt);
    if (opts.record_raster) out.raster = SpikeRaster::zeros(N, T);

    ThermalNoise noise(opts.sigma_thermal, 1.0, opts.noise_seed);
    Vec V = Vec::Zero(N), s = Vec::Zero(N), o(N);
    for (Eigen::Index t = 0; t < T; ++t) {
        Vec drive = net.W_in * c.data.col(t) + net.W_rec * s;
        euler_membrane(V, alpha, drive);
        noise.apply(V);
        if (silenced_now(opts.silence, t))
            for (int n : opts.silence->neurons) V(n) = net.v_reset(n);
        out.spike_count += fire_and_reset(V, net.v_thresh, net.v_reset, o);
        s = s.cwiseProduct(syn_decay) + o;
        if (opts.record_raster)
            for (Eigen::Index i = 0; i < N; ++i)
                if (o(i) != 0.0) out.raster.spikes(i, t) = 1;
        out.r.data.col(t) = s;
        out.y.data.col(t) = net.W_out * s;
    }
    return out;
}

BpttSnnGrads bptt_snn_grads(const BpttSnnParams& p, const TimeSeries& c, const Mat& target) {
    const Eigen::Index N = p.N, T = c.steps();
    if (c.channels() != p.Nc || target.rows() != p.d2 || target.cols() != T)
        throw DimensionError("bptt_snn_grads: shape mismatch");
    const double dt = c.dt;
    Vec tau_m = p.tau_mem(), tau_s = p.tau_syn();
    Vec alpha = (dt / tau_m.array()).matrix();
    Vec kappa = (1.0 - dt / tau_s.array()).matrix();

    // forward, storing pre-reset voltage, spikes and traces
    Mat Vhat(N, T), O(N, T), S(N, T);
    Vec V = Vec::Zero(N), s = Vec::Zero(N);
    double loss = 0.0;
    const double norm = 1.0 / (double(p.d2) * double(T));
    for (Eigen::Index t = 0; t < T; ++t) {
        Vec drive = p.W_in * c.data.col(t) + p.W_rec * s;
        V = V + alpha.cwiseProduct(drive - V);
        Vhat.col(t) = V;
        for (Eigen::Index i = 0; i < N; ++i) {
            const bool sp = V(i) > p.v_thresh;
            O(i, t) = sp ? 1.0 : 0.0;
            if (sp) V(i) = p.v_reset;
        }
        s = kappa.cwiseProduct(s) + O.col(t);
        S.col(t) = s;
        Vec res = p.W_out * s - target.col(t);
        loss += res.squaredNorm() * norm;
    }

    BpttSnnGrads g;
    g.loss = loss;
    g.W_in = Mat::Zero(N, p.Nc);
    g.W_rec = Mat::Zero(N, N);
    g.W_out = Mat::Zero(p.d2, N);
    g.theta_mem = Vec::Zero(N);
    g.theta_syn = Vec::Zero(N);

    Vec g_alpha = Vec::Zero(N), g_kappa = Vec::Zero(N);
    Vec gs_next = Vec::Zero(N);      // dL/ds[t+1]
    Vec gvhat_next = Vec::Zero(N);   // dL/dVhat[t+1]
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        Vec s_prev = t > 0 ? Vec(S.col(t - 1)) : Vec(Vec::Zero(N));
        Vec v_prev(N);
        if (t > 0)
            for (Eigen::Index i = 0; i < N; ++i)
                v_prev(i) = O(i, t - 1) != 0.0 ? p.v_reset : Vhat(i, t - 1);
        else
            v_prev.setZero();

        Vec gy = 2.0 * norm * (p.W_out * S.col(t) - target.col(t));
        g.W_out.noalias() += gy * S.col(t).transpose();
        Vec gs = p.W_out.transpose() * gy + kappa.cwiseProduct(gs_next) +
                 p.W_rec.transpose() * alpha.cwiseProduct(gvhat_next);
        // spike path: o feeds s only; the reset is treated as constant
        Vec go = gs;
        // post-reset voltage feeds the next step's euler update
        Vec gv_post = (Vec::Ones(N) - alpha).cwiseProduct(gvhat_next);
        Vec gvhat(N);
        for (Eigen::Index i = 0; i < N; ++i) {
            const double d = 1.0 + p.beta_surrogate * std::abs(Vhat(i, t) - p.v_thresh);
            const double sur = 1.0 / (d * d);
            gvhat(i) = gv_post(i) * (1.0 - O(i, t)) + go(i) * sur;
        }
        Vec drive = p.W_in * c.data.col(t) + p.W_rec * s_prev;
        Vec gdrive = alpha.cwiseProduct(gvhat);
        g_alpha += gvhat.cwiseProduct(drive - v_prev);
        g_kappa += gs.cwiseProduct(s_prev);
        g.W_in.noalias() += gdrive * c.data.col(t).transpose();
        g.W_rec.noalias() += gdrive * s_prev.transpose();
        gs_next = gs;
        gvhat_next = gvhat;
    }
    for (Eigen::Index i = 0; i < N; ++i) {
        const double dm = -dt / (tau_m(i) * tau_m(i)) * sigmoid(p.theta_mem(i));
        const double ds = dt / (tau_s(i) * tau_s(i)) * sigmoid(p.theta_syn(i));
        g.theta_mem(i) = g_alpha(i) * dm;
        g.theta_syn(i) = g_kappa(i) * ds;
    }
    return g;
}

BpttSnnParams bptt_snn_train(BpttSnnParams p, const std::vector<Sample>& data,
                             const TrainConfig& cfg) {
    if (data.empty()) throw ParameterError("bptt_snn_train: empty dataset");
    AdamState a_in, a_rec, a_out, a_tm, a_ts;
    a_in.init(p.N, p.Nc);
    a_rec.init(p.N, p.N);
    a_out.init(p.d2, p.N);
    a_tm.init(p.N, 1);
    a_ts.init(p.N, 1);

    auto eng = make_engine(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    int t_adam = 0;
    const int batches = std::max(1, cfg.samples_per_epoch / std::max(1, cfg.batch_size));
    for (int ep = 0; ep < cfg.epochs; ++ep) {
        for (int b = 0; b < batches; ++b) {
            Mat gin = Mat::Zero(p.N, p.Nc), grec = Mat::Zero(p.N, p.N);
            Mat gout = Mat::Zero(p.d2, p.N);
            Vec gtm = Vec::Zero(p.N), gts = Vec::Zero(p.N);
            double batch_loss = 0.0;
            for (int i = 0; i < cfg.batch_size; ++i) {
                const Sample& smp = data[pick(eng)];
                BpttSnnGrads g = bptt_snn_grads(p, smp.c, smp.target.data);
                if (!std::isfinite(g.loss))
                    throw TrainingError("bptt_snn_train: non-finite loss at epoch " +
                                        std::to_string(ep));
                gin += g.W_in;
                grec += g.W_rec;
                gout += g.W_out;
                gtm += g.theta_mem;
                gts += g.theta_syn;
                batch_loss += g.loss;
            }
            const double inv = 1.0 / double(cfg.batch_size);
            ++t_adam;
            a_in.step(p.W_in, gin * inv, cfg.learning_rate, t_adam);
            a_rec.step(p.W_rec, grec * inv, cfg.learning_rate, t_adam);
            a_out.step(p.W_out, gout * inv, cfg.learning_rate, t_adam);
            Mat tm = p.theta_mem, ts = p.theta_syn;
            a_tm.step(tm, Mat(gtm * inv), cfg.learning_rate, t_adam);
            a_ts.step(ts, Mat(gts * inv), cfg.learning_rate, t_adam);
            p.theta_mem = tm;
            p.theta_syn = ts;
            (void)batch_loss;
        }
    }
    return p;
}

// ---------------------------------------------------------------- json

Json ReservoirParams::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["architecture"] = "reservoir";
    j["N"] = N;
    j["Nc"] = Nc;
    j["d2"] = d2;
    j["W_in"] = mat_to_json(W_in);
    j["W_rec"] = mat_to_json(W_rec);
    j["tau_mem"] = vec_to_json(tau_mem);
    j["tau_syn"] = vec_to_json(tau_syn);
    j["W_out"] = mat_to_json(W_out);
    j["rate_lambda"] = rate_lambda;
    return j;
}

ReservoirParams ReservoirParams::from_json(const Json& j) {
    if (j.value("architecture", "") != "reservoir")
        throw IoError("reservoir params: architecture tag mismatch");
    ReservoirParams p;
    p.N = j.at("N").get<Eigen::Index>();
    p.Nc = j.at("Nc").get<Eigen::Index>();
    p.d2 = j.at("d2").get<Eigen::Index>();
    p.W_in = json_to_mat(j.at("W_in"));
    p.W_rec = json_to_mat(j.at("W_rec"));
    p.tau_mem = json_to_vec(j.at("tau_mem"));
    p.tau_syn = json_to_vec(j.at("tau_syn"));
    p.W_out = json_to_mat(j.at("W_out"));
    p.rate_lambda = j.value("rate_lambda", 20.0);
    if (p.W_rec.rows() != p.N || p.W_in.rows() != p.N || p.W_out.cols() != p.N)
        throw IoError("reservoir params: inconsistent shapes");
    return p;
}

Json ForceParams::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["architecture"] = "force";
    j["N"] = N;
    j["Nc"] = Nc;
    j["N_hat"] = N_hat;
    j["W_in"] = mat_to_json(W_in);
    j["W_rec"] = mat_to_json(W_rec);
    j["W_fb"] = mat_to_json(W_fb);
    j["W_dec"] = mat_to_json(W_dec);
    j["tau_mem"] = tau_mem;
    j["tau_syn"] = tau_syn;
    j["alpha"] = alpha;
    j["i_bias"] = i_bias;
    return j;
}

ForceParams ForceParams::from_json(const Json& j) {
    if (j.value("architecture", "") != "force")
        throw IoError("force params: architecture tag mismatch");
    ForceParams p;
    p.N = j.at("N").get<Eigen::Index>();
    p.Nc = j.at("Nc").get<Eigen::Index>();
    p.N_hat = j.at("N_hat").get<Eigen::Index>();
    p.W_in = json_to_mat(j.at("W_in"));
    p.W_rec = json_to_mat(j.at("W_rec"));
    p.W_fb = json_to_mat(j.at("W_fb"));
    p.W_dec = json_to_mat(j.at("W_dec"));
    p.tau_mem = j.at("tau_mem").get<double>();
    p.tau_syn = j.at("tau_syn").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.i_bias = j.value("i_bias", 1.2);
    if (p.W_rec.rows() != p.N || p.W_dec.rows() != p.N_hat || p.W_dec.cols() != p.N)
        throw IoError("force params: inconsistent shapes");
    return p;
}

Json BpttSnnParams::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["architecture"] = "bptt_snn";
    j["N"] = N;
    j["Nc"] = Nc;
    j["d2"] = d2;
    j["W_in"] = mat_to_json(W_in);
    j["W_rec"] = mat_to_json(W_rec);
    j["W_out"] = mat_to_json(W_out);
    j["theta_mem"] = vec_to_json(theta_mem);
    j["theta_syn"] = vec_to_json(theta_syn);
    j["beta_surrogate"] = beta_surrogate;
    return j;
}

BpttSnnParams BpttSnnParams::from_json(const Json& j) {
    if (j.value("architecture", "") != "bptt_snn")
        throw IoError("bptt params: architecture tag mismatch");
    BpttSnnParams p;
    p.N = j.at("N").get<Eigen::Index>();
    p.Nc = j.at("Nc").get<Eigen::Index>();
    p.d2 = j.at("d2").get<Eigen::Index>();
    p.W_in = json_to_mat(j.at("W_in"));
    p.W_rec = json_to_mat(j.at("W_rec"));
    p.W_out = json_to_mat(j.at("W_out"));
    p.theta_mem = json_to_vec(j.at("theta_mem"));
    p.theta_syn = json_to_vec(j.at("theta_syn"));
    p.beta_surrogate = j.value("beta_surrogate", 10.0);
    if (p.W_rec.rows() != p.N || p.W_out.cols() != p.N)
        throw IoError("bptt params: inconsistent shapes");
    return p;
}

}  // namespace snn
