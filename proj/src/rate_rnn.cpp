#include "snn/rate_rnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snn {

namespace {

constexpr double kTauMin = 1e-3;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double inv_softplus(double y) {
    // y > 0; inverse of log1p(exp(x))
    return y > 30.0 ? y : std::log(std::expm1(y));
}
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec tau_to_theta(const Vec& tau) {
    Vec th(tau.size());
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
        if (tau(i) <= kTauMin) throw ParameterError("rate tau must exceed 1 ms");
        th(i) = inv_softplus(tau(i) - kTauMin);
    }
    return th;
}

Vec theta_to_tau(const Vec& th) {
    Vec tau(th.size());
    for (Eigen::Index i = 0; i < th.size(); ++i) tau(i) = kTauMin + softplus(th(i));
    return tau;
}

struct Batch {
    std::vector<Mat> c;      // per step, Nc x B
    std::vector<Mat> tgt;    // per step, d2 x B
    Eigen::Index T = 0, B = 0;
    double dt = 0.0;
};

Batch assemble(const RateParams& p, const std::vector<const Sample*>& samples) {
    if (samples.empty()) throw ParameterError("empty batch");
    Batch ba;
    ba.B = static_cast<Eigen::Index>(samples.size());
    ba.T = samples[0]->c.steps();
    ba.dt = samples[0]->c.dt;
    for (const Sample* s : samples) {
        if (s->c.channels() != p.Nc || s->target.channels() != p.d2)
            throw DimensionError("sample channel mismatch");
        if (s->c.steps() != ba.T || s->target.steps() != ba.T || s->c.dt != ba.dt)
            throw DimensionError("sample grid mismatch");
    }
    ba.c.resize(ba.T);
    ba.tgt.resize(ba.T);
    for (Eigen::Index t = 0; t < ba.T; ++t) {
        ba.c[t].resize(p.Nc, ba.B);
        ba.tgt[t].resize(p.d2, ba.B);
        for (Eigen::Index k = 0; k < ba.B; ++k) {
            ba.c[t].col(k) = samples[k]->c.data.col(t);
            ba.tgt[t].col(k) = samples[k]->target.data.col(t);
        }
    }
    return ba;
}

double batch_loss(const RateParams& p, const Batch& ba) {
    const Vec alpha = (ba.dt / p.tau.array()).matrix();
    Mat x = Mat::Zero(p.N_hat, ba.B);
    double acc = 0.0;
    for (Eigen::Index t = 0; t < ba.T; ++t) {
        Mat u = -x + p.F_hat * ba.c[t] + p.Omega_hat * x.array().tanh().matrix();
        u.colwise() += p.b;
        x += alpha.asDiagonal() * u;
        acc += (p.D_hat * x - ba.tgt[t]).array().square().sum();
    }
    return acc / static_cast<double>(p.d2 * ba.T * ba.B);
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

}  // namespace

Json RateParams::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["architecture"] = "rate";
    j["N_hat"] = N_hat;
    j["Nc"] = Nc;
    j["d2"] = d2;
    j["tau"] = vec_to_json(tau);
    j["F_hat"] = mat_to_json(F_hat);
    j["Omega_hat"] = mat_to_json(Omega_hat);
    j["b"] = vec_to_json(b);
    j["D_hat"] = mat_to_json(D_hat);
    return j;
}

RateParams RateParams::from_json(const Json& j) {
    if (j.value("format_version", 0) != 1) throw IoError("rate params: unknown format_version");
    if (j.value("architecture", "") != "rate") throw IoError("rate params: wrong architecture tag");
    RateParams p;
    p.N_hat = j.at("N_hat").get<Eigen::Index>();
    p.Nc = j.at("Nc").get<Eigen::Index>();
    p.d2 = j.at("d2").get<Eigen::Index>();
    p.tau = json_to_vec(j.at("tau"));
    p.F_hat = json_to_mat(j.at("F_hat"));
    p.Omega_hat = json_to_mat(j.at("Omega_hat"));
    p.b = json_to_vec(j.at("b"));
    p.D_hat = json_to_mat(j.at("D_hat"));
    if (p.tau.size() != p.N_hat || p.F_hat.rows() != p.N_hat || p.F_hat.cols() != p.Nc ||
        p.Omega_hat.rows() != p.N_hat || p.Omega_hat.cols() != p.N_hat ||
        p.b.size() != p.N_hat || p.D_hat.rows() != p.d2 || p.D_hat.cols() != p.N_hat)
        throw IoError("rate params: inconsistent shapes");
    return p;
}

RateParams init_rate(Eigen::Index N_hat, Eigen::Index Nc, Eigen::Index d2, Seed seed) {
    if (N_hat < 1 || Nc < 1 || d2 < 1) throw ParameterError("init_rate: bad sizes");
    auto eng = make_engine(seed);
    RateParams p;
    p.N_hat = N_hat;
    p.Nc = Nc;
    p.d2 = d2;
    p.tau = Vec::LinSpaced(N_hat, 0.010, 0.100);
    p.F_hat = gaussian_matrix(N_hat, Nc, 1.0 / std::sqrt(double(Nc)), eng);
    p.Omega_hat = gaussian_matrix(N_hat, N_hat, 1.0 / std::sqrt(double(N_hat)), eng);
    p.b = Vec::Zero(N_hat);
    p.D_hat = gaussian_matrix(d2, N_hat, 1.0 / std::sqrt(double(N_hat)), eng);
    return p;
}

RateTrajectory simulate_rate(const RateParams& p, const TimeSeries& c, const Vec& x0) {
    if (c.channels() != p.Nc) throw DimensionError("simulate_rate: input channels != Nc");
    if (x0.size() != 0 && x0.size() != p.N_hat)
        throw DimensionError("simulate_rate: bad x0 size");
    const Eigen::Index T = c.steps();
    const Vec alpha = (c.dt / p.tau.array()).matrix();
    Vec x = x0.size() ? x0 : Vec::Zero(p.N_hat);
    RateTrajectory out;
    out.x.resize(p.N_hat, T);
    out.y = TimeSeries::zeros(p.d2, T, c.dt);
    for (Eigen::Index t = 0; t < T; ++t) {
        Vec u = -x + p.F_hat * c.data.col(t) + p.Omega_hat * x.array().tanh().matrix() + p.b;
        x += alpha.cwiseProduct(u);
        out.x.col(t) = x;
        out.y.data.col(t) = p.D_hat * x;
    }
    return out;
}

RateGrads rate_loss_grads(const RateParams& p, const std::vector<const Sample*>& batch) {
    Batch ba = assemble(p, batch);
    const Eigen::Index T = ba.T, B = ba.B, N = p.N_hat;
    const Vec theta = tau_to_theta(p.tau);
    const Vec tau = theta_to_tau(theta);
    const Vec alpha = (ba.dt / tau.array()).matrix();

    std::vector<Mat> xs(T + 1);
    xs[0] = Mat::Zero(N, B);
    std::vector<Mat> ydiff(T);
    double acc = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        Mat u = -xs[t] + p.F_hat * ba.c[t] + p.Omega_hat * xs[t].array().tanh().matrix();
        u.colwise() += p.b;
        xs[t + 1] = xs[t] + alpha.asDiagonal() * u;
        ydiff[t] = p.D_hat * xs[t + 1] - ba.tgt[t];
        acc += ydiff[t].array().square().sum();
    }
    const double norm = static_cast<double>(p.d2 * T * B);

    RateGrads g;
    g.loss = acc / norm;
    g.theta = Vec::Zero(N);
    g.F_hat = Mat::Zero(N, p.Nc);
    g.Omega_hat = Mat::Zero(N, N);
    g.b = Vec::Zero(N);
    g.D_hat = Mat::Zero(p.d2, N);

    Vec galpha = Vec::Zero(N);
    Mat gx = Mat::Zero(N, B);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        Mat gy = (2.0 / norm) * ydiff[t];
        gx += p.D_hat.transpose() * gy;
        g.D_hat += gy * xs[t + 1].transpose();
        // recover the drive instead of storing it
        Mat u = (xs[t + 1] - xs[t]).array().colwise() / alpha.array();
        galpha += gx.cwiseProduct(u).rowwise().sum();
        Mat gu = gx.array().colwise() * alpha.array();
        Mat a = xs[t].array().tanh();
        g.F_hat += gu * ba.c[t].transpose();
        g.b += gu.rowwise().sum();
        g.Omega_hat += gu * a.transpose();
        gx = (gx.array() * (1.0 - alpha.array()).replicate(1, B)).matrix() +
             (p.Omega_hat.transpose() * gu).cwiseProduct((1.0 - a.array().square()).matrix());
    }
    for (Eigen::Index i = 0; i < N; ++i) {
        const double dtau = galpha(i) * (-ba.dt / (tau(i) * tau(i)));
        g.theta(i) = dtau * sigmoid(theta(i));
    }
    return g;
}

RateParams bptt_train(const RateParams& init, const std::vector<Sample>& data,
                      const TrainConfig& cfg, const EpochCallback& on_epoch) {
    if (data.empty()) throw ParameterError("bptt_train: empty dataset");
    if (cfg.batch_size < 1 || cfg.epochs < 1 || cfg.learning_rate <= 0.0)
        throw ParameterError("bptt_train: bad config");

    RateParams p = init;
    Vec theta = tau_to_theta(p.tau);

    AdamState a_th, a_F, a_W, a_b, a_D;
    a_th.init(p.N_hat, 1);
    a_F.init(p.N_hat, p.Nc);
    a_W.init(p.N_hat, p.N_hat);
    a_b.init(p.N_hat, 1);
    a_D.init(p.d2, p.N_hat);

    std::vector<const Sample*> all;
    all.reserve(data.size());
    for (const auto& s : data) all.push_back(&s);
    Batch full = assemble(p, all);

    RateParams best = p;
    double best_loss = batch_loss(p, full);

    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    auto eng = make_engine(derive_seed(cfg.seed, {0x7261746574726eULL}));

    const int per_epoch = std::min<int>(cfg.samples_per_epoch, static_cast<int>(data.size()));
    int adam_t = 0;
    for (int ep = 0; ep < cfg.epochs; ++ep) {
        std::shuffle(order.begin(), order.end(), eng);
        for (int k = 0; k < per_epoch; k += cfg.batch_size) {
            const int kk = std::min<int>(k + cfg.batch_size, per_epoch);
            std::vector<const Sample*> batch;
            for (int i = k; i < kk; ++i) batch.push_back(&data[order[i]]);
            RateGrads g = rate_loss_grads(p, batch);
            if (!std::isfinite(g.loss))
                throw TrainingError("bptt_train: non-finite loss at epoch " +
                                    std::to_string(ep) + " batch " + std::to_string(k));
            ++adam_t;
            Mat th = theta, gth = g.theta;
            a_th.step(th, gth, cfg.learning_rate, adam_t);
            theta = th;
            a_F.step(p.F_hat, g.F_hat, cfg.learning_rate, adam_t);
            a_W.step(p.Omega_hat, g.Omega_hat, cfg.learning_rate, adam_t);
            Mat bb = p.b, gb = g.b;
            a_b.step(bb, gb, cfg.learning_rate, adam_t);
            p.b = bb;
            a_D.step(p.D_hat, g.D_hat, cfg.learning_rate, adam_t);
            p.tau = theta_to_tau(theta);
        }
        const double l = batch_loss(p, full);
        if (!std::isfinite(l))
            throw TrainingError("bptt_train: non-finite epoch loss at epoch " +
                                std::to_string(ep));
        if (l < best_loss) {
            best_loss = l;
            best = p;
        }
        if (on_epoch) on_epoch(ep, l);
    }
    return best;
}

}  // namespace snn
