#include "snn/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "snn/rng.hpp"

namespace snn {

double mismatch_scalar(double theta, double delta, std::mt19937_64& eng) {
    double sd = delta * std::abs(theta);
    if (sd == 0.0) return theta;
    std::normal_distribution<double> dist(theta, sd);
    return dist(eng);
}

double mismatch_tau(double tau, double delta, std::mt19937_64& eng) {
    double sd = delta * std::abs(tau);
    if (sd == 0.0) return tau;
    std::normal_distribution<double> dist(tau, sd);
    double t = dist(eng);
    while (t <= 0.0) t = dist(eng);
    return t;
}

Mat mismatch_matrix(const Mat& W, double delta, std::mt19937_64& eng) {
    Mat out(W.rows(), W.cols());
    // column-major to keep the draw order stable across call sites
    for (Eigen::Index j = 0; j < W.cols(); ++j)
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            out(i, j) = mismatch_scalar(W(i, j), delta, eng);
    return out;
}

Vec mismatch_vector(const Vec& v, double delta, std::mt19937_64& eng) {
    Vec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = mismatch_scalar(v(i), delta, eng);
    return out;
}

Vec mismatch_tau_vector(const Vec& tau, double delta, std::mt19937_64& eng) {
    Vec out(tau.size());
    for (Eigen::Index i = 0; i < tau.size(); ++i) out(i) = mismatch_tau(tau(i), delta, eng);
    return out;
}

DeployedAds apply_mismatch(const DeployedAds& net, const MismatchSpec& spec) {
    if (spec.delta < 0.0) throw ParameterError("mismatch delta must be >= 0");
    DeployedAds out = net;
    if (spec.delta == 0.0) return out;
    auto eng = make_engine(spec.seed);
    if (spec.targets & mm_weights) {
        out.D = mismatch_matrix(net.D, spec.delta, eng);
        out.F = mismatch_matrix(net.F, spec.delta, eng);
        out.Omega_f = mismatch_matrix(net.Omega_f, spec.delta, eng);
        out.Omega_s = mismatch_matrix(net.Omega_s, spec.delta, eng);
    }
    if (spec.targets & mm_thresholds)
        out.v_thresh = mismatch_vector(net.v_thresh, spec.delta, eng);
    if (spec.targets & mm_tau_syn) {
        out.tau_fast = mismatch_tau_vector(net.tau_fast, spec.delta, eng);
        out.tau_slow = mismatch_tau_vector(net.tau_slow, spec.delta, eng);
    }
    if (spec.targets & mm_tau_mem)
        out.tau_mem = mismatch_tau_vector(net.tau_mem, spec.delta, eng);
    return out;
}

DeployedReservoir apply_mismatch(const DeployedReservoir& net, const MismatchSpec& spec) {
    if (spec.delta < 0.0) throw ParameterError("mismatch delta must be >= 0");
    DeployedReservoir out = net;
    if (spec.delta == 0.0) return out;
    auto eng = make_engine(spec.seed);
    if (spec.targets & mm_weights) {
        out.W_in = mismatch_matrix(net.W_in, spec.delta, eng);
        out.W_rec = mismatch_matrix(net.W_rec, spec.delta, eng);
        out.W_out = mismatch_matrix(net.W_out, spec.delta, eng);
    }
    if (spec.targets & mm_thresholds)
        out.v_thresh = mismatch_vector(net.v_thresh, spec.delta, eng);
    if (spec.targets & mm_tau_syn)
        out.tau_syn = mismatch_tau_vector(net.tau_syn, spec.delta, eng);
    if (spec.targets & mm_tau_mem)
        out.tau_mem = mismatch_tau_vector(net.tau_mem, spec.delta, eng);
    return out;
}

DeployedForce apply_mismatch(const DeployedForce& net, const MismatchSpec& spec) {
    if (spec.delta < 0.0) throw ParameterError("mismatch delta must be >= 0");
    DeployedForce out = net;
    if (spec.delta == 0.0) return out;
    auto eng = make_engine(spec.seed);
    if (spec.targets & mm_weights) {
        out.W_in = mismatch_matrix(net.W_in, spec.delta, eng);
        out.W_rec = mismatch_matrix(net.W_rec, spec.delta, eng);
        out.W_fb = mismatch_matrix(net.W_fb, spec.delta, eng);
        out.W_dec = mismatch_matrix(net.W_dec, spec.delta, eng);
    }
    if (spec.targets & mm_thresholds)
        out.v_thresh = mismatch_vector(net.v_thresh, spec.delta, eng);
    if (spec.targets & mm_biases)
        out.i_bias = mismatch_vector(net.i_bias, spec.delta, eng);
    if (spec.targets & mm_tau_syn)
        out.tau_syn = mismatch_tau_vector(net.tau_syn, spec.delta, eng);
    if (spec.targets & mm_tau_mem)
        out.tau_mem = mismatch_tau_vector(net.tau_mem, spec.delta, eng);
    return out;
}

DeployedBpttSnn apply_mismatch(const DeployedBpttSnn& net, const MismatchSpec& spec) {
    if (spec.delta < 0.0) throw ParameterError("mismatch delta must be >= 0");
    DeployedBpttSnn out = net;
    if (spec.delta == 0.0) return out;
    auto eng = make_engine(spec.seed);
    if (spec.targets & mm_weights) {
        out.W_in = mismatch_matrix(net.W_in, spec.delta, eng);
        out.W_rec = mismatch_matrix(net.W_rec, spec.delta, eng);
        out.W_out = mismatch_matrix(net.W_out, spec.delta, eng);
    }
    if (spec.targets & mm_thresholds)
        out.v_thresh = mismatch_vector(net.v_thresh, spec.delta, eng);
    if (spec.targets & mm_tau_syn)
        out.tau_syn = mismatch_tau_vector(net.tau_syn, spec.delta, eng);
    if (spec.targets & mm_tau_mem)
        out.tau_mem = mismatch_tau_vector(net.tau_mem, spec.delta, eng);
    return out;
}

QuantResult quantize_weights(const Mat& W, const QuantSpec& spec) {
    if (spec.bits < 2 || spec.bits > 16)
        throw ParameterError("quantization bits must be in [2, 16]");
    QuantResult res;
    double lo = W.minCoeff();
    double hi = W.maxCoeff();
    if (hi == lo) {
        res.W = W;
        res.degenerate = true;
        return res;
    }
    double levels = std::pow(2.0, spec.bits) - 1.0;
    res.rho = (hi - lo) / levels;
    res.W = (W / res.rho).unaryExpr([](double x) { return std::round(x); }) * res.rho;
    return res;
}

DeployedAds quantize_weights(const DeployedAds& net, const QuantSpec& spec) {
    DeployedAds out = net;
    out.D = quantize_weights(net.D, spec).W;
    out.F = quantize_weights(net.F, spec).W;
    out.Omega_f = quantize_weights(net.Omega_f, spec).W;
    out.Omega_s = quantize_weights(net.Omega_s, spec).W;
    return out;
}

DeployedReservoir quantize_weights(const DeployedReservoir& net, const QuantSpec& spec) {
    DeployedReservoir out = net;
    out.W_in = quantize_weights(net.W_in, spec).W;
    out.W_rec = quantize_weights(net.W_rec, spec).W;
    out.W_out = quantize_weights(net.W_out, spec).W;
    return out;
}

DeployedForce quantize_weights(const DeployedForce& net, const QuantSpec& spec) {
    DeployedForce out = net;
    out.W_in = quantize_weights(net.W_in, spec).W;
    out.W_rec = quantize_weights(net.W_rec, spec).W;
    out.W_fb = quantize_weights(net.W_fb, spec).W;
    out.W_dec = quantize_weights(net.W_dec, spec).W;
    return out;
}

DeployedBpttSnn quantize_weights(const DeployedBpttSnn& net, const QuantSpec& spec) {
    DeployedBpttSnn out = net;
    out.W_in = quantize_weights(net.W_in, spec).W;
    out.W_rec = quantize_weights(net.W_rec, spec).W;
    out.W_out = quantize_weights(net.W_out, spec).W;
    return out;
}

SilenceMask silence_neurons(const SilenceSpec& spec, Eigen::Index N, double dt) {
    if (spec.fraction < 0.0 || spec.fraction > 1.0)
        throw ParameterError("silence fraction must be in [0, 1]");
    if (spec.t_end >= 0.0 && spec.t_start >= spec.t_end)
        throw ParameterError("silence window must satisfy t_start < t_end");
    SilenceMask mask;
    auto n_off = static_cast<Eigen::Index>(std::floor(spec.fraction * double(N)));
    std::vector<int> idx(static_cast<std::size_t>(N));
    std::iota(idx.begin(), idx.end(), 0);
    auto eng = make_engine(spec.seed);
    std::shuffle(idx.begin(), idx.end(), eng);
    idx.resize(static_cast<std::size_t>(n_off));
    std::sort(idx.begin(), idx.end());
    mask.neurons = std::move(idx);
    mask.t_start = static_cast<Eigen::Index>(std::llround(spec.t_start / dt));
    mask.t_end = spec.t_end < 0.0 ? -1 : static_cast<Eigen::Index>(std::llround(spec.t_end / dt));
    return mask;
}

}  // namespace snn
