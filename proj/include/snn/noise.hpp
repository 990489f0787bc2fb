#pragma once

#include <random>

#include "snn/ads.hpp"
#include "snn/baselines.hpp"
#include "snn/signal.hpp"

namespace snn {

// deployment-noise transforms: parameter mismatch, weight quantization and
// neuron silencing; thermal noise is a simulation option, see AdsSimOptions

enum MismatchTarget : unsigned {
    mm_weights = 1u << 0,
    mm_thresholds = 1u << 1,
    mm_biases = 1u << 2,
    mm_tau_syn = 1u << 3,
    mm_tau_mem = 1u << 4,
    mm_all = 0x1fu,
};

struct MismatchSpec {
    double delta = 0.0;  // fractional spread, theta' ~ N(theta, delta |theta|)
    unsigned targets = mm_all;
    Seed seed = 0;
};

struct QuantSpec {
    int bits = 4;  // grid of 2^bits levels spanning [min W, max W]
};

struct QuantResult {
    Mat W;
    double rho = 0.0;  // grid step
    bool degenerate = false;  // constant matrix, W returned unchanged
};

// fractional silencing spec; silence_neurons draws the concrete mask
struct SilenceSpec {
    double fraction = 0.0;
    double t_start = 0.0;  // seconds
    double t_end = -1.0;   // < 0: whole trial
    Seed seed = 0;
};

// draw primitives, exposed for moment checks
double mismatch_scalar(double theta, double delta, std::mt19937_64& eng);
// rejection-resampled until positive
double mismatch_tau(double tau, double delta, std::mt19937_64& eng);
Mat mismatch_matrix(const Mat& W, double delta, std::mt19937_64& eng);
Vec mismatch_vector(const Vec& v, double delta, std::mt19937_64& eng);
Vec mismatch_tau_vector(const Vec& tau, double delta, std::mt19937_64& eng);

// perturbs the deployed copy only; F and D drift apart, nothing re-ties F = D^T.
// draw order: D, F, Omega_f, Omega_s, v_thresh, tau_fast, tau_slow, tau_mem.
// the ADS has no bias parameters, the biases target is a no-op here.
DeployedAds apply_mismatch(const DeployedAds& net, const MismatchSpec& spec);

QuantResult quantize_weights(const Mat& W, const QuantSpec& spec);

// per-matrix grids over D, F, Omega_f, Omega_s
DeployedAds quantize_weights(const DeployedAds& net, const QuantSpec& spec);

// same transforms for the comparison architectures; draw orders:
//   reservoir: W_in, W_rec, W_out, v_thresh, tau_syn, tau_mem
//   force:     W_in, W_rec, W_fb, W_dec, v_thresh, i_bias, tau_syn, tau_mem
//   bptt:      W_in, W_rec, W_out, v_thresh, tau_syn, tau_mem
DeployedReservoir apply_mismatch(const DeployedReservoir& net, const MismatchSpec& spec);
DeployedForce apply_mismatch(const DeployedForce& net, const MismatchSpec& spec);
DeployedBpttSnn apply_mismatch(const DeployedBpttSnn& net, const MismatchSpec& spec);

DeployedReservoir quantize_weights(const DeployedReservoir& net, const QuantSpec& spec);
DeployedForce quantize_weights(const DeployedForce& net, const QuantSpec& spec);
DeployedBpttSnn quantize_weights(const DeployedBpttSnn& net, const QuantSpec& spec);

// uniform subset of floor(fraction * N) neurons, window converted to steps at dt
SilenceMask silence_neurons(const SilenceSpec& spec, Eigen::Index N, double dt);

}  // namespace snn
