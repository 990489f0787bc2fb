#pragma once

#include <optional>
#include <vector>

#include "snn/jsonio.hpp"
#include "snn/rate_rnn.hpp"
#include "snn/rng.hpp"
#include "snn/signal.hpp"

namespace snn {

// balanced-network constants; voltages live on [v_reset, v_thresh] with the
// leak pulling toward v_rest
struct EbnConfig {
    double mu = 5e-4;
    double nu = 1e-4;
    double lambda_d = 20.0;  // decoder filter rate, 1/s
    double tau_mem = 0.050;
    double tau_fast = 0.001;
    double tau_slow = 0.070;
    double v_thresh = 1.0;
    double v_reset = 0.0;
    double v_rest = 0.5;
    // representation gain: the network tracks state_scale * xhat and the task
    // readout divides it back out; spike quanta are fixed by |D_n| and V*, so
    // scaling the represented state shrinks the relative quantization floor
    double state_scale = 1.0;

    // per-spike fast kick in voltage units equals Omega_f_star row / V_star
    double fast_gain() const { return tau_mem / (2.0 * tau_fast); }
};

struct AdsParams {
    Eigen::Index N = 0;      // spiking neurons
    Eigen::Index N_hat = 0;  // decoded dimensions
    EbnConfig cfg;
    Mat D;        // N_hat x N decoder
    Mat F;        // N x N_hat encoder, D^T at initialization
    Mat Omega_f;  // N x N fast recurrent
    Mat Omega_s;  // N x N slow recurrent, learned
    std::string teacher_hash;

    Json to_json() const;
    static AdsParams from_json(const Json& j);
};

// deployment view: hardware perturbations act per neuron and may break F = D^T
struct DeployedAds {
    EbnConfig cfg;
    Mat D, F, Omega_f, Omega_s;
    Vec v_thresh;    // per neuron
    Vec tau_mem;     // per neuron
    Vec tau_fast;    // per neuron (fast synapse)
    Vec tau_slow;    // per neuron (slow synapse)
    Vec drive_gain;  // per neuron, 1/(2 V*); normalized-unit factor on external currents
};

// expands scalar constants per neuron and zeroes the fast diagonal (the
// explicit reset realizes the self-kick)
DeployedAds deploy(const AdsParams& p);

// V*_n = (nu lambda_d + mu lambda_d^2 + |D_n|^2) / 2, the pre-transform threshold
Vec pre_transform_thresholds(const Mat& D, const EbnConfig& cfg);

Mat init_decoder(Eigen::Index N_hat, Eigen::Index N, Seed seed);  // N(0, 1/N_hat)

// Omega_f_star = D^T D + mu lambda_d^2 I
// V_star_n     = (nu lambda_d + mu lambda_d^2 + |D_n|^2) / 2
// Omega_f      = fast_gain * row-normalized Omega_f_star
Mat init_fast_weights(const Mat& D, const EbnConfig& cfg);

AdsParams init_ads(Eigen::Index N_hat, Eigen::Index N, Seed seed, EbnConfig cfg = {});

// per-unit drive the spiking net receives, ctilde_j = ((F_hat c)_j + b_j) / tau_j
TimeSeries make_spiking_input(const RateParams& teacher, const TimeSeries& c);

struct SilenceMask {
    std::vector<int> neurons;
    Eigen::Index t_start = 0;
    Eigen::Index t_end = -1;  // -1: end of trial
};

struct AdsSimOptions {
    double k = 0.0;            // error feedback gain, 1/s
    double eta = 0.0;          // slow learning rate; 0 disables learning
    double sigma_thermal = 0.0;
    Seed noise_seed = 0;
    const SilenceMask* silence = nullptr;
    bool record_raster = false;
    Mat* rule_accumulator = nullptr;  // collects the raw rule terms instead of applying them
};

struct AdsSimResult {
    TimeSeries r;       // N x T filtered rates
    TimeSeries xtilde;  // N_hat x T decoded state
    SpikeRaster raster;
    double mean_abs_err = 0.0;
    long spike_count = 0;
};

// forward Euler at ctilde.dt; input and error feedback enter the membrane as
// tau_mem-scaled, drive_gain-normalized currents so their steady-state voltage
// matches the dv/dt form in threshold-normalized units; when opts.eta > 0,
// Omega_s integrates eta (gain * D^T e) r^T per step, pairing the error with
// the rate trace that produced it, diagonal held at zero
AdsSimResult simulate_ads(DeployedAds& net, const TimeSeries& ctilde, const Mat& xhat,
                          const AdsSimOptions& opts);

struct KSchedule {
    enum class Mode { fixed, step } mode = Mode::fixed;
    double k0 = 75.0;
    double k_end = 25.0;
    int n_steps = 8;
    int trials_per_step = 1;

    double value(long trial) const;  // step mode requires n_steps >= 2
};

// one distillation trial: spiking drive plus the teacher state trajectory it
// should reproduce
struct DistillSample {
    TimeSeries ctilde;
    Mat xhat;  // N_hat x T
};

std::vector<DistillSample> make_distill_set(const RateParams& teacher,
                                            const std::vector<Sample>& tasks);

// FNV-1a over the serialized parameters, stored with distilled networks
std::string rate_params_hash(const RateParams& p);

struct TrainSlowReport {
    std::vector<double> mean_abs_err;  // per sample
    long total_spikes = 0;
    long averaged_samples = 0;
};

// sequential per-sample distillation against the teacher state trajectory;
// avg_from >= 0 stores the tail average of the per-sample Omega_s iterates
// from that sample on, which strips the stochastic drift of the rule
TrainSlowReport train_slow(AdsParams& p, const std::vector<DistillSample>& data,
                           const KSchedule& ks, double eta, long avg_from = -1);

// accumulates the rule over each sample, then applies one normalized update;
// update is skipped (and counted) when the accumulated sum is degenerate
struct BatchedTrainReport {
    std::vector<double> mean_abs_err;
    int skipped_updates = 0;
};

BatchedTrainReport train_slow_batched(AdsParams& p, const std::vector<DistillSample>& data,
                                      const KSchedule& ks, double eta);

// y = D_hat (D r) / state_scale
TimeSeries decode_task_output(const RateParams& teacher, const AdsParams& p,
                              const TimeSeries& r);

}  // namespace snn
