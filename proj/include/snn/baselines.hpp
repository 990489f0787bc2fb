#pragma once

#include <vector>

#include "snn/ads.hpp"
#include "snn/jsonio.hpp"
#include "snn/rate_rnn.hpp"
#include "snn/signal.hpp"
#include "snn/tasks.hpp"

namespace snn {

// comparison trainers: liquid-state reservoir with ridge readout, FORCE with
// recursive least squares on the teacher state, surrogate-gradient BPTT

// ridge regression over concatenated time steps, returns d x n mapping
// minimizing |Y - W R|^2 + lambda |W|^2; R is n x T, Y is d x T
Mat ridge_fit(const Mat& R, const Mat& Y, double lambda);

// ---------------------------------------------------------------- reservoir

struct ReservoirParams {
    Eigen::Index N = 768, Nc = 1, d2 = 1;
    Mat W_in;     // N x Nc
    Mat W_rec;    // N x N, never trained
    Vec tau_mem;  // per neuron, U[1e-4, 0.112] s
    Vec tau_syn;
    Mat W_out;    // d2 x N over lambda_d-filtered rates, zero until trained
    double v_thresh = 1.0, v_reset = 0.0;
    double rate_lambda = 20.0;  // readout filter
    double w_in_scale = 2.0, w_rec_gain = 1.5;

    Json to_json() const;
    static ReservoirParams from_json(const Json& j);
};

ReservoirParams init_reservoir(Eigen::Index N, Eigen::Index Nc, Eigen::Index d2, Seed seed);

struct DeployedReservoir {
    Mat W_in, W_rec, W_out;
    Vec tau_mem, tau_syn, v_thresh, v_reset;
    double rate_lambda = 20.0;
};

DeployedReservoir deploy(const ReservoirParams& p);

struct BaselineSimOptions {
    double sigma_thermal = 0.0;
    Seed noise_seed = 0;
    const SilenceMask* silence = nullptr;
    bool record_raster = false;
};

struct BaselineSimResult {
    TimeSeries r;  // readout basis, N x T
    TimeSeries y;  // d2 x T
    SpikeRaster raster;
    long spike_count = 0;
};

BaselineSimResult simulate_reservoir(const DeployedReservoir& net, const TimeSeries& c,
                                     const BaselineSimOptions& opts = {});

// closed-form readout over the whole dataset; recurrent weights untouched
Mat reservoir_train(ReservoirParams& p, const std::vector<Sample>& data, double lambda);

// grid {1e-6 .. 1e0} picked on a held-out tail of the dataset
Mat reservoir_train_auto(ReservoirParams& p, const std::vector<Sample>& data,
                         double holdout_fraction = 0.2);

// -------------------------------------------------------------------- FORCE

// raw task input paired with the teacher state trajectory it produced
struct TeacherSample {
    TimeSeries c;
    Mat xhat;  // N_hat x T
};

std::vector<TeacherSample> make_teacher_set(const RateParams& teacher,
                                            const std::vector<Sample>& tasks);

struct ForceParams {
    Eigen::Index N = 768, Nc = 1, N_hat = 64;
    Mat W_in;   // N x Nc
    Mat W_rec;  // N x N, static
    Mat W_fb;   // N x N_hat, feedback of the decoded estimate
    Mat W_dec;  // N_hat x N, RLS-learned
    double tau_mem = 0.010, tau_syn = 0.020;
    double alpha = 1e-5;    // P(0) = I / alpha
    double i_bias = 1.2;    // tonic suprathreshold drive
    double v_thresh = 1.0, v_reset = 0.0;
    double w_in_scale = 1.0, w_rec_gain = 1.5, w_fb_scale = 1.0;

    Json to_json() const;
    static ForceParams from_json(const Json& j);
};

ForceParams init_force(Eigen::Index N, Eigen::Index Nc, Eigen::Index N_hat, Seed seed);

struct DeployedForce {
    Mat W_in, W_rec, W_fb, W_dec;
    Vec tau_mem, tau_syn, v_thresh, v_reset;
    Vec i_bias;  // per neuron, a mismatch target
};

DeployedForce deploy(const ForceParams& p);

// one shared-P RLS step: P <- P - (P r r^T P) / (1 + r^T P r),
// W_dec row-updated with gain P r against err = W_dec r - target
void rls_update(Mat& P, Mat& W_dec, const Vec& r, const Vec& err);

struct ForceTrainReport {
    std::vector<double> epoch_mse;  // decoded-state MSE per epoch
    int p_reinits = 0;              // positive definiteness lost
};

// RLS every update_every steps while simulating with decoded feedback
ForceTrainReport force_train(ForceParams& p, const std::vector<TeacherSample>& data,
                             int epochs, int update_every = 2);

struct ForceSimResult {
    TimeSeries x_dec;  // N_hat x T decoded state
    TimeSeries r;      // synaptic traces
    SpikeRaster raster;
    long spike_count = 0;
};

ForceSimResult simulate_force(const DeployedForce& net, const TimeSeries& c,
                              const BaselineSimOptions& opts = {});

// ---------------------------------------------------------------- BPTT SNN

struct BpttSnnParams {
    Eigen::Index N = 768, Nc = 1, d2 = 1;
    Mat W_in;   // N x Nc
    Mat W_rec;  // N x N
    Mat W_out;  // d2 x N over the synaptic trace
    Vec theta_mem, theta_syn;  // tau = tau_min + softplus(theta), init 50/70 ms
    double beta_surrogate = 10.0;
    double v_thresh = 1.0, v_reset = 0.0;

    Vec tau_mem() const;
    Vec tau_syn() const;

    Json to_json() const;
    static BpttSnnParams from_json(const Json& j);
};

BpttSnnParams init_bptt_snn(Eigen::Index N, Eigen::Index Nc, Eigen::Index d2, Seed seed);

struct DeployedBpttSnn {
    Mat W_in, W_rec, W_out;
    Vec tau_mem, tau_syn, v_thresh, v_reset;
    double beta_surrogate = 10.0;
};

DeployedBpttSnn deploy(const BpttSnnParams& p);

BaselineSimResult simulate_bptt_snn(const DeployedBpttSnn& net, const TimeSeries& c,
                                    const BaselineSimOptions& opts = {});

struct BpttSnnGrads {
    Mat W_in, W_rec, W_out;
    Vec theta_mem, theta_syn;
    double loss = 0.0;
};

// forward pass is the deployed LIF exactly; backward replaces the spike
// Heaviside with sigma'(v) = 1 / (1 + beta |v - v_thresh|)^2 and treats the
// reset as constant
BpttSnnGrads bptt_snn_grads(const BpttSnnParams& p, const TimeSeries& c, const Mat& target);

BpttSnnParams bptt_snn_train(BpttSnnParams p, const std::vector<Sample>& data,
                             const TrainConfig& cfg);

}  // namespace snn
