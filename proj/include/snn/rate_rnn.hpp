#pragma once

#include <functional>
#include <vector>

#include "snn/jsonio.hpp"
#include "snn/rng.hpp"
#include "snn/signal.hpp"

namespace snn {

// continuous-variable recurrent net, tau_j dx_j/dt = -x_j + (F c)_j + (W tanh x)_j + b_j
struct RateParams {
    Eigen::Index N_hat = 0;  // hidden units
    Eigen::Index Nc = 0;     // input channels
    Eigen::Index d2 = 0;     // output channels
    Vec tau;                 // per-unit time constant, seconds
    Mat F_hat;               // N_hat x Nc
    Mat Omega_hat;           // N_hat x N_hat
    Vec b;                   // N_hat
    Mat D_hat;               // d2 x N_hat

    Json to_json() const;
    static RateParams from_json(const Json& j);
};

RateParams init_rate(Eigen::Index N_hat, Eigen::Index Nc, Eigen::Index d2, Seed seed);

struct RateTrajectory {
    Mat x;         // N_hat x T, state after each Euler step
    TimeSeries y;  // d2 x T
};

// x(0) = x0 (zero when empty); c drives T steps of size c.dt
RateTrajectory simulate_rate(const RateParams& p, const TimeSeries& c,
                             const Vec& x0 = Vec());

struct Sample {
    TimeSeries c;
    TimeSeries target;
};

struct TrainConfig {
    int epochs = 20;
    int samples_per_epoch = 500;
    double learning_rate = 1e-3;
    int batch_size = 25;
    Seed seed = 0;
};

// loss and gradients for one batch; tau enters through theta with
// tau = tau_min + softplus(theta), tau_min = 1 ms
struct RateGrads {
    double loss = 0.0;
    Vec theta;
    Mat F_hat;
    Mat Omega_hat;
    Vec b;
    Mat D_hat;
};

RateGrads rate_loss_grads(const RateParams& p, const std::vector<const Sample*>& batch);

using EpochCallback = std::function<void(int epoch, double train_loss)>;

// Adam; returns the epoch snapshot with the lowest full-set training loss
RateParams bptt_train(const RateParams& init, const std::vector<Sample>& data,
                      const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace snn
