#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>

namespace snn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& m) : std::runtime_error(m) {}
};
struct ParameterError : std::runtime_error {
    explicit ParameterError(const std::string& m) : std::runtime_error(m) {}
};
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& m) : std::runtime_error(m) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

// regular-grid multichannel signal, rows = channels, cols = steps
struct TimeSeries {
    Mat data;
    double dt = 1e-3;

    TimeSeries() = default;
    TimeSeries(Mat d, double dt_);

    Eigen::Index channels() const { return data.rows(); }
    Eigen::Index steps() const { return data.cols(); }
    double duration() const { return static_cast<double>(data.cols()) * dt; }

    static TimeSeries zeros(Eigen::Index channels, Eigen::Index steps, double dt);

    void to_csv(const std::string& path) const;
    static TimeSeries from_csv(const std::string& path);
};

// binary spike trains, rows = neurons, cols = steps
struct SpikeRaster {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> spikes;

    Eigen::Index neurons() const { return spikes.rows(); }
    Eigen::Index steps() const { return spikes.cols(); }
    long total_spikes() const;

    static SpikeRaster zeros(Eigen::Index neurons, Eigen::Index steps);
};

double mse(const TimeSeries& a, const TimeSeries& b);

// forward-Euler membrane step shared by every architecture,
// V += alpha (drive - V) with alpha = dt / tau_mem
inline void euler_membrane(Vec& V, const Vec& alpha, const Vec& drive) {
    V += alpha.cwiseProduct(drive - V);
}

// threshold crossings: o set to 0/1, crossed neurons reset; returns spike count
inline long fire_and_reset(Vec& V, const Vec& v_thresh, const Vec& v_reset, Vec& o) {
    long n = 0;
    for (Eigen::Index i = 0; i < V.size(); ++i) {
        if (V(i) > v_thresh(i)) {
            V(i) = v_reset(i);
            o(i) = 1.0;
            ++n;
        } else {
            o(i) = 0.0;
        }
    }
    return n;
}

// leaky integration of spikes, r[t] = r[t-1]*(1 - lambda*dt) + spikes[t];
// a single spike contributes exactly 1 at its own step
TimeSeries exp_filter(const SpikeRaster& raster, double lambda, double dt);

// first threshold crossing decides; |y| breaks the (quantization-only) tie;
// no crossing -> nullopt
std::optional<int> classify_by_threshold(const TimeSeries& y, double theta);

}  // namespace snn
